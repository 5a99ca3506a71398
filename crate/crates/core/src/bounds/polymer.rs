//! Constants of the free-energy concentration inequalities for directed
//! polymers.

use super::{epsilon_thresholds, non_negative, positive, q_regime_constants, dual_rate};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `K = 2 exp(λ(β) + λ(−β))`, the bound on the conditional exponential
/// moment of each martingale difference of `ln W_n`.
pub fn polymer_k_constant<T: Real>(lambda_plus: T, lambda_minus: T) -> Result<T> {
    for (name, v) in [("lambda_plus", lambda_plus), ("lambda_minus", lambda_minus)] {
        if !v.is_finite() {
            return Err(Error::Domain {
                name,
                value: v.to_f64_lossy(),
                expected: "must be finite",
            });
        }
    }
    Ok(T::lit(2.0) * (lambda_plus + lambda_minus).exp())
}

/// `exp(L(t))` where `L(t) = λ(tβ) + λ(−tβ)` for `|t| > 1` and
/// `λ(−|t|β) + |t| λ(β)` for `|t| ≤ 1`: the conditional Laplace envelope of
/// a single martingale difference.
pub fn csy_laplace_envelope<T: Real>(
    t: T,
    beta: T,
    lambda: impl Fn(T) -> Result<T>,
) -> Result<T> {
    if !t.is_finite() {
        return Err(Error::Domain {
            name: "t",
            value: t.to_f64_lossy(),
            expected: "must be finite",
        });
    }
    positive("beta", beta)?;
    let at = t.abs();
    let l = if at > T::one() {
        lambda(t * beta)? + lambda(-t * beta)?
    } else {
        lambda(-at * beta)? + at * lambda(beta)?
    };
    Ok(l.exp())
}

/// `2√K √(d ln(2n)/n) + d ln(2n)/n`, the bound on
/// `p_−(β) − Q[ln W_n]/n`.
pub fn mean_rate_bound<T: Real>(n: u64, d: u32, k: T) -> Result<T> {
    if n == 0 || d == 0 {
        return Err(Error::Domain {
            name: if n == 0 { "n" } else { "d" },
            value: 0.0,
            expected: "must be >= 1",
        });
    }
    non_negative("k", k)?;
    let nf = T::from_u64(n).expect("n fits in T");
    let dn = T::from_u32(d).expect("d fits in T") * (T::lit(2.0) * nf).ln() / nf;
    Ok(T::lit(2.0) * k.sqrt() * dn.sqrt() + dn)
}

/// Constants of the Q-type free-energy concentration bound under
/// `K₀ = Q[e^{R|η|^Q}] < ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolymerQConstants<T> {
    pub q: T,
    pub rho: T,
    pub tau1: T,
    /// Laplace threshold on the environment scale (at least 1).
    pub t0: T,
    /// `2ρβτ₁ t0^{ρ−1}`: start of the `R₁ x^Q` regime.
    pub x_threshold: T,
    /// Solves `β(2ρτ₁)^{1/ρ}(Q R₁)^{1/Q} = 1`.
    pub r1: T,
    /// `max(4K, 4 ln 2 + 8τ₁ t0^ρ)`.
    pub a: T,
    /// `min(1/(6K), (√(δ+K) − √K)²/x_threshold²)` with `δ` the
    /// `ε = 1/2` threshold of the Bernstein refinement.
    pub b: T,
    /// `K = 2 exp(λ(β) + λ(−β))`.
    pub k: T,
}

/// Builds [`PolymerQConstants`] from the environment's `(Q, R, K₀)` moment,
/// a choice `τ₁ > τ`, and the log-moment values `λ(±β)`.
pub fn polymer_q_constants<T: Real>(
    beta: T,
    q: T,
    r: T,
    k0: T,
    tau1: T,
    lambda_plus: T,
    lambda_minus: T,
) -> Result<PolymerQConstants<T>> {
    positive("beta", beta)?;
    let env = q_regime_constants(q, r, k0, tau1)?;
    let rho = env.duality.rho();
    let t0 = env.t1.max(T::one());
    let two = T::lit(2.0);
    let x_threshold = two * rho * beta * tau1 * t0.powf(rho - T::one());
    // β(2ρτ₁)^{1/ρ}(QR₁)^{1/Q} = 1 is the plain duality with τ' = 2τ₁β^ρ.
    let r1 = dual_rate(q, two * tau1 * beta.powf(rho))?;
    let k = super::polymer_k_constant(lambda_plus, lambda_minus)?;
    let a = (T::lit(4.0) * k).max(T::lit(4.0) * two.ln() + T::lit(8.0) * tau1 * t0.powf(rho));
    let delta = epsilon_thresholds(k, T::lit(0.5))?.x0;
    let s = (delta + k).sqrt() - k.sqrt();
    let b = (T::one() / (T::lit(6.0) * k)).min(s * s / (x_threshold * x_threshold));
    Ok(PolymerQConstants {
        q,
        rho,
        tau1,
        t0,
        x_threshold,
        r1,
        a,
        b,
        k,
    })
}

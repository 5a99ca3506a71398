//! Closed-form constants, rate functions and conversion formulas for
//! exponential martingale inequalities.
//!
//! All evaluators are pure functions of their real parameters, generic over
//! [`Real`]. Non-finite inputs are rejected with [`Error::Domain`].
//!
//! Bounds that hold under a conditional exponential moment averaged over
//! the increments (`K ≥ (K₁+…+Kₙ)/n`) use the same formulas: pass the
//! average as `k`.

mod curve;
mod polymer;

pub use curve::{RateFn, Region, TailBoundCurve};
pub use polymer::{
    csy_laplace_envelope, mean_rate_bound, polymer_k_constant, polymer_q_constants,
    PolymerQConstants,
};

use crate::error::{check, Error, Result};
use crate::numeric::{bisect, bisect_bracket, expand_upper, golden_section};
use crate::scalar::{log_add_exp, Real};

fn positive<T: Real>(name: &'static str, v: T) -> Result<()> {
    check(name, v.to_f64_lossy(), "must be > 0", |v| v > 0.0)
}

fn non_negative<T: Real>(name: &'static str, v: T) -> Result<()> {
    check(name, v.to_f64_lossy(), "must be >= 0", |v| v >= 0.0)
}

fn exponent_above_one<T: Real>(name: &'static str, v: T) -> Result<()> {
    check(name, v.to_f64_lossy(), "must be > 1", |v| v > 1.0)
}

fn close<T: Real>(a: T, b: T) -> bool {
    let scale = a.abs().max(b.abs()).max(T::one());
    (a - b).abs() <= T::lit(T::IDENTITY_TOL) * scale
}

/// Hölder conjugate of `q > 1`: the `ρ` with `1/q + 1/ρ = 1`.
pub fn conjugate_exponent<T: Real>(q: T) -> Result<T> {
    exponent_above_one("q", q)?;
    Ok(q / (q - T::one()))
}

/// Pair of Hölder-conjugate exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugatePair<T> {
    q: T,
    rho: T,
}

impl<T: Real> ConjugatePair<T> {
    pub fn from_q(q: T) -> Result<Self> {
        Ok(Self {
            q,
            rho: conjugate_exponent(q)?,
        })
    }

    pub fn from_rho(rho: T) -> Result<Self> {
        Ok(Self {
            q: conjugate_exponent(rho)?,
            rho,
        })
    }

    /// Validates an explicitly supplied pair.
    pub fn new(q: T, rho: T) -> Result<Self> {
        exponent_above_one("q", q)?;
        exponent_above_one("rho", rho)?;
        if !close(T::one() / q + T::one() / rho, T::one()) {
            return Err(Error::Precondition(format!(
                "1/{q} + 1/{rho} is not 1"
            )));
        }
        Ok(Self { q, rho })
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn rho(&self) -> T {
        self.rho
    }
}

/// Tail-side rate `r` dual to the Laplace-side growth `τ t^ρ`, i.e. the
/// unique `r` with `(ρτ)^{1/ρ} (q r)^{1/q} = 1`.
pub fn dual_rate<T: Real>(q: T, tau: T) -> Result<T> {
    let rho = conjugate_exponent(q)?;
    positive("tau", tau)?;
    Ok((rho * tau).powf(T::one() - q) / q)
}

/// Inverse of [`dual_rate`]: the Laplace coefficient `τ` for tail rate `r`.
pub fn dual_tau<T: Real>(q: T, r: T) -> Result<T> {
    let rho = conjugate_exponent(q)?;
    positive("r", r)?;
    Ok((q * r).powf(T::one() - rho) / rho)
}

/// Laplace growth `τ t^ρ` and tail decay `r x^q` tied by Legendre duality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateDuality<T> {
    pair: ConjugatePair<T>,
    r: T,
    tau: T,
}

impl<T: Real> RateDuality<T> {
    pub fn from_rate(q: T, r: T) -> Result<Self> {
        Ok(Self {
            pair: ConjugatePair::from_q(q)?,
            r,
            tau: dual_tau(q, r)?,
        })
    }

    pub fn from_tau(q: T, tau: T) -> Result<Self> {
        Ok(Self {
            pair: ConjugatePair::from_q(q)?,
            r: dual_rate(q, tau)?,
            tau,
        })
    }

    /// Validates an explicitly supplied triple.
    pub fn new(pair: ConjugatePair<T>, r: T, tau: T) -> Result<Self> {
        positive("r", r)?;
        positive("tau", tau)?;
        let lhs = (pair.rho * tau).powf(T::one() / pair.rho) * (pair.q * r).powf(T::one() / pair.q);
        if !close(lhs, T::one()) {
            return Err(Error::Precondition(format!(
                "(rho*tau)^(1/rho) (q*r)^(1/q) = {lhs}, expected 1"
            )));
        }
        Ok(Self { pair, r, tau })
    }

    pub fn pair(&self) -> ConjugatePair<T> {
        self.pair
    }
    pub fn q(&self) -> T {
        self.pair.q
    }
    pub fn rho(&self) -> T {
        self.pair.rho
    }
    pub fn r(&self) -> T {
        self.r
    }
    pub fn tau(&self) -> T {
        self.tau
    }

    /// `(ρτ)^{1/ρ}(qr)^{1/q}`, which is 1 up to rounding.
    pub fn duality_product(&self) -> T {
        (self.rho() * self.tau).powf(T::one() / self.rho())
            * (self.q() * self.r).powf(T::one() / self.q())
    }
}

/// `sup_{t ≥ t0} (t x − τ t^ρ)`, equal to `R x^Q` for the dual `(Q, R)` when
/// `x ≥ ρ τ t0^{ρ−1}` (the unconstrained maximiser then lies beyond `t0`).
pub fn legendre_sup<T: Real>(rho: T, tau: T, t0: T, x: T) -> Result<T> {
    let q = conjugate_exponent(rho)?;
    positive("tau", tau)?;
    non_negative("t0", t0)?;
    positive("x", x)?;
    let threshold = rho * tau * t0.powf(rho - T::one());
    if x < threshold {
        return Err(Error::Precondition(format!(
            "x = {x} is below the threshold rho*tau*t0^(rho-1) = {threshold}"
        )));
    }
    Ok(dual_rate(q, tau)? * x.powf(q))
}

/// Bernstein-type rate `(√(x+K) − √K)²`, the Legendre transform of
/// `K t²/(1−t)` on `(0, 1)`.
pub fn bernstein_rate<T: Real>(x: T, k: T) -> Result<T> {
    positive("x", x)?;
    positive("k", k)?;
    // Written as x²/(√(x+K)+√K)² to avoid cancellation for small x.
    let s = (x + k).sqrt() + k.sqrt();
    Ok(x * x / (s * s))
}

fn probability_args<T: Real>(n: u64, x: T) -> Result<T> {
    if n == 0 {
        return Err(Error::Domain {
            name: "n",
            value: 0.0,
            expected: "must be >= 1",
        });
    }
    positive("x", x)?;
    Ok(T::from_u64(n).expect("n fits in T"))
}

/// `exp(−n (√(x+K) − √K)²)`.
pub fn bernstein_tail<T: Real>(n: u64, x: T, k: T) -> Result<T> {
    let nf = probability_args(n, x)?;
    Ok((-nf * bernstein_rate(x, k)?).exp())
}

/// `(1+√2)²`, the knee constant of the simplified Bernstein display.
pub fn one_plus_sqrt2_sq<T: Real>() -> T {
    let s = T::one() + T::SQRT_2();
    s * s
}

/// Simplified two-regime Bernstein bound: quadratic up to `x = K`, linear
/// beyond.
pub fn bernstein_piecewise<T: Real>(n: u64, x: T, k: T) -> Result<T> {
    let nf = probability_args(n, x)?;
    positive("k", k)?;
    let c = one_plus_sqrt2_sq::<T>();
    let rate = if x <= k { x * x / (k * c) } else { x / c };
    Ok((-nf * rate).exp())
}

/// Regime boundaries of the three-piece refinement of the Bernstein bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonThresholds<T> {
    /// End of the `x²/(4K(1+ε))` regime.
    pub x0: T,
    /// Start of the `x/(1+ε)` regime.
    pub x1: T,
    /// Middle-regime denominator: rate `x/K₁` on `[x0, x1]`.
    pub k1: T,
}

/// Solves `g(x0) = 1/(4K(1+ε))` and `f(x1) = 1/(1+ε)` where
/// `g(x) = rate/x²` decreases from `1/(4K)` and `f(x) = rate/x` increases to 1.
///
/// The ordering `x0 < x1` holds exactly when `ε < (1+√5)/2`; larger `ε` is
/// rejected.
pub fn epsilon_thresholds<T: Real>(k: T, eps: T) -> Result<EpsilonThresholds<T>> {
    positive("k", k)?;
    positive("eps", eps)?;
    let golden = (T::one() + T::lit(5.0).sqrt()) / T::lit(2.0);
    if eps >= golden {
        return Err(Error::Domain {
            name: "eps",
            value: eps.to_f64_lossy(),
            expected: "must be below (1+sqrt 5)/2 for x0 < x1",
        });
    }
    let tol = T::lit(T::ROOT_TOL);
    let one_eps = T::one() + eps;
    let g_target = T::one() / (T::lit(4.0) * k * one_eps);
    let f_target = T::one() / one_eps;
    let g = |x: T| {
        let s = (x + k).sqrt() + k.sqrt();
        T::one() / (s * s)
    };
    let f = |x: T| x * g(x);

    let hi0 = expand_upper(k, |x| g(x) < g_target)?;
    let x0 = bisect(T::zero(), hi0, tol, |x| g(x) - g_target)?;
    let hi1 = expand_upper(k, |x| f(x) > f_target)?;
    let x1 = bisect(T::zero(), hi1, tol, |x| f(x) - f_target)?;
    Ok(EpsilonThresholds {
        x0,
        x1,
        k1: T::lit(4.0) * k * one_eps / x0,
    })
}

/// Two-regime bound from a sub-Gaussian Laplace estimate
/// `E[e^{tX}|F] ≤ e^{A t²}` valid on `t ∈ (0, T]`.
pub fn petrov_bound<T: Real>(n: u64, x: T, a_coef: T, t_cap: T) -> Result<T> {
    let nf = probability_args(n, x)?;
    positive("a_coef", a_coef)?;
    positive("t_cap", t_cap)?;
    let knee = T::lit(2.0) * a_coef * t_cap;
    let rate = if x < knee {
        x * x / (T::lit(4.0) * a_coef)
    } else {
        t_cap * x / T::lit(2.0)
    };
    Ok((-nf * rate).exp())
}

/// Bound on `E e^{t|X|}` under `E e^{R X²} ≤ K`:
/// `1 + K√π/(2√R) · t · exp(t²/(4R))`.
pub fn laplace_abs_bound<T: Real>(t: T, r: T, k: T) -> Result<T> {
    positive("t", t)?;
    positive("r", r)?;
    positive("k", k)?;
    let c = k * T::PI().sqrt() / (T::lit(2.0) * r.sqrt());
    Ok(T::one() + c * t * (t * t / (T::lit(4.0) * r)).exp())
}

/// Laplace bound implied by the tail `P[X > x] ≤ K e^{−R x^Q}`:
/// `1 + K + a t^ρ e^{τ t^ρ}` with `a = K (2/R)^{1/(Q−1)}`.
pub fn laplace_from_tail<T: Real>(t: T, duality: &RateDuality<T>, k: T) -> Result<T> {
    positive("t", t)?;
    positive("k", k)?;
    let tr = t.powf(duality.rho());
    let a = laplace_tail_coefficient(duality, k);
    Ok(T::one() + k + a * tr * (duality.tau() * tr).exp())
}

fn laplace_tail_coefficient<T: Real>(duality: &RateDuality<T>, k: T) -> T {
    k * (T::lit(2.0) / duality.r()).powf(T::one() / (duality.q() - T::one()))
}

/// Exponential moment bound `E e^{R₁ X^Q} ≤ (R + R₁(K−1))/(R − R₁)` implied
/// by the tail `P[X > x] ≤ K e^{−R x^Q}`, for `0 < R₁ < R`.
pub fn moment_from_tail<T: Real>(r1: T, q: T, r: T, k: T) -> Result<T> {
    positive("r1", r1)?;
    check("q", q.to_f64_lossy(), "must be >= 1", |v| v >= 1.0)?;
    positive("r", r)?;
    positive("k", k)?;
    if r1 >= r {
        return Err(Error::Domain {
            name: "r1",
            value: r1.to_f64_lossy(),
            expected: "must be < r",
        });
    }
    Ok((r + r1 * (k - T::one())) / (r - r1))
}

/// Constants of the two-regime bound under `E[e^{R|X|^Q} | F] ≤ K`, `Q > 1`.
///
/// Tail: `exp(−n r1 x^Q)` for `x ≥ x1`, `exp(−n b x²)` for `x ≤ x1`.
/// Laplace: `exp(n tau1 t^ρ)` for `t ≥ t1`, `exp(n a t²)` for `t ≤ t1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QRegimeConstants<T> {
    pub duality: RateDuality<T>,
    pub k: T,
    pub tau1: T,
    pub t1: T,
    pub x1: T,
    pub r1: T,
    pub a: T,
    pub b: T,
    /// `e^R + K`, the bound on `E[e^{R|X|}|F]` used for the small-x regime.
    pub k_linear: T,
}

impl<T: Real> QRegimeConstants<T> {
    /// Whether `1 + K + a t^ρ e^{τ t^ρ} ≤ e^{τ₁ t^ρ}` holds at `t`.
    pub fn laplace_inequality_holds(&self, t: T) -> bool {
        q_regime_gap(&self.duality, self.k, self.tau1, t) >= T::zero()
    }
}

/// `τ₁ t^ρ − ln(1 + K + a t^ρ e^{τ t^ρ})`, in log space.
fn q_regime_gap<T: Real>(duality: &RateDuality<T>, k: T, tau1: T, t: T) -> T {
    if t <= T::zero() {
        return -(T::one() + k).ln();
    }
    let a = laplace_tail_coefficient(duality, k);
    let tr = t.powf(duality.rho());
    let ln_rest = a.ln() + duality.rho() * t.ln() + duality.tau() * tr;
    tau1 * tr - log_add_exp((T::one() + k).ln(), ln_rest)
}

/// Builds [`QRegimeConstants`] for `E[e^{R|X|^Q}|F] ≤ K`.
///
/// `t1` is the smallest `t` with `1 + K + a t^ρ e^{τ t^ρ} ≤ e^{τ₁ t^ρ}`
/// (doubling bracket from 1, bisection to 1e-9, upper end kept), `x1 = ρ τ₁
/// t1^{ρ−1}`, `r1` is dual to `τ₁`, and with `K₁ = e^R + K`:
/// `a = max(2K₁/R², 4τ₁ t1^ρ/R²)`, `b = bernstein_rate(R·x1, K₁)/x1²`.
pub fn q_regime_constants<T: Real>(q: T, r: T, k: T, tau1: T) -> Result<QRegimeConstants<T>> {
    positive("k", k)?;
    positive("tau1", tau1)?;
    let duality = RateDuality::from_rate(q, r)?;
    if tau1 <= duality.tau() {
        return Err(Error::Precondition(format!(
            "tau1 = {tau1} must exceed the dual coefficient tau = {}",
            duality.tau()
        )));
    }
    let gap = |t: T| q_regime_gap(&duality, k, tau1, t);
    let hi = expand_upper(T::one(), |t| gap(t) >= T::zero())?;
    let tol = T::lit(1e-9).max(T::epsilon() * T::lit(16.0) * hi);
    let (_, t1) = bisect_bracket(T::zero(), hi, tol, gap)?;
    let rho = duality.rho();
    let x1 = rho * tau1 * t1.powf(rho - T::one());
    let r1 = dual_rate(q, tau1)?;
    let k_linear = r.exp() + k;
    let r2 = r * r;
    let a = (T::lit(2.0) * k_linear / r2).max(T::lit(4.0) * tau1 * t1.powf(rho) / r2);
    let b = bernstein_rate(r * x1, k_linear)? / (x1 * x1);
    Ok(QRegimeConstants {
        duality,
        k,
        tau1,
        t1,
        x1,
        r1,
        a,
        b,
        k_linear,
    })
}

/// Constant `c` of the sub-Gaussian bound `E e^{tS_n} ≤ e^{n c t²}` (all
/// `t > 0`) under `E[e^{R X²}|F] ≤ K`, and hence `P[S_n/n > x] ≤
/// exp(−n x²/(4c))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoeffdingConstants<T> {
    pub c: T,
    /// `2(e^R + K)/R²`, covering `t ∈ (0, R/2]`.
    pub small_t: T,
    /// `sup_{t ≥ R/2} ln(1 + K√π/(2√R) t e^{t²/(4R)})/t²`.
    pub large_t: T,
}

impl<T: Real> HoeffdingConstants<T> {
    pub fn tail_coefficient(&self) -> T {
        T::one() / (T::lit(4.0) * self.c)
    }
}

/// Computes [`HoeffdingConstants`]: the small-`t` piece from the Bernstein
/// Laplace estimate applied to `R·X`, the large-`t` piece as the supremum of
/// `ln(laplace_abs_bound(t))/t²` over `t ≥ R/2` (log grid refined by
/// golden section, padded by one part in 10⁹).
pub fn hoeffding_type_constant<T: Real>(r: T, k: T) -> Result<HoeffdingConstants<T>> {
    positive("r", r)?;
    positive("k", k)?;
    let small_t = T::lit(2.0) * (r.exp() + k) / (r * r);
    let ratio = |t: T| -> T {
        // ln(1 + C t e^{t²/4R}) without overflow.
        let c = k * T::PI().sqrt() / (T::lit(2.0) * r.sqrt());
        let ln_rest = c.ln() + t.ln() + t * t / (T::lit(4.0) * r);
        log_add_exp(T::zero(), ln_rest) / (t * t)
    };
    let start = r / T::lit(2.0);
    let end = start.max(T::one()) * T::lit(1e4);
    let steps = 4000usize;
    let log_span = (end / start).ln();
    let node = |i: usize| start * (log_span * T::lit(i as f64 / steps as f64)).exp();
    let mut best_i = 0;
    let mut best = ratio(start);
    for i in 1..=steps {
        let v = ratio(node(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = node(best_i.saturating_sub(1));
    let hi = node((best_i + 1).min(steps));
    let refined = golden_section(lo, hi, (hi - lo) * T::lit(1e-9), |t| -ratio(t));
    let tail_limit = T::one() / (T::lit(4.0) * r);
    let large_t = best.max(-refined.value).max(tail_limit) * T::lit(1.0 + 1e-9);
    Ok(HoeffdingConstants {
        c: small_t.max(large_t),
        small_t,
        large_t,
    })
}

/// Parameters of the converse statements, which turn a tail bound for iid
/// sums back into an exponential moment bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConverseKind<T> {
    /// Tail `e^{−ncx}` for `x ≥ x1` gives `E e^{δ X⁺} ≤ K` for `δ < c`.
    Bernstein { delta: T, c: T, x1: T },
    /// Tail `e^{−nx²/(4c)}` gives `E e^{R X⁺²} ≤ K` for `R < 1/(4c)`.
    Hoeffding { r: T, c: T },
    /// Tail `e^{−n R₁ x^Q}` for `x ≥ x1` gives `E e^{R|X|^Q} ≤ 2K` for `R < R₁`.
    QTail { r: T, r1: T, q: T, x1: T },
}

/// Closed-form moment constant of the matching converse statement. For
/// [`ConverseKind::QTail`] the returned value is the two-sided `2K`.
pub fn converse_constant<T: Real>(kind: ConverseKind<T>) -> Result<T> {
    match kind {
        ConverseKind::Bernstein { delta, c, x1 } => {
            positive("delta", delta)?;
            positive("c", c)?;
            non_negative("x1", x1)?;
            if delta >= c {
                return Err(Error::Domain {
                    name: "delta",
                    value: delta.to_f64_lossy(),
                    expected: "must be < c",
                });
            }
            Ok((delta * x1).exp() + delta / (c - delta) * (-(c - delta) * x1).exp())
        }
        ConverseKind::Hoeffding { r, c } => {
            positive("r", r)?;
            positive("c", c)?;
            let cap = T::one() / (T::lit(4.0) * c);
            if r >= cap {
                return Err(Error::Domain {
                    name: "r",
                    value: r.to_f64_lossy(),
                    expected: "must be < 1/(4c)",
                });
            }
            Ok(T::one() + r / (cap - r))
        }
        ConverseKind::QTail { r, r1, q, x1 } => {
            positive("r", r)?;
            positive("r1", r1)?;
            check("q", q.to_f64_lossy(), "must be >= 1", |v| v >= 1.0)?;
            non_negative("x1", x1)?;
            if r >= r1 {
                return Err(Error::Domain {
                    name: "r",
                    value: r.to_f64_lossy(),
                    expected: "must be < r1",
                });
            }
            let xq = x1.powf(q);
            let k = (r * xq).exp() + r / (r1 - r) * (-(r1 - r) * xq).exp();
            Ok(T::lit(2.0) * k)
        }
    }
}

/// Which process the asymptotic rates refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    /// One-sided statement about `S_n⁺`.
    Supermartingale,
    /// Two-sided statement about `|S_n|`.
    Martingale,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticLimits<T> {
    /// Ceiling for `limsup |S_n|/√(n ln n)`.
    pub as_limit: T,
    /// Ceiling for `limsup n^{p/2} E[(|S_n|/n)^p]`.
    pub lp_limit: T,
}

/// Almost-sure and `L^p` rate ceilings under `E[e^{|X_i|}|F] ≤ K`.
pub fn asymptotic_limits<T: Real>(p: T, k: T, kind: ProcessKind) -> Result<AsymptoticLimits<T>> {
    positive("p", p)?;
    positive("k", k)?;
    let two = T::lit(2.0);
    let pow2 = match kind {
        ProcessKind::Supermartingale => p - T::one(),
        ProcessKind::Martingale => p,
    };
    Ok(AsymptoticLimits {
        as_limit: two * k.sqrt(),
        lp_limit: p * two.powf(pow2) * k.powf(p / two) * Real::gamma(p / two),
    })
}

/// Burkholder-type moment bound `n^{p/2} (18 p √(p/(p−1)))^p K` on
/// `E|S_n|^p` under `E|X_i|^p ≤ K`, `p ≥ 2`.
pub fn burkholder_bound<T: Real>(n: u64, p: T, k: T) -> Result<T> {
    if n == 0 {
        return Err(Error::Domain {
            name: "n",
            value: 0.0,
            expected: "must be >= 1",
        });
    }
    check("p", p.to_f64_lossy(), "must be >= 2", |v| v >= 2.0)?;
    positive("k", k)?;
    let nf = T::from_u64(n).expect("n fits in T");
    let q = conjugate_exponent(p)?;
    Ok(nf.powf(p / T::lit(2.0)) * (T::lit(18.0) * p * q.sqrt()).powf(p) * k)
}

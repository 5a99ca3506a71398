//! Independent reference computations: brute-force maximisation,
//! enumeration and closed-form moments. These share no code with the
//! evaluators they check.

use crate::laws::Law;
use crate::martingale::Side;
use crate::polymer::Environment;

/// Maximises `h` on `[lo, hi]` by repeated grid refinement until the grid
/// step is below `step`. Assumes `h` is unimodal.
pub fn grid_max(h: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, step: f64) -> f64 {
    const POINTS: usize = 200;
    let mut best = f64::NEG_INFINITY;
    loop {
        let dx = (hi - lo) / POINTS as f64;
        let mut arg = 0;
        for i in 0..=POINTS {
            let v = h(lo + dx * i as f64);
            if v > best {
                best = v;
            }
            if v >= h(lo + dx * arg as f64) {
                arg = i;
            }
        }
        if dx <= step {
            return best;
        }
        let c = lo + dx * arg as f64;
        lo = (c - dx).max(lo);
        hi = (c + dx).min(hi);
    }
}

/// `sup_{t ≥ t0} (t x − τ t^ρ)` by grid search.
pub fn legendre_sup_grid(rho: f64, tau: f64, t0: f64, x: f64) -> f64 {
    let h = |t: f64| t * x - tau * t.powf(rho);
    let mut hi = t0.max(1.0);
    while h(2.0 * hi) > h(hi) {
        hi *= 2.0;
    }
    grid_max(h, t0, 2.0 * hi, 1e-9 * hi)
}

/// `sup_{0<t<1} (t x − K t²/(1−t))` by grid search.
pub fn bernstein_rate_grid(x: f64, k: f64) -> f64 {
    grid_max(|t| t * x - k * t * t / (1.0 - t), 0.0, 1.0 - 1e-15, 1e-12)
}

/// Exact `P[event]` for a sum of `n` Rademacher signs, by enumerating the
/// binomial law of the number of `+1` steps.
pub fn rademacher_tail_exact(n: u32, x: f64, side: Side) -> f64 {
    assert!(n <= 60, "binomial enumeration limited to n <= 60");
    let nf = n as f64;
    let mut total = 0.0;
    let mut c = 1.0f64;
    for j in 0..=n {
        if j > 0 {
            c = c * (n - j + 1) as f64 / j as f64;
        }
        let mean = (2.0 * j as f64 - nf) / nf;
        let hit = match side {
            Side::Upper => mean > x,
            Side::Lower => -mean > x,
            Side::TwoSided => mean.abs() > x,
        };
        if hit {
            total += c;
        }
    }
    total / 2f64.powi(n as i32)
}

/// `E S_n⁴` for Rademacher sums, `3n(n−1) + n`.
pub fn rademacher_fourth_moment(n: u64) -> f64 {
    let n = n as f64;
    3.0 * n * (n - 1.0) + n
}

/// `E e^{t S_n} = exp(n λ(t))` for iid increments.
pub fn iid_laplace_exact(law: &Law, n: u32, t: f64) -> f64 {
    (n as f64 * law.log_mgf(t).expect("t in the mgf domain")).exp()
}

/// `ln W_n` by summing over all `(2d)^n` nearest-neighbour paths.
pub fn partition_by_paths(env: &Environment, beta: f64, lambda: f64) -> f64 {
    let d = env.dim() as usize;
    let n = env.horizon();
    let mut logs = Vec::with_capacity((2 * d).pow(n));
    let mut x = vec![0i32; d];
    walk(env, beta, 1, &mut x, 0.0, &mut logs);
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logs.iter().map(|v| (v - m).exp()).sum();
    m + s.ln() - n as f64 * ((2 * d) as f64).ln() - n as f64 * lambda
}

fn walk(env: &Environment, beta: f64, k: u32, x: &mut Vec<i32>, acc: f64, out: &mut Vec<f64>) {
    if k > env.horizon() {
        out.push(acc);
        return;
    }
    for j in 0..x.len() {
        for s in [1, -1] {
            x[j] += s;
            let eta = env.value(k, x).expect("walk stays in the cone");
            walk(env, beta, k + 1, x, acc + beta * eta, out);
            x[j] -= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_max_of_parabola() {
        let v = grid_max(|x| -(x - 0.3).powi(2) + 2.0, -1.0, 1.0, 1e-10);
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rademacher_exact_small() {
        assert!((rademacher_tail_exact(10, 0.8, Side::Upper) - 2f64.powi(-10)).abs() < 1e-18);
        assert_eq!(rademacher_tail_exact(10, 1.0, Side::Upper), 0.0);
        assert!((rademacher_tail_exact(1, 0.0, Side::TwoSided) - 1.0).abs() < 1e-15);
    }
}

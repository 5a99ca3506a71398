//! Root finding, scalar minimisation and quadrature shared by the evaluators.

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_BISECTION_STEPS: usize = 400;
const MAX_DOUBLINGS: usize = 200;

/// Locates the sign change of `h` on `[lo, hi]` by bisection.
///
/// `h(lo)` and `h(hi)` must have opposite signs (a zero at either end is
/// accepted). Returns the midpoint of the final bracket once its width is at
/// most `tol`, or once the bracket can no longer shrink in `T`.
pub fn bisect<T: Real>(lo: T, hi: T, tol: T, h: impl FnMut(T) -> T) -> Result<T> {
    let (lo, hi) = bisect_bracket(lo, hi, tol, h)?;
    Ok((lo + hi) / T::lit(2.0))
}

/// Like [`bisect`] but returns the final bracket `(lo, hi)`, with the sign
/// of `h` at each end unchanged from the initial bracket.
pub fn bisect_bracket<T: Real>(
    mut lo: T,
    mut hi: T,
    tol: T,
    mut h: impl FnMut(T) -> T,
) -> Result<(T, T)> {
    let h_lo = h(lo);
    let h_hi = h(hi);
    if h_lo.is_nan() || h_hi.is_nan() || (h_lo > T::zero()) == (h_hi > T::zero()) {
        if h_lo == T::zero() {
            return Ok((lo, lo));
        }
        if h_hi == T::zero() {
            return Ok((hi, hi));
        }
        return Err(Error::Precondition(format!(
            "bisection bracket [{lo}, {hi}] does not straddle a root"
        )));
    }
    let lo_positive = h_lo > T::zero();
    let two = T::lit(2.0);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = (lo + hi) / two;
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok((lo, hi));
        }
        if (h(mid) > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence("bisection step limit".into()))
}

/// Doubles `hi` from `start` until `pred(hi)` holds.
pub fn expand_upper<T: Real>(start: T, mut pred: impl FnMut(T) -> bool) -> Result<T> {
    let mut hi = start;
    for _ in 0..MAX_DOUBLINGS {
        if pred(hi) {
            return Ok(hi);
        }
        hi = hi * T::lit(2.0);
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence(format!(
        "no upper bracket found from {start}"
    )))
}

/// Outcome of a golden-section search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenMin<T> {
    pub x: T,
    pub value: T,
    pub evaluations: usize,
}

/// Golden-section minimisation of `f` on `[a, b]` down to a bracket of
/// width `tol`. Assumes unimodality; callers that cannot guarantee it
/// should cross-check against a grid.
pub fn golden_section<T: Real>(
    mut a: T,
    mut b: T,
    tol: T,
    mut f: impl FnMut(T) -> T,
) -> GoldenMin<T> {
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    while (b - a).abs() > tol && evaluations < 10_000 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        evaluations += 1;
    }
    if fc <= fd {
        GoldenMin { x: c, value: fc, evaluations }
    } else {
        GoldenMin { x: d, value: fd, evaluations }
    }
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integral of `f` over the finite interval `[a, b]`.
///
/// Subdivides until the summed error estimate is below
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut stack = vec![(a, b, gk15(&mut f, a, b))];
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut done: Vec<(f64, f64)> = Vec::new();
    let mut splits = 0usize;
    while let Some((lo, hi, (val, err))) = stack.pop() {
        let width_ratio = (hi - lo).abs() / (b - a).abs();
        let local_tol = abs_tol.max(rel_tol * val.abs()) * width_ratio.sqrt();
        if err <= local_tol || width_ratio < 1e-12 || splits > 20_000 {
            done.push((val, err));
            continue;
        }
        splits += 1;
        let mid = 0.5 * (lo + hi);
        let left = gk15(&mut f, lo, mid);
        let right = gk15(&mut f, mid, hi);
        stack.push((mid, hi, right));
        stack.push((lo, mid, left));
    }
    for (v, e) in done {
        total += v;
        total_err += e;
    }
    if !total.is_finite() {
        return Err(Error::NoConvergence("integrand is not finite".into()));
    }
    if total_err > 1e3 * abs_tol.max(rel_tol * total.abs()) {
        return Err(Error::NoConvergence(format!(
            "quadrature error estimate {total_err:e} too large"
        )));
    }
    Ok(total)
}

/// `ln ∫_a^b exp(g(x)) dx` for a log-integrand `g` that is unimodal or
/// eventually decreasing; `a` may be `-∞` and `b` may be `+∞`.
///
/// The integrand is rescaled by its scanned maximum so the result neither
/// overflows nor underflows, and infinite ends are truncated where `g`
/// has fallen 60 nats below the maximum.
pub fn ln_integral(g: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    const DROP: f64 = 60.0;
    let anchor = if a.is_finite() {
        a
    } else if b.is_finite() {
        b
    } else {
        0.0
    };
    let mut peak = if anchor.is_finite() { g(anchor) } else { f64::NEG_INFINITY };
    let mut lo = a;
    let mut hi = b;
    let mut pts = vec![anchor];
    if !b.is_finite() {
        let mut step = 1.0;
        let mut x = anchor;
        let mut decreasing_run = 0;
        let mut prev = g(x);
        for _ in 0..400 {
            x += step;
            let gx = g(x);
            peak = peak.max(gx);
            pts.push(x);
            decreasing_run = if gx < prev { decreasing_run + 1 } else { 0 };
            prev = gx;
            if gx < peak - DROP && decreasing_run >= 2 {
                break;
            }
            step *= 1.5;
        }
        hi = x;
    }
    if !a.is_finite() {
        let mut step = 1.0;
        let mut x = anchor;
        let mut decreasing_run = 0;
        let mut prev = g(x);
        for _ in 0..400 {
            x -= step;
            let gx = g(x);
            peak = peak.max(gx);
            pts.push(x);
            decreasing_run = if gx < prev { decreasing_run + 1 } else { 0 };
            prev = gx;
            if gx < peak - DROP && decreasing_run >= 2 {
                break;
            }
            step *= 1.5;
        }
        lo = x;
    }
    if a.is_finite() && b.is_finite() {
        let m = 64;
        for i in 0..=m {
            let x = a + (b - a) * i as f64 / m as f64;
            peak = peak.max(g(x));
            pts.push(x);
        }
    }
    if !peak.is_finite() {
        return Err(Error::NoConvergence("log-integrand has no finite maximum".into()));
    }
    pts.retain(|x| *x >= lo && *x <= hi);
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate(|x| (g(x) - peak).exp(), w[0], w[1], 1e-13, 1e-12)?;
    }
    Ok(peak + total.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(0.0f64, 2.0, 1e-12, |x| x * x - 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn bisect_rejects_bad_bracket() {
        assert!(bisect(0.0f64, 1.0, 1e-9, |x| x + 1.0).is_err());
    }

    #[test]
    fn golden_finds_parabola_min() {
        let m = golden_section(-3.0f64, 5.0, 1e-9, |x| (x - 1.25).powi(2) + 0.5);
        assert!((m.x - 1.25).abs() < 1e-8);
        assert!((m.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gk_integrates_smooth_and_singular() {
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-13, 1e-13).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        // ∫₀¹ √x dx = 2/3 with a derivative singularity at 0.
        let v = integrate(|x| x.sqrt(), 0.0, 1.0, 1e-13, 1e-13).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn ln_integral_gaussian_and_gamma() {
        let v = ln_integral(|x| -0.5 * x * x, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((v - (2.0 * std::f64::consts::PI).sqrt().ln()).abs() < 1e-11);
        // ∫₀^∞ u^{2.5} e^{-u} du = Γ(3.5)
        let v = ln_integral(|u| 2.5 * u.ln() - u, 0.0, f64::INFINITY).unwrap();
        assert!((v - libm::lgamma(3.5)).abs() < 1e-10);
        // Large shift: ∫₀^∞ exp(40 √u − u) du stays finite in log space.
        let v = ln_integral(|u| 40.0 * u.sqrt() - u, 0.0, f64::INFINITY).unwrap();
        assert!(v > 399.0 && v.is_finite());
    }
}

//! Increment and environment laws: sampling, means, log-moment-generating
//! functions and exponential moments.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{integrate, ln_integral};
use crate::rng::StreamKey;
use crate::scalar::{log_add_exp, normal_sf, Real};

/// A one-dimensional law. Serialised as a tagged record such as
/// `{"law":"gaussian","mean":0,"sd":1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum Law {
    Gaussian { mean: f64, sd: f64 },
    Rademacher,
    /// Two-point law: `hi` with probability `p`, `lo` otherwise.
    Bernoulli { p: f64, lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Symmetric Laplace law with density `e^{−|x|/scale}/(2 scale)`.
    Laplace { scale: f64 },
    /// Symmetric law with `P[|X| > x] = exp(−r x^q)`.
    StretchedExp { q: f64, r: f64 },
}

fn invalid(name: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        expected,
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, v, "must be finite"))
    }
}

impl Law {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Law::Gaussian { mean, sd } => {
                finite("mean", mean)?;
                finite("sd", sd)?;
                if sd <= 0.0 {
                    return Err(invalid("sd", sd, "must be > 0"));
                }
            }
            Law::Rademacher => {}
            Law::Bernoulli { p, lo, hi } => {
                finite("p", p)?;
                finite("lo", lo)?;
                finite("hi", hi)?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(invalid("p", p, "must lie in (0, 1)"));
                }
                if lo >= hi {
                    return Err(invalid("hi", hi, "must exceed lo"));
                }
            }
            Law::Uniform { lo, hi } => {
                finite("lo", lo)?;
                finite("hi", hi)?;
                if lo >= hi {
                    return Err(invalid("hi", hi, "must exceed lo"));
                }
            }
            Law::Laplace { scale } => {
                finite("scale", scale)?;
                if scale <= 0.0 {
                    return Err(invalid("scale", scale, "must be > 0"));
                }
            }
            Law::StretchedExp { q, r } => {
                finite("q", q)?;
                finite("r", r)?;
                if q < 1.0 {
                    return Err(invalid("q", q, "must be >= 1"));
                }
                if r <= 0.0 {
                    return Err(invalid("r", r, "must be > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Law::Gaussian { mean, .. } => mean,
            Law::Bernoulli { p, lo, hi } => p * hi + (1.0 - p) * lo,
            Law::Uniform { lo, hi } => 0.5 * (lo + hi),
            Law::Rademacher | Law::Laplace { .. } | Law::StretchedExp { .. } => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Law::Gaussian { sd, .. } => sd * sd,
            Law::Rademacher => 1.0,
            Law::Bernoulli { p, lo, hi } => p * (1.0 - p) * (hi - lo) * (hi - lo),
            Law::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Law::Laplace { scale } => 2.0 * scale * scale,
            Law::StretchedExp { q, r } => Real::gamma(1.0 + 2.0 / q) * r.powf(-2.0 / q),
        }
    }

    /// Essential supremum of `|X|`, infinite for unbounded laws.
    pub fn abs_bound(&self) -> f64 {
        match *self {
            Law::Rademacher => 1.0,
            Law::Bernoulli { lo, hi, .. } | Law::Uniform { lo, hi } => lo.abs().max(hi.abs()),
            _ => f64::INFINITY,
        }
    }

    /// The same shape shifted to mean zero.
    pub fn centered(&self) -> Law {
        let m = self.mean();
        match *self {
            Law::Gaussian { sd, .. } => Law::Gaussian { mean: 0.0, sd },
            Law::Bernoulli { p, lo, hi } => Law::Bernoulli {
                p,
                lo: lo - m,
                hi: hi - m,
            },
            Law::Uniform { lo, hi } => Law::Uniform {
                lo: lo - m,
                hi: hi - m,
            },
            other => other,
        }
    }

    pub fn is_centered(&self) -> bool {
        self.mean().abs() <= 1e-12
    }

    /// Half-width of the open interval on which `λ` is finite.
    pub fn mgf_radius(&self) -> f64 {
        match *self {
            Law::Laplace { scale } => 1.0 / scale,
            Law::StretchedExp { q: 1.0, r } => r,
            _ => f64::INFINITY,
        }
    }

    pub fn in_mgf_domain(&self, t: f64) -> bool {
        t.is_finite() && t.abs() < self.mgf_radius()
    }

    /// `λ(t) = ln E e^{tX}`.
    pub fn log_mgf(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !self.in_mgf_domain(t) {
            return Err(invalid("t", t, "outside the domain of the moment generating function"));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(match *self {
            Law::Gaussian { mean, sd } => mean * t + 0.5 * sd * sd * t * t,
            Law::Rademacher => ln_cosh(t),
            Law::Bernoulli { p, lo, hi } => {
                log_add_exp(p.ln() + t * hi, (1.0 - p).ln() + t * lo)
            }
            Law::Uniform { lo, hi } => 0.5 * t * (lo + hi) + ln_sinhc(0.5 * t * (hi - lo)),
            Law::Laplace { scale } => -(1.0 - scale * scale * t * t).ln(),
            Law::StretchedExp { q: 1.0, r } => -(1.0 - t * t / (r * r)).ln(),
            Law::StretchedExp { q, r } => {
                let up = stretched_ln_laplace(q, r, t.abs())?;
                let down = stretched_ln_laplace(q, r, -t.abs())?;
                log_add_exp(up, down) - std::f64::consts::LN_2
            }
        })
    }

    /// `E e^{δ|X|^q}`; `+∞` when the moment diverges.
    pub fn exp_moment(&self, delta: f64, q: f64) -> Result<f64> {
        self.validate()?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid("delta", delta, "must be > 0"));
        }
        if !(q >= 1.0 && q.is_finite()) {
            return Err(invalid("q", q, "must be >= 1"));
        }
        let v = match *self {
            Law::Rademacher => delta.exp(),
            Law::Bernoulli { p, lo, hi } => {
                p * (delta * hi.abs().powf(q)).exp() + (1.0 - p) * (delta * lo.abs().powf(q)).exp()
            }
            Law::Uniform { lo, hi } => {
                let f = |x: f64| (delta * x.abs().powf(q)).exp();
                let mut total = 0.0;
                if lo < 0.0 && hi > 0.0 {
                    total += integrate(f, lo, 0.0, 1e-12, 1e-12)?;
                    total += integrate(f, 0.0, hi, 1e-12, 1e-12)?;
                } else {
                    total += integrate(f, lo, hi, 1e-12, 1e-12)?;
                }
                total / (hi - lo)
            }
            Law::Gaussian { mean, sd } => gaussian_exp_moment(mean, sd, delta, q)?,
            Law::Laplace { scale } => {
                if q == 1.0 && delta * scale < 1.0 {
                    1.0 / (1.0 - delta * scale)
                } else {
                    f64::INFINITY
                }
            }
            Law::StretchedExp { q: q0, r } => {
                if q > q0 || (q == q0 && delta >= r) {
                    f64::INFINITY
                } else if q == q0 {
                    r / (r - delta)
                } else {
                    // u = r|X|^{q0} is a unit exponential.
                    let s = q / q0;
                    let c = delta * r.powf(-s);
                    ln_integral(|u| c * u.powf(s) - u, 0.0, f64::INFINITY)?.exp()
                }
            }
        };
        Ok(v)
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Law::Gaussian { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            Law::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Law::Bernoulli { p, lo, hi } => {
                if rng.random::<f64>() < p {
                    hi
                } else {
                    lo
                }
            }
            Law::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Law::Laplace { scale } => {
                let e: f64 = Exp1.sample(rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * scale * e
            }
            Law::StretchedExp { q, r } => {
                let e: f64 = Exp1.sample(rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * (e / r).powf(1.0 / q)
            }
        }
    }

    pub fn sample(&self, key: StreamKey, count: usize) -> Vec<f64> {
        let mut rng = key.rng();
        (0..count).map(|_| self.sample_one(&mut rng)).collect()
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Law::Gaussian { mean, sd } => write!(f, "gaussian(mean={mean} sd={sd})"),
            Law::Rademacher => write!(f, "rademacher"),
            Law::Bernoulli { p, lo, hi } => write!(f, "bernoulli(p={p} lo={lo} hi={hi})"),
            Law::Uniform { lo, hi } => write!(f, "uniform(lo={lo} hi={hi})"),
            Law::Laplace { scale } => write!(f, "laplace(scale={scale})"),
            Law::StretchedExp { q, r } => write!(f, "stretched_exp(q={q} r={r})"),
        }
    }
}

fn ln_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln(sinh h / h)`. Below `|h| = 1` the series `Σ h^{2k}/(2k+1)!` of
/// `sinh h / h − 1` avoids cancellation; for `|h| < 5e-5` it stops after six
/// terms.
fn ln_sinhc(h: f64) -> f64 {
    let a = h.abs();
    if a < 1.0 {
        let h2 = a * a;
        let terms = if a < 5e-5 { 6 } else { 24 };
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..=terms {
            term *= h2 / ((2 * k) as f64 * (2 * k + 1) as f64);
            sum += term;
        }
        return sum.ln_1p();
    }
    a + (-(-2.0 * a).exp_m1()).ln() - std::f64::consts::LN_2 - a.ln()
}

/// `ln E e^{c|X|}` for `P[|X| > x] = exp(−r x^q)`, via `u = r|X|^q`.
fn stretched_ln_laplace(q: f64, r: f64, c: f64) -> Result<f64> {
    let p = 1.0 / q;
    let a = c * r.powf(-p);
    ln_integral(|u| a * u.powf(p) - u, 0.0, f64::INFINITY)
}

fn gaussian_exp_moment(mean: f64, sd: f64, delta: f64, q: f64) -> Result<f64> {
    let var = sd * sd;
    if q == 1.0 {
        let z = mean / sd;
        let up = (delta * mean + 0.5 * delta * delta * var).exp() * normal_sf(-(z + delta * sd));
        let down = (-delta * mean + 0.5 * delta * delta * var).exp() * normal_sf(-(-z + delta * sd));
        return Ok(up + down);
    }
    if q == 2.0 {
        let s = 1.0 - 2.0 * delta * var;
        if s <= 0.0 {
            return Ok(f64::INFINITY);
        }
        return Ok((delta * mean * mean / s).exp() / s.sqrt());
    }
    if q > 2.0 {
        return Ok(f64::INFINITY);
    }
    let norm = sd * (2.0 * std::f64::consts::PI).sqrt();
    let g = |x: f64| delta * x.abs().powf(q) - (x - mean) * (x - mean) / (2.0 * var);
    let left = ln_integral(g, f64::NEG_INFINITY, 0.0)?;
    let right = ln_integral(g, 0.0, f64::INFINITY)?;
    Ok((log_add_exp(left, right) - norm.ln()).exp())
}

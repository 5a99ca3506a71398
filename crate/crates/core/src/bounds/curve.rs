use super::{
    bernstein_rate, epsilon_thresholds, one_plus_sqrt2_sq, positive, HoeffdingConstants,
    PolymerQConstants, QRegimeConstants,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rate function `x ↦ c(x)` of one region of a tail curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFn<T> {
    /// `(√(s·x + K) − √K)²`: the Bernstein rate applied to `s·X` where
    /// `E[e^{s|X|}|F] ≤ K`.
    Bernstein { k: T, scale: T },
    /// `coef · x²`
    Quadratic { coef: T },
    /// `coef · x`
    Linear { coef: T },
    /// `coef · x^exponent`
    Power { coef: T, exponent: T },
}

impl<T: Real> RateFn<T> {
    pub fn eval(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        match *self {
            RateFn::Bernstein { k, scale } => {
                bernstein_rate(scale * x, k).unwrap_or_else(|_| T::nan())
            }
            RateFn::Quadratic { coef } => coef * x * x,
            RateFn::Linear { coef } => coef * x,
            RateFn::Power { coef, exponent } => coef * x.powf(exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RateFn::Bernstein { k, scale } => {
                positive("k", k)?;
                positive("scale", scale)
            }
            RateFn::Quadratic { coef } | RateFn::Linear { coef } => positive("coef", coef),
            RateFn::Power { coef, exponent } => {
                positive("coef", coef)?;
                positive("exponent", exponent)
            }
        }
    }
}

/// Region `(lo, hi]` of a piecewise curve; the last region has `hi = ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region<T> {
    pub lo: T,
    pub hi: T,
    pub rate: RateFn<T>,
}

/// Piecewise rate function with `bound(n, x) = exp(−n·c(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailBoundCurve<T> {
    label: String,
    regions: Vec<Region<T>>,
}

impl<T: Real> TailBoundCurve<T> {
    /// Checks that the regions tile `(0, ∞)` in order.
    pub fn new(label: impl Into<String>, regions: Vec<Region<T>>) -> Result<Self> {
        let Some(first) = regions.first() else {
            return Err(Error::Invalid("a curve needs at least one region".into()));
        };
        if first.lo != T::zero() {
            return Err(Error::Invalid("first region must start at 0".into()));
        }
        for w in regions.windows(2) {
            if w[0].hi != w[1].lo || !(w[0].lo < w[0].hi) {
                return Err(Error::Invalid(format!(
                    "regions ({}, {}] and ({}, {}] do not abut",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        if regions.last().map(|r| r.hi) != Some(T::infinity()) {
            return Err(Error::Invalid("last region must extend to infinity".into()));
        }
        for r in &regions {
            r.rate.validate()?;
        }
        Ok(Self {
            label: label.into(),
            regions,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn regions(&self) -> &[Region<T>] {
        &self.regions
    }

    /// Region boundaries strictly inside `(0, ∞)`.
    pub fn knees(&self) -> Vec<T> {
        self.regions.iter().skip(1).map(|r| r.lo).collect()
    }

    pub fn rate(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        let region = self
            .regions
            .iter()
            .find(|r| x <= r.hi)
            .unwrap_or_else(|| self.regions.last().expect("non-empty"));
        region.rate.eval(x)
    }

    /// `exp(−n·c(x))`.
    pub fn bound(&self, n: u64, x: T) -> T {
        self.log_bound(n, x).exp()
    }

    pub fn log_bound(&self, n: u64, x: T) -> T {
        -T::from_u64(n).expect("n fits in T") * self.rate(x)
    }

    fn single(label: &str, rate: RateFn<T>) -> Result<Self> {
        Self::new(
            label,
            vec![Region {
                lo: T::zero(),
                hi: T::infinity(),
                rate,
            }],
        )
    }

    /// `exp(−n(√(x+K) − √K)²)` under `E[e^{|X|}|F] ≤ K`.
    pub fn bernstein(k: T) -> Result<Self> {
        Self::bernstein_scaled(k, T::one())
    }

    /// Bernstein curve under `E[e^{δ|X|}|F] ≤ K`, obtained by applying the
    /// unit-moment statement to `δX`.
    pub fn bernstein_scaled(k: T, delta: T) -> Result<Self> {
        Self::single("bernstein", RateFn::Bernstein { k, scale: delta })
    }

    /// Quadratic up to `x = K`, linear after, both with constant `(1+√2)²`.
    pub fn bernstein_piecewise(k: T) -> Result<Self> {
        positive("k", k)?;
        let c = one_plus_sqrt2_sq::<T>();
        Self::new(
            "bernstein_piecewise",
            vec![
                Region {
                    lo: T::zero(),
                    hi: k,
                    rate: RateFn::Quadratic {
                        coef: T::one() / (k * c),
                    },
                },
                Region {
                    lo: k,
                    hi: T::infinity(),
                    rate: RateFn::Linear { coef: T::one() / c },
                },
            ],
        )
    }

    /// Three regimes `x²/(4K(1+ε))`, `x/K₁`, `x/(1+ε)`.
    pub fn epsilon_regimes(k: T, eps: T) -> Result<Self> {
        let th = epsilon_thresholds(k, eps)?;
        let one_eps = T::one() + eps;
        Self::new(
            "epsilon_regimes",
            vec![
                Region {
                    lo: T::zero(),
                    hi: th.x0,
                    rate: RateFn::Quadratic {
                        coef: T::one() / (T::lit(4.0) * k * one_eps),
                    },
                },
                Region {
                    lo: th.x0,
                    hi: th.x1,
                    rate: RateFn::Linear {
                        coef: T::one() / th.k1,
                    },
                },
                Region {
                    lo: th.x1,
                    hi: T::infinity(),
                    rate: RateFn::Linear {
                        coef: T::one() / one_eps,
                    },
                },
            ],
        )
    }

    /// `x²/(4A)` below `2AT`, `Tx/2` above.
    pub fn petrov(a_coef: T, t_cap: T) -> Result<Self> {
        positive("a_coef", a_coef)?;
        positive("t_cap", t_cap)?;
        let knee = T::lit(2.0) * a_coef * t_cap;
        Self::new(
            "petrov",
            vec![
                Region {
                    lo: T::zero(),
                    hi: knee,
                    rate: RateFn::Quadratic {
                        coef: T::one() / (T::lit(4.0) * a_coef),
                    },
                },
                Region {
                    lo: knee,
                    hi: T::infinity(),
                    rate: RateFn::Linear {
                        coef: t_cap / T::lit(2.0),
                    },
                },
            ],
        )
    }

    /// Classical bound `exp(−n x²/(2a²))` for increments with `|X| ≤ a`.
    pub fn hoeffding_bounded(a: T) -> Result<Self> {
        positive("a", a)?;
        Self::single(
            "hoeffding",
            RateFn::Quadratic {
                coef: T::one() / (T::lit(2.0) * a * a),
            },
        )
    }

    /// `exp(−n x²/(4c))` under `E[e^{R X²}|F] ≤ K`.
    pub fn hoeffding_type(constants: &HoeffdingConstants<T>) -> Result<Self> {
        Self::single(
            "hoeffding_type",
            RateFn::Quadratic {
                coef: constants.tail_coefficient(),
            },
        )
    }

    /// `exp(−n b x²)` up to `x1`, `exp(−n r1 x^Q)` beyond.
    pub fn q_regime(c: &QRegimeConstants<T>) -> Result<Self> {
        Self::new(
            "q_regime",
            vec![
                Region {
                    lo: T::zero(),
                    hi: c.x1,
                    rate: RateFn::Quadratic { coef: c.b },
                },
                Region {
                    lo: c.x1,
                    hi: T::infinity(),
                    rate: RateFn::Power {
                        coef: c.r1,
                        exponent: c.duality.q(),
                    },
                },
            ],
        )
    }

    /// Free-energy concentration curve of Q-type: `exp(−n B x²)` up to the
    /// threshold, `exp(−n R₁ x^Q)` beyond.
    pub fn polymer_q(c: &PolymerQConstants<T>) -> Result<Self> {
        Self::new(
            "polymer_q",
            vec![
                Region {
                    lo: T::zero(),
                    hi: c.x_threshold,
                    rate: RateFn::Quadratic { coef: c.b },
                },
                Region {
                    lo: c.x_threshold,
                    hi: T::infinity(),
                    rate: RateFn::Power {
                        coef: c.r1,
                        exponent: c.q,
                    },
                },
            ],
        )
    }
}

//! Scalar abstraction for the closed-form evaluators.
//!
//! Every formula in [`crate::bounds`] is written once against [`Real`] and
//! instantiated for `f32` and `f64`. Special functions come from `libm` so
//! both widths share one implementation.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar usable by the bound evaluators.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Relative tolerance used when checking the algebraic invariants of
    /// conjugate pairs and rate dualities.
    const IDENTITY_TOL: f64;

    /// Absolute tolerance for the bisection root finders.
    const ROOT_TOL: f64;

    fn gamma(self) -> Self;
    fn erfc(self) -> Self;

    /// Converts an `f64` literal. Panics only if the target cannot represent
    /// finite `f64` values at all, which no implementor does.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const IDENTITY_TOL: f64 = 1e-12;
    const ROOT_TOL: f64 = 1e-10;

    #[inline]
    fn gamma(self) -> Self {
        libm::tgamma(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Real for f32 {
    const IDENTITY_TOL: f64 = 1e-5;
    const ROOT_TOL: f64 = 1e-5;

    #[inline]
    fn gamma(self) -> Self {
        libm::tgammaf(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// Standard normal upper tail `P[Z > x]`.
pub fn normal_sf<T: Real>(x: T) -> T {
    T::lit(0.5) * (x / T::SQRT_2()).erfc()
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Numerically stable `ln Σ exp(xᵢ)`; `-∞` for an empty slice.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() || m == T::infinity() {
        return m;
    }
    let s = xs.iter().fold(T::zero(), |acc, &x| acc + (x - m).exp());
    m + s.ln()
}

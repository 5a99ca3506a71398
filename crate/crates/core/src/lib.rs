//! Exponential inequalities for martingales with conditional exponential
//! moments, and Monte-Carlo harnesses for sums, directed polymers and
//! multiplicative cascades.
//!
//! The analytic layer ([`bounds`]) is generic over [`Real`] (`f32`/`f64`);
//! aliases for the `f64` instantiation are exported at the crate root.
//! Simulation modules work in `f64`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cascade;
pub mod error;
pub mod laws;
pub mod martingale;
pub mod numeric;
pub mod oracle;
pub mod polymer;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use laws::Law;
pub use rng::StreamKey;
pub use scalar::Real;
pub use stats::McEstimate;

pub type ConjugatePair = bounds::ConjugatePair<f64>;
pub type RateDuality = bounds::RateDuality<f64>;
pub type TailBoundCurve = bounds::TailBoundCurve<f64>;
pub type QRegimeConstants = bounds::QRegimeConstants<f64>;
pub type HoeffdingConstants = bounds::HoeffdingConstants<f64>;
pub type EpsilonThresholds = bounds::EpsilonThresholds<f64>;
pub type PolymerQConstants = bounds::PolymerQConstants<f64>;

pub type ConjugatePair32 = bounds::ConjugatePair<f32>;
pub type RateDuality32 = bounds::RateDuality<f32>;
pub type TailBoundCurve32 = bounds::TailBoundCurve<f32>;

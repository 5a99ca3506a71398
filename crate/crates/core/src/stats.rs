//! Monte-Carlo summaries.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::StreamKey;

/// Sample mean with its standard error `sd/√count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl McEstimate {
    pub fn exact(value: f64, count: usize) -> Self {
        McEstimate {
            mean: value,
            stderr: 0.0,
            count,
        }
    }

    /// Summary of `xs` in index order, so the result does not depend on how
    /// the samples were produced.
    pub fn from_samples(xs: &[f64]) -> Self {
        let mut acc = Moments::default();
        for &x in xs {
            acc.push(x);
        }
        acc.estimate()
    }

    /// Whether `|mean − value| ≤ z·stderr`, with a tiny absolute floor for
    /// exactly-known estimates.
    pub fn agrees_with(&self, value: f64, z: f64) -> bool {
        (self.mean - value).abs() <= z * self.stderr + 1e-12 * value.abs().max(1.0)
    }
}

impl McEstimate {
    /// Agreement of a frequency with a known probability `p`, using the
    /// larger of the sample stderr and the binomial stderr `√(p(1−p)/count)`
    /// so that rare events with no observed hits are judged fairly.
    pub fn agrees_with_probability(&self, p: f64, z: f64) -> bool {
        let binomial = (p * (1.0 - p) / self.count as f64).sqrt();
        (self.mean - p).abs() <= z * self.stderr.max(binomial) + 1e-15
    }
}

/// Streaming count, mean and sum of squared deviations (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Pairwise combination of two accumulators.
    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn estimate(&self) -> McEstimate {
        let stderr = if self.count > 1 {
            (self.m2.max(0.0) / (self.count as f64 - 1.0) / self.count as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            stderr,
            count: self.count,
        }
    }
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&v, p)
}

/// Bootstrap standard error of `stat` over `resamples` resamples drawn
/// from the stream `key`.
pub fn bootstrap_stderr(
    xs: &[f64],
    resamples: usize,
    key: StreamKey,
    stat: impl Fn(&[f64]) -> f64,
) -> f64 {
    let mut rng = key.rng();
    let mut buf = vec![0.0; xs.len()];
    let mut acc = Moments::default();
    for _ in 0..resamples {
        for b in buf.iter_mut() {
            *b = xs[rng.random_range(0..xs.len())];
        }
        acc.push(stat(&buf));
    }
    let e = acc.estimate();
    e.stderr * (e.count as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_known_sample() {
        let e = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert!((e.mean - 2.5).abs() < 1e-15);
        // sample variance 5/3
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(e.count, 4);
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..101).map(|i| ((i * 37) % 17) as f64 * 0.3).collect();
        let mut a = Moments::default();
        let mut b = Moments::default();
        for &x in &xs[..40] {
            a.push(x);
        }
        for &x in &xs[40..] {
            b.push(x);
        }
        a.merge(&b);
        let seq = McEstimate::from_samples(&xs);
        let m = a.estimate();
        assert!((m.mean - seq.mean).abs() < 1e-12);
        assert!((m.stderr - seq.stderr).abs() < 1e-12);
    }

    #[test]
    fn quantiles() {
        let xs = [3.0, 1.0, 2.0, 4.0, 5.0];
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 5.0);
        assert!((quantile(&xs, 0.99) - 4.96).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_of_mean_matches_stderr() {
        let xs: Vec<f64> = (0..400).map(|i| (i as f64 * 0.61803).fract()).collect();
        let plain = McEstimate::from_samples(&xs).stderr;
        let boot = bootstrap_stderr(&xs, 2000, StreamKey::new(3, 0), |s| {
            s.iter().sum::<f64>() / s.len() as f64
        });
        assert!((boot / plain - 1.0).abs() < 0.1);
    }
}

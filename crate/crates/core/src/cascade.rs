//! Multiplicative-cascade free energy `p_m^tree = inf_{θ∈(0,1]} v_m(θ)`,
//! `v_m(θ) = (1/θ) ln Q[Σ_x W_m(0,x)^θ]`, and its comparison with the
//! polymer free energy.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::golden_section;
use crate::polymer::{free_energy_trace, stream_partition, PolymerConfig};
use crate::rng::{mix64, StreamKey};
use crate::scalar::log_sum_exp;
use crate::stats::{bootstrap_stderr, McEstimate, Moments};

pub const THETA_MIN: f64 = 0.02;
pub const GRID_POINTS: usize = 32;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Point-to-point `ln W_m(0, x)` tables of independent environments.
#[derive(Debug, Clone)]
pub struct CascadeSamples {
    pub m: u32,
    log_w: Vec<Vec<f64>>,
    key: StreamKey,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Domain {
            name: "theta",
            value: theta,
            expected: "must lie in (0, 1]",
        });
    }
    Ok(())
}

impl CascadeSamples {
    /// Runs `replicates` environments to time `m` (the config's `n` is
    /// ignored).
    pub fn generate(config: &PolymerConfig, m: u32, replicates: usize) -> Result<Self> {
        let cfg = config.with_n(m);
        cfg.validate()?;
        if replicates < 2 {
            return Err(Error::Invalid("at least 2 replicates are required".into()));
        }
        let lambda = cfg.lambda()?;
        let log_w = (0..replicates)
            .into_par_iter()
            .map(|r| {
                stream_partition(cfg.d, m, cfg.beta, lambda, &cfg.env_law, cfg.replicate_key(r), |_| {})
                    .log_w()
                    .to_vec()
            })
            .collect();
        Ok(CascadeSamples {
            m,
            log_w,
            key: config.key,
        })
    }

    pub fn replicates(&self) -> usize {
        self.log_w.len()
    }

    /// `Σ_x W_m(0,x)^θ` per replicate.
    pub fn theta_sums(&self, theta: f64) -> Result<Vec<f64>> {
        check_theta(theta)?;
        let mut buf = Vec::new();
        Ok(self
            .log_w
            .iter()
            .map(|lw| {
                buf.clear();
                buf.extend(lw.iter().map(|v| theta * v));
                log_sum_exp(&buf).exp()
            })
            .collect())
    }

    /// Monte-Carlo `Q[Σ_x W_m(0,x)^θ]`.
    pub fn theta_moment(&self, theta: f64) -> Result<McEstimate> {
        let sums = self.theta_sums(theta)?;
        let mut acc = Moments::default();
        for s in &sums {
            acc.push(*s);
        }
        Ok(acc.estimate())
    }

    /// `v_m(θ)` with a delta-method stderr, or a bootstrap stderr when the
    /// θ-moment's coefficient of variation exceeds 0.5.
    pub fn v(&self, theta: f64) -> Result<McEstimate> {
        let sums = self.theta_sums(theta)?;
        let e = McEstimate::from_samples(&sums);
        let mean = e.mean;
        let cv = e.stderr * (e.count as f64).sqrt() / mean;
        let stderr = if cv > 0.5 {
            let key = StreamKey::new(
                self.key.master_seed,
                mix64(self.key.stream_index ^ mix64(self.m as u64) ^ theta.to_bits()),
            );
            bootstrap_stderr(&sums, BOOTSTRAP_RESAMPLES, key, |s| {
                (s.iter().sum::<f64>() / s.len() as f64).ln() / theta
            })
        } else {
            e.stderr / (theta * mean)
        };
        Ok(McEstimate {
            mean: mean.ln() / theta,
            stderr,
            count: e.count,
        })
    }

    /// Grid scan, golden-section refinement and, if the two disagree by more
    /// than one grid cell, a full scan at `resolution`.
    pub fn p_tree(&self, resolution: f64) -> Result<CascadeEstimate> {
        if !(resolution > 0.0 && resolution < 1.0) {
            return Err(Error::Invalid(format!("theta resolution {resolution} must lie in (0, 1)")));
        }
        let grid = theta_grid();
        let mut evaluated: Vec<(f64, McEstimate)> = Vec::new();
        for &t in &grid {
            evaluated.push((t, self.v(t)?));
        }
        let grid_values = evaluated.clone();
        let (arg, _) = argmin(&grid_values);
        let mut failure = None;
        let golden = golden_section(THETA_MIN, 1.0, resolution, |t| match self.v(t) {
            Ok(e) => e.mean,
            Err(err) => {
                failure = Some(err);
                f64::INFINITY
            }
        });
        if let Some(err) = failure {
            return Err(err);
        }
        evaluated.push((golden.x, self.v(golden.x)?));
        let lo_cell = grid[arg.saturating_sub(1)];
        let hi_cell = grid[(arg + 1).min(grid.len() - 1)];
        let used_fallback = golden.x < lo_cell || golden.x > hi_cell;
        if used_fallback {
            let steps = ((1.0 - THETA_MIN) / resolution).ceil() as usize;
            for i in 0..=steps {
                let t = (THETA_MIN + i as f64 * resolution).min(1.0);
                evaluated.push((t, self.v(t)?));
            }
        }
        let (best, _) = argmin(&evaluated);
        let (theta_star, v_star) = evaluated[best];
        let mf = self.m as f64;
        Ok(CascadeEstimate {
            m: self.m,
            theta_grid: grid_values,
            theta_star,
            p_tree: v_star,
            p_tree_over_m: McEstimate {
                mean: v_star.mean / mf,
                stderr: v_star.stderr / mf,
                count: v_star.count,
            },
            used_fallback,
        })
    }
}

fn argmin(values: &[(f64, McEstimate)]) -> (usize, f64) {
    let mut best = 0;
    for (i, (_, e)) in values.iter().enumerate() {
        if e.mean < values[best].1.mean {
            best = i;
        }
    }
    (best, values[best].1.mean)
}

/// 32 log-spaced points from `THETA_MIN` to 1.
pub fn theta_grid() -> Vec<f64> {
    let span = (1.0 / THETA_MIN).ln();
    (0..GRID_POINTS)
        .map(|i| {
            if i + 1 == GRID_POINTS {
                1.0
            } else {
                THETA_MIN * (span * i as f64 / (GRID_POINTS - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeEstimate {
    pub m: u32,
    /// `v_m(θ)` on the coarse grid.
    pub theta_grid: Vec<(f64, McEstimate)>,
    pub theta_star: f64,
    pub p_tree: McEstimate,
    pub p_tree_over_m: McEstimate,
    pub used_fallback: bool,
}

pub fn theta_moment(config: &PolymerConfig, m: u32, theta: f64, replicates: usize) -> Result<McEstimate> {
    check_theta(theta)?;
    CascadeSamples::generate(config, m, replicates)?.theta_moment(theta)
}

pub fn v_of_theta(config: &PolymerConfig, m: u32, theta: f64, replicates: usize) -> Result<McEstimate> {
    check_theta(theta)?;
    CascadeSamples::generate(config, m, replicates)?.v(theta)
}

pub fn p_tree(config: &PolymerConfig, m: u32, replicates: usize, resolution: f64) -> Result<CascadeEstimate> {
    CascadeSamples::generate(config, m, replicates)?.p_tree(resolution)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityRow {
    pub m: u32,
    pub theta: f64,
    /// `(1/(nm)) ln W_{nm}`.
    pub lhs: McEstimate,
    /// `v_m(θ)/m`.
    pub rhs: McEstimate,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeComparison {
    pub n: u32,
    pub estimates: Vec<CascadeEstimate>,
    pub inequality: Vec<InequalityRow>,
    /// `(1/n) ln W_n`.
    pub polymer_estimate: McEstimate,
    /// `min_m p_tree/m − (1/n) mean ln W_n`.
    pub gap: f64,
}

impl CascadeComparison {
    pub fn all_pass(&self) -> bool {
        self.inequality.iter().all(|r| r.pass)
    }
}

/// Cascade estimates for each `m` plus the finite-size inequality
/// `(1/(nm)) Q ln W_{nm} ≤ v_m(θ)/m` on the θ grid. Polymer samples use a
/// stream family independent of the cascade samples.
pub fn compare_with_polymer(
    config: &PolymerConfig,
    m_list: &[u32],
    n: u32,
    replicates: usize,
    resolution: f64,
    z: f64,
) -> Result<CascadeComparison> {
    if m_list.is_empty() || m_list.contains(&0) || n == 0 {
        return Err(Error::Invalid("m_list and n must be positive".into()));
    }
    let poly_cfg = PolymerConfig {
        key: StreamKey::new(config.key.master_seed, mix64(config.key.stream_index ^ 0x5E_ED0F_F00D)),
        ..*config
    };
    let mut horizons: Vec<u32> = m_list.iter().map(|m| m * n).collect();
    horizons.push(n);
    horizons.sort_unstable();
    horizons.dedup();
    let poly = free_energy_trace(&poly_cfg.with_n(n), &horizons, replicates)?;
    let at = |h: u32| poly.iter().find(|s| s.n == h).unwrap().free_energy();
    let polymer_estimate = at(n);
    let mut estimates = Vec::new();
    let mut inequality = Vec::new();
    for &m in m_list {
        let samples = CascadeSamples::generate(config, m, replicates)?;
        let est = samples.p_tree(resolution)?;
        let lhs = at(n * m);
        let mf = m as f64;
        for &(theta, v) in &est.theta_grid {
            let rhs = McEstimate {
                mean: v.mean / mf,
                stderr: v.stderr / mf,
                count: v.count,
            };
            let se = (lhs.stderr.powi(2) + rhs.stderr.powi(2)).sqrt();
            inequality.push(InequalityRow {
                m,
                theta,
                lhs,
                rhs,
                pass: lhs.mean <= rhs.mean + z * se,
            });
        }
        estimates.push(est);
    }
    let best = estimates
        .iter()
        .map(|e| e.p_tree_over_m.mean)
        .fold(f64::INFINITY, f64::min);
    Ok(CascadeComparison {
        n,
        estimates,
        inequality,
        polymer_estimate,
        gap: best - polymer_estimate.mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::Law;

    fn cfg(beta: f64) -> PolymerConfig {
        PolymerConfig {
            d: 1,
            n: 1,
            beta,
            env_law: Law::Gaussian { mean: 0.0, sd: 1.0 },
            key: StreamKey::new(5, 77),
        }
    }

    #[test]
    fn grid_shape() {
        let g = theta_grid();
        assert_eq!(g.len(), 32);
        assert!((g[0] - THETA_MIN).abs() < 1e-15);
        assert_eq!(g[31], 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn beta_zero_closed_forms() {
        let s = CascadeSamples::generate(&cfg(0.0), 1, 10).unwrap();
        let e = s.theta_moment(0.5).unwrap();
        assert!((e.mean - 2f64.sqrt()).abs() < 1e-14);
        for theta in [0.1, 0.5, 0.9] {
            let v = s.v(theta).unwrap();
            assert!((v.mean - (1.0 - theta) / theta * 2f64.ln()).abs() < 1e-12);
        }
        let s2 = CascadeSamples::generate(&cfg(0.0), 2, 10).unwrap();
        let e2 = s2.theta_moment(0.5).unwrap();
        assert!((e2.mean - (0.5 + 0.5f64.sqrt() + 0.5)).abs() < 1e-14);
        let est = s.p_tree(1e-3).unwrap();
        assert!(est.p_tree.mean.abs() < 1e-12);
        assert_eq!(est.theta_star, 1.0);
    }

    #[test]
    fn theta_outside_domain() {
        let s = CascadeSamples::generate(&cfg(0.5), 1, 10).unwrap();
        assert!(s.theta_moment(0.0).is_err());
        assert!(s.theta_moment(1.5).is_err());
    }
}

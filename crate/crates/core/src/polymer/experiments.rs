//! Monte-Carlo statistics of `ln W_n` over independent environments.

use rayon::prelude::*;
use serde::Serialize;

use super::{stream_partition, PolymerConfig};
use crate::bounds::{mean_rate_bound, TailBoundCurve};
use crate::error::{Error, Result};
use crate::martingale::VerificationRow;
use crate::stats::{quantile_sorted, McEstimate, Moments};

/// Per-replicate `ln W_n` at a fixed horizon `n`, in replicate order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyStats {
    pub n: u32,
    pub ln_w: Vec<f64>,
}

impl EnergyStats {
    /// Mean and stderr of `ln W_n`.
    pub fn estimate(&self) -> McEstimate {
        McEstimate::from_samples(&self.ln_w)
    }

    /// Mean and stderr of `(1/n) ln W_n`.
    pub fn free_energy(&self) -> McEstimate {
        let e = self.estimate();
        let n = self.n as f64;
        McEstimate {
            mean: e.mean / n,
            stderr: e.stderr / n,
            count: e.count,
        }
    }

    /// `ln W_n − mean`, per replicate.
    pub fn deviations(&self) -> Vec<f64> {
        let m = self.estimate().mean;
        self.ln_w.iter().map(|v| v - m).collect()
    }
}

fn check_replicates(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Invalid("at least 2 replicates are required".into()));
    }
    Ok(())
}

/// `ln W_n` for `m` independent environments.
pub fn free_energy_samples(config: &PolymerConfig, m: usize) -> Result<EnergyStats> {
    let mut v = free_energy_trace(config, &[config.n], m)?;
    Ok(v.remove(0))
}

/// `ln W_n` for every `n` in `n_list`, all read off the same environments:
/// each replicate runs one recursion to `max(n_list)`.
pub fn free_energy_trace(config: &PolymerConfig, n_list: &[u32], m: usize) -> Result<Vec<EnergyStats>> {
    config.validate()?;
    check_replicates(m)?;
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::Invalid("n_list must be non-empty with n >= 1".into()));
    }
    let n_max = *n_list.iter().max().unwrap();
    let lambda = config.lambda()?;
    let per_rep: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|r| {
            let mut at = vec![0.0; n_list.len()];
            stream_partition(
                config.d,
                n_max,
                config.beta,
                lambda,
                &config.env_law,
                config.replicate_key(r),
                |s| {
                    for (j, &n) in n_list.iter().enumerate() {
                        if n == s.time() {
                            at[j] = s.ln_total();
                        }
                    }
                },
            );
            at
        })
        .collect();
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(j, &n)| EnergyStats {
            n,
            ln_w: per_rep.iter().map(|row| row[j]).collect(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub n: u32,
    pub k: f64,
    /// Rows for `P[|ln W_n − mean|/n > x]` against twice the one-sided curve.
    pub rows: Vec<VerificationRow>,
    pub free_energy: McEstimate,
    /// Standard error of the sample mean used as centring, on the
    /// `(1/n) ln W_n` scale.
    pub centering_stderr: f64,
}

/// Two-sided deviation frequencies of `ln W_n` about its sample mean.
pub fn concentration_experiment(
    config: &PolymerConfig,
    m: usize,
    x_grid: &[f64],
    curve: &TailBoundCurve<f64>,
    z: f64,
) -> Result<ConcentrationReport> {
    let stats = free_energy_samples(config, m)?;
    let n = config.n as f64;
    let dev = stats.deviations();
    let rows = x_grid
        .iter()
        .map(|&x| {
            let mut acc = Moments::default();
            for d in &dev {
                acc.push(if d.abs() / n > x { 1.0 } else { 0.0 });
            }
            let bound = (2.0 * curve.bound(config.n as u64, x)).min(1.0);
            VerificationRow::new(x, acc.estimate(), bound, z)
        })
        .collect();
    let fe = stats.free_energy();
    Ok(ConcentrationReport {
        n: config.n,
        k: config.k_constant()?,
        rows,
        free_energy: fe,
        centering_stderr: fe.stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanRateRow {
    pub n: u32,
    /// `(1/n) ln W_n`.
    pub free_energy: McEstimate,
    /// Paired `(1/N) ln W_N − (1/n) ln W_n` with `N` the largest horizon,
    /// the stand-in for `p − (1/n) Q ln W_n`.
    pub deficit: McEstimate,
    pub bound: f64,
    /// `deficit ≥ −z·stderr`.
    pub lower_ok: bool,
    /// `deficit ≤ bound + z·stderr`.
    pub upper_ok: bool,
}

/// Checks the mean-convergence rate `2√K√(d ln(2n)/n) + d ln(2n)/n` with
/// the largest-`n` free energy standing in for the limit.
pub fn mean_rate_check(config: &PolymerConfig, n_list: &[u32], m: usize, z: f64) -> Result<Vec<MeanRateRow>> {
    let stats = free_energy_trace(config, n_list, m)?;
    mean_rate_rows(&stats, config.d, config.k_constant()?, z)
}

/// [`mean_rate_check`] on precomputed traces sharing their environments.
pub fn mean_rate_rows(stats: &[EnergyStats], d: u32, k: f64, z: f64) -> Result<Vec<MeanRateRow>> {
    let big = stats
        .iter()
        .max_by_key(|s| s.n)
        .ok_or_else(|| Error::Invalid("no horizons".into()))?;
    let nb = big.n as f64;
    stats
        .iter()
        .map(|s| {
            let nf = s.n as f64;
            let diffs: Vec<f64> = big.ln_w.iter().zip(&s.ln_w).map(|(b, v)| b / nb - v / nf).collect();
            let deficit = McEstimate::from_samples(&diffs);
            let bound = mean_rate_bound(s.n as u64, d, k)?;
            Ok(MeanRateRow {
                n: s.n,
                free_energy: s.free_energy(),
                deficit,
                bound,
                lower_ok: deficit.mean >= -z * deficit.stderr,
                upper_ok: deficit.mean <= bound + z * deficit.stderr,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsRateRow {
    pub n: u32,
    /// 0.99-quantile of `√(n/ln n)·|ln W_n/n − p̂|`.
    pub q99: f64,
    /// `√(n/ln n)·(mean |ln W_n/n − p̂|^p)^{1/p}`.
    pub lp_norm: f64,
    /// `2√K(1 + √d)`.
    pub as_ceiling: f64,
    /// `2√(Kd)`.
    pub lp_ceiling: f64,
}

/// Fluctuation statistics against the almost-sure and `L^p` ceilings,
/// with `p̂` the mean free energy at the largest `n`. Rows for `n < 3` are
/// skipped.
pub fn as_rate_report(config: &PolymerConfig, n_list: &[u32], m: usize, p: f64) -> Result<Vec<AsRateRow>> {
    let stats = free_energy_trace(config, n_list, m)?;
    as_rate_rows(&stats, config.d, config.k_constant()?, p)
}

/// [`as_rate_report`] on precomputed traces.
pub fn as_rate_rows(stats: &[EnergyStats], d: u32, k: f64, p: f64) -> Result<Vec<AsRateRow>> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            expected: "must be >= 1",
        });
    }
    let d = d as f64;
    let p_hat = stats
        .iter()
        .max_by_key(|s| s.n)
        .ok_or_else(|| Error::Invalid("no horizons".into()))?
        .free_energy()
        .mean;
    Ok(stats
        .iter()
        .filter(|s| s.n >= 3)
        .map(|s| {
            let nf = s.n as f64;
            let scale = (nf / nf.ln()).sqrt();
            let mut dev: Vec<f64> = s.ln_w.iter().map(|v| scale * (v / nf - p_hat).abs()).collect();
            let lp = (dev.iter().map(|v| v.powf(p)).sum::<f64>() / dev.len() as f64).powf(1.0 / p);
            dev.sort_by(|a, b| a.total_cmp(b));
            AsRateRow {
                n: s.n,
                q99: quantile_sorted(&dev, 0.99),
                lp_norm: lp,
                as_ceiling: 2.0 * k.sqrt() * (1.0 + d.sqrt()),
                lp_ceiling: 2.0 * (k * d).sqrt(),
            }
        })
        .collect())
}

//! Monte-Carlo estimates of tails and Laplace transforms of martingale sums,
//! checked against [`TailBoundCurve`]s.
//!
//! Replicate `r` of an experiment keyed by `key` draws its whole path from
//! `StreamKey::replicate(key.master_seed, key.stream_index, r)`, so every
//! grid point is evaluated on the same paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::TailBoundCurve;
use crate::error::{Error, Result};
use crate::laws::Law;
use crate::rng::StreamKey;
use crate::stats::{quantile_sorted, McEstimate, Moments};

/// Which deviation event a tail estimate counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `S_n/n > x`
    Upper,
    /// `−S_n/n > x`
    Lower,
    /// `|S_n|/n > x`; bounds are doubled.
    TwoSided,
}

impl Side {
    fn hits(&self, mean: f64, x: f64) -> bool {
        match self {
            Side::Upper => mean > x,
            Side::Lower => -mean > x,
            Side::TwoSided => mean.abs() > x,
        }
    }

    fn bound_factor(&self) -> f64 {
        match self {
            Side::TwoSided => 2.0,
            _ => 1.0,
        }
    }
}

/// The increment process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum Increments {
    Iid { law: Law },
    /// `X_i = ε_i σ(S_{i−1})` with iid centred `ε_i` and
    /// `σ(s) = σ_lo + (σ_hi − σ_lo)/(1 + s²)`.
    Arch {
        innovation: Law,
        sigma_lo: f64,
        sigma_hi: f64,
    },
}

impl Increments {
    pub fn iid(law: Law) -> Self {
        Increments::Iid { law }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Increments::Iid { law } => {
                law.validate()?;
                if !law.is_centered() {
                    return Err(Error::Precondition(format!(
                        "increment law {law} has mean {} instead of 0",
                        law.mean()
                    )));
                }
            }
            Increments::Arch {
                innovation,
                sigma_lo,
                sigma_hi,
            } => {
                Increments::iid(*innovation).validate()?;
                if !(*sigma_lo > 0.0 && sigma_lo <= sigma_hi && sigma_hi.is_finite()) {
                    return Err(Error::Invalid(format!(
                        "need 0 < sigma_lo <= sigma_hi, got {sigma_lo}, {sigma_hi}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            Increments::Iid { law } => law.to_string(),
            Increments::Arch {
                innovation,
                sigma_lo,
                sigma_hi,
            } => format!("arch({innovation} sigma={sigma_lo}..{sigma_hi})"),
        }
    }

    /// Supremum over the past of `E[e^{δ|X_i|^q} | F_{i−1}]`.
    pub fn conditional_exp_moment(&self, delta: f64, q: f64) -> Result<f64> {
        match self {
            Increments::Iid { law } => law.exp_moment(delta, q),
            Increments::Arch {
                innovation,
                sigma_hi,
                ..
            } => innovation.exp_moment(delta * sigma_hi.powf(q), q),
        }
    }

    /// Supremum of `|X_i|`.
    pub fn abs_bound(&self) -> f64 {
        match self {
            Increments::Iid { law } => law.abs_bound(),
            Increments::Arch {
                innovation,
                sigma_hi,
                ..
            } => innovation.abs_bound() * sigma_hi,
        }
    }

    /// Fills `out` with the partial sums `S_1, …, S_n` of one path.
    fn path(&self, key: StreamKey, out: &mut [f64]) {
        let mut rng = key.rng();
        let mut s = 0.0;
        match self {
            Increments::Iid { law } => {
                for v in out.iter_mut() {
                    s += law.sample_one(&mut rng);
                    *v = s;
                }
            }
            Increments::Arch {
                innovation,
                sigma_lo,
                sigma_hi,
            } => {
                for v in out.iter_mut() {
                    let sigma = sigma_lo + (sigma_hi - sigma_lo) / (1.0 + s * s);
                    s += sigma * innovation.sample_one(&mut rng);
                    *v = s;
                }
            }
        }
    }

    fn final_sum(&self, key: StreamKey, n: usize) -> f64 {
        let mut buf = vec![0.0; n];
        self.path(key, &mut buf);
        buf[n - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub increments: Increments,
    pub n: usize,
    /// Strictly increasing positive abscissae.
    pub grid: Vec<f64>,
    pub replicates: usize,
    /// `stream_index` is the experiment id.
    pub key: StreamKey,
    pub side: Side,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.increments.validate()?;
        if self.n == 0 {
            return Err(Error::Invalid("n must be >= 1".into()));
        }
        if self.replicates < 100 {
            return Err(Error::Invalid(format!(
                "replicates = {} but at least 100 are required",
                self.replicates
            )));
        }
        check_grid(&self.grid)
    }

    fn replicate_key(&self, r: usize) -> StreamKey {
        StreamKey::replicate(self.key.master_seed, self.key.stream_index, r as u64)
    }

    /// `S_n` of every replicate, in replicate order.
    pub fn final_sums(&self) -> Vec<f64> {
        (0..self.replicates)
            .into_par_iter()
            .map(|r| self.increments.final_sum(self.replicate_key(r), self.n))
            .collect()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Invalid("grid is empty".into()));
    }
    if grid.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Invalid("grid values must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Frequency of the tail event at each grid point.
pub fn estimate_tail(spec: &ExperimentSpec) -> Result<Vec<McEstimate>> {
    spec.validate()?;
    let sums = spec.final_sums();
    Ok(tail_frequencies(&sums, spec.n, &spec.grid, spec.side))
}

fn tail_frequencies(sums: &[f64], n: usize, grid: &[f64], side: Side) -> Vec<McEstimate> {
    let nf = n as f64;
    grid.iter()
        .map(|&x| {
            let mut acc = Moments::default();
            for &s in sums {
                acc.push(if side.hits(s / nf, x) { 1.0 } else { 0.0 });
            }
            acc.estimate()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceRow {
    pub t: f64,
    pub empirical: McEstimate,
    /// `exp(n λ(t))`, available for iid increments.
    pub exact: Option<f64>,
}

/// Monte-Carlo `E e^{t S_n}` on `t_grid` (any finite reals, `0` allowed).
pub fn estimate_laplace(spec: &ExperimentSpec, t_grid: &[f64]) -> Result<Vec<LaplaceRow>> {
    spec.validate()?;
    let (law, scale) = match spec.increments {
        Increments::Iid { law } => (law, 1.0),
        Increments::Arch {
            innovation,
            sigma_hi,
            ..
        } => (innovation, sigma_hi),
    };
    for &t in t_grid {
        if !law.in_mgf_domain(t * scale) {
            return Err(Error::Domain {
                name: "t",
                value: t,
                expected: "inside the domain of the increment moment generating function",
            });
        }
    }
    let sums = spec.final_sums();
    let nf = spec.n as f64;
    t_grid
        .iter()
        .map(|&t| {
            let mut acc = Moments::default();
            for &s in &sums {
                acc.push((t * s).exp());
            }
            let exact = match spec.increments {
                Increments::Iid { law } => Some((nf * law.log_mgf(t)?).exp()),
                Increments::Arch { .. } => None,
            };
            Ok(LaplaceRow {
                t,
                empirical: acc.estimate(),
                exact,
            })
        })
        .collect()
}

/// The moment hypothesis a curve was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "hypothesis", rename_all = "snake_case")]
pub enum Hypothesis {
    /// `E[e^{δ|X|^q} | F] ≤ K`.
    ExpMoment { delta: f64, q: f64 },
    /// `|X| ≤ a`.
    Bounded { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Pass,
    Fail,
    /// The bound is below `10/M`: no violation seen, but too small to certify.
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerificationRow {
    pub abscissa: f64,
    pub empirical: McEstimate,
    pub bound: f64,
    /// `(bound − mean)/stderr`; `±∞` when the stderr is zero.
    pub slack_sigmas: f64,
    /// `mean ≤ bound + z·stderr`.
    pub pass: bool,
    /// `bound ≥ 10/M`.
    pub resolved: bool,
}

impl VerificationRow {
    pub fn new(abscissa: f64, empirical: McEstimate, bound: f64, z: f64) -> Self {
        let gap = bound - empirical.mean;
        let slack_sigmas = if empirical.stderr > 0.0 {
            gap / empirical.stderr
        } else if gap >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        VerificationRow {
            abscissa,
            empirical,
            bound,
            slack_sigmas,
            pass: empirical.mean <= bound + z * empirical.stderr,
            resolved: bound * empirical.count as f64 >= 10.0,
        }
    }

    /// A violation is a failure even when the row is unresolved.
    pub fn status(&self) -> RowStatus {
        match (self.pass, self.resolved) {
            (false, _) => RowStatus::Fail,
            (true, true) => RowStatus::Pass,
            (true, false) => RowStatus::Unresolved,
        }
    }
}

/// Checks `curve` against the empirical tails of `spec`.
///
/// `k_used` is the moment constant the curve was built with; it must be at
/// least the process's actual conditional moment under `hypothesis`.
pub fn verify_curve(
    spec: &ExperimentSpec,
    curve: &TailBoundCurve<f64>,
    hypothesis: Hypothesis,
    k_used: f64,
    z: f64,
) -> Result<Vec<VerificationRow>> {
    spec.validate()?;
    match hypothesis {
        Hypothesis::ExpMoment { delta, q } => {
            let actual = spec.increments.conditional_exp_moment(delta, q)?;
            if !(k_used >= actual) {
                return Err(Error::Precondition(format!(
                    "k_used = {k_used} is below the increments' moment {actual} (delta = {delta}, q = {q})"
                )));
            }
        }
        Hypothesis::Bounded { a } => {
            let actual = spec.increments.abs_bound();
            if !(a >= actual) {
                return Err(Error::Precondition(format!(
                    "increments reach {actual}, beyond the assumed bound {a}"
                )));
            }
        }
    }
    let empirical = estimate_tail(spec)?;
    let factor = spec.side.bound_factor();
    Ok(spec
        .grid
        .iter()
        .zip(empirical)
        .map(|(&x, e)| {
            let bound = (factor * curve.bound(spec.n as u64, x)).min(1.0);
            VerificationRow::new(x, e, bound, z)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub estimate: McEstimate,
    /// 0.99-quantile of the per-replicate statistic.
    pub q99: f64,
}

/// Per replicate statistics `stat(n, S_n)` at every `n` in `n_list`,
/// from one path of length `max(n_list)` per replicate.
fn trace(
    increments: &Increments,
    n_list: &[usize],
    key: StreamKey,
    replicates: usize,
    stat: impl Fn(usize, f64) -> f64 + Sync,
) -> Result<Vec<TraceRow>> {
    increments.validate()?;
    let n_max = match n_list.iter().max() {
        Some(&n) => n,
        None => return Ok(Vec::new()),
    };
    let per_rep: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut buf = vec![0.0; n_max];
            increments.path(
                StreamKey::replicate(key.master_seed, key.stream_index, r as u64),
                &mut buf,
            );
            n_list.iter().map(|&n| stat(n, buf[n - 1])).collect()
        })
        .collect();
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let mut col: Vec<f64> = per_rep.iter().map(|row| row[j]).collect();
            let estimate = McEstimate::from_samples(&col);
            col.sort_by(|a, b| a.total_cmp(b));
            TraceRow {
                n,
                estimate,
                q99: quantile_sorted(&col, 0.99),
            }
        })
        .collect())
}

/// `|S_n|/√(n ln n)` for each `n ≥ 3` in `n_list`; smaller `n` are skipped.
pub fn as_rate_trace(
    increments: &Increments,
    n_list: &[usize],
    key: StreamKey,
    replicates: usize,
) -> Result<Vec<TraceRow>> {
    let ns: Vec<usize> = n_list.iter().copied().filter(|&n| n >= 3).collect();
    trace(increments, &ns, key, replicates, |n, s| {
        let nf = n as f64;
        s.abs() / (nf * nf.ln()).sqrt()
    })
}

/// `n^{p/2} (|S_n|/n)^p` for each `n` in `n_list`.
pub fn lp_rate_trace(
    increments: &Increments,
    p: f64,
    n_list: &[usize],
    key: StreamKey,
    replicates: usize,
) -> Result<Vec<TraceRow>> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            expected: "must be > 0",
        });
    }
    if n_list.contains(&0) {
        return Err(Error::Invalid("n must be >= 1".into()));
    }
    trace(increments, n_list, key, replicates, |n, s| {
        let nf = n as f64;
        nf.powf(p / 2.0) * (s.abs() / nf).powf(p)
    })
}

/// Whether all rows pass (unresolved rows count as passing).
pub fn all_pass(rows: &[VerificationRow]) -> bool {
    rows.iter().all(|r| r.status() != RowStatus::Fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(law: Law, n: usize, grid: Vec<f64>, m: usize) -> ExperimentSpec {
        ExperimentSpec {
            increments: Increments::iid(law),
            n,
            grid,
            replicates: m,
            key: StreamKey::new(11, 5),
            side: Side::Upper,
        }
    }

    #[test]
    fn rejects_uncentred_and_bad_grids() {
        let s = spec(Law::Gaussian { mean: 1.0, sd: 1.0 }, 3, vec![0.1], 100);
        assert!(matches!(estimate_tail(&s), Err(Error::Precondition(_))));
        let s = spec(Law::Rademacher, 3, vec![0.2, 0.1], 100);
        assert!(estimate_tail(&s).is_err());
        let s = spec(Law::Rademacher, 3, vec![0.1], 99);
        assert!(estimate_tail(&s).is_err());
    }

    #[test]
    fn impossible_event_has_zero_frequency() {
        let s = spec(Law::Rademacher, 10, vec![1.0, 2.0], 1000);
        let e = estimate_tail(&s).unwrap();
        assert!(e.iter().all(|e| e.mean == 0.0 && e.stderr == 0.0));
    }

    #[test]
    fn laplace_at_zero_is_exactly_one() {
        let s = spec(Law::Gaussian { mean: 0.0, sd: 1.0 }, 3, vec![0.1], 500);
        let rows = estimate_laplace(&s, &[0.0, 0.5]).unwrap();
        assert_eq!(rows[0].empirical.mean, 1.0);
        assert_eq!(rows[0].empirical.stderr, 0.0);
        assert!((rows[1].exact.unwrap() - (3.0f64 * 0.125).exp()).abs() < 1e-12);
        let l = spec(Law::Laplace { scale: 0.5 }, 3, vec![0.1], 500);
        assert!(estimate_laplace(&l, &[2.5]).is_err());
    }

    #[test]
    fn row_status_rules() {
        let e = McEstimate { mean: 0.02, stderr: 0.01, count: 1000 };
        assert_eq!(VerificationRow::new(1.0, e, 0.0, 3.0).status(), RowStatus::Unresolved);
        assert_eq!(VerificationRow::new(1.0, e, 0.5, 3.0).status(), RowStatus::Pass);
        assert_eq!(VerificationRow::new(1.0, McEstimate::exact(0.0, 1000), 1e-3, 3.0).status(), RowStatus::Unresolved);
        assert_eq!(VerificationRow::new(1.0, McEstimate { mean: 0.2, stderr: 0.01, count: 1000 }, 0.1, 3.0).status(), RowStatus::Fail);
    }

    #[test]
    fn verify_curve_checks_the_hypothesis() {
        let s = spec(Law::Laplace { scale: 0.5 }, 10, vec![0.5, 1.0], 200);
        let curve = TailBoundCurve::bernstein(1.5).unwrap();
        let h = Hypothesis::ExpMoment { delta: 1.0, q: 1.0 };
        assert!(matches!(verify_curve(&s, &curve, h, 1.5, 3.0), Err(Error::Precondition(_))));
        assert!(verify_curve(&s, &curve, h, 2.0, 3.0).is_ok());
        let b = Hypothesis::Bounded { a: 1.0 };
        assert!(verify_curve(&s, &curve, b, 2.0, 3.0).is_err());
    }

    #[test]
    fn arch_process_is_a_martingale_with_bounded_volatility() {
        let inc = Increments::Arch {
            innovation: Law::Rademacher,
            sigma_lo: 0.5,
            sigma_hi: 1.0,
        };
        assert_eq!(inc.abs_bound(), 1.0);
        assert!((inc.conditional_exp_moment(1.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        let mut buf = vec![0.0; 50];
        inc.path(StreamKey::new(1, 1), &mut buf);
        let mut prev = 0.0;
        for &s in &buf {
            let step: f64 = s - prev;
            assert!(step.abs() >= 0.5 - 1e-15 && step.abs() <= 1.0 + 1e-15);
            prev = s;
        }
    }

    #[test]
    fn trace_skips_small_n() {
        let rows = as_rate_trace(&Increments::iid(Law::Rademacher), &[1, 2, 3, 10], StreamKey::new(1, 2), 100).unwrap();
        assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![3, 10]);
    }
}

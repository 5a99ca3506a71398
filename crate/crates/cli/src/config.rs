//! Experiment configuration files.
//!
//! One JSON document per experiment:
//!
//! ```json
//! {
//!   "name": "rademacher_hoeffding",
//!   "seed": 20240611,
//!   "z_threshold": 3.0,
//!   "kind": "martingale_verify",
//!   "law": {"law": "rademacher"},
//!   "theorem": {"theorem": "hoeffding_bounded"},
//!   "n_list": [10],
//!   "x_grid": [0.2, 0.4, 0.8],
//!   "replicates": 100000
//! }
//! ```

use std::path::Path;

use polymer_bounds::bounds::{
    hoeffding_type_constant, polymer_q_constants, q_regime_constants, dual_tau, TailBoundCurve,
};
use polymer_bounds::laws::Law;
use polymer_bounds::martingale::{Hypothesis, Increments, Side};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 20_240_611;
pub const DEFAULT_Z: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_threshold: Option<f64>,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    BoundsEval(BoundsEval),
    MartingaleVerify(MartingaleVerify),
    PolymerEnergy(PolymerEnergy),
    PolymerConcentration(PolymerConcentration),
    CascadeCompare(CascadeCompare),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::BoundsEval(_) => "bounds_eval",
            Experiment::MartingaleVerify(_) => "martingale_verify",
            Experiment::PolymerEnergy(_) => "polymer_energy",
            Experiment::PolymerConcentration(_) => "polymer_concentration",
            Experiment::CascadeCompare(_) => "cascade_compare",
        }
    }
}

/// A tail curve with explicit constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "curve", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    /// `exp(−n(√(δx+K)−√K)²)` under `E e^{δ|X|} ≤ K`.
    Bernstein {
        k: f64,
        #[serde(default = "one")]
        delta: f64,
    },
    BernsteinPiecewise { k: f64 },
    EpsilonRegimes { k: f64, eps: f64 },
    Petrov { a: f64, t_cap: f64 },
    HoeffdingBounded { a: f64 },
    HoeffdingType { r: f64, k: f64 },
    QRegime {
        q: f64,
        r: f64,
        k: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau1: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn default_tau1(q: f64, r: f64, tau1: Option<f64>) -> Result<f64, CliError> {
    match tau1 {
        Some(t) => Ok(t),
        None => Ok(2.0 * dual_tau(q, r)?),
    }
}

impl CurveSpec {
    pub fn build(&self) -> Result<TailBoundCurve<f64>, CliError> {
        Ok(match *self {
            CurveSpec::Bernstein { k, delta } => TailBoundCurve::bernstein_scaled(k, delta)?,
            CurveSpec::BernsteinPiecewise { k } => TailBoundCurve::bernstein_piecewise(k)?,
            CurveSpec::EpsilonRegimes { k, eps } => TailBoundCurve::epsilon_regimes(k, eps)?,
            CurveSpec::Petrov { a, t_cap } => TailBoundCurve::petrov(a, t_cap)?,
            CurveSpec::HoeffdingBounded { a } => TailBoundCurve::hoeffding_bounded(a)?,
            CurveSpec::HoeffdingType { r, k } => {
                TailBoundCurve::hoeffding_type(&hoeffding_type_constant(r, k)?)?
            }
            CurveSpec::QRegime { q, r, k, tau1 } => {
                let tau1 = default_tau1(q, r, tau1)?;
                TailBoundCurve::q_regime(&q_regime_constants(q, r, k, tau1)?)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsEval {
    pub curve: CurveSpec,
    pub n: u64,
    pub x_grid: Vec<f64>,
}

/// Which theorem to certify; the moment constant `K` is computed from the
/// increment law unless overridden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "theorem", rename_all = "snake_case", deny_unknown_fields)]
pub enum TheoremSpec {
    /// Bernstein rate under `E e^{δ|X|} ≤ K`.
    Bernstein {
        #[serde(default = "one")]
        delta: f64,
    },
    BernsteinPiecewise,
    EpsilonRegimes { eps: f64 },
    /// `exp(−n x²/(2a²))` for `|X| ≤ a`.
    HoeffdingBounded,
    /// Sub-Gaussian bound under `E e^{R X²} ≤ K`.
    HoeffdingType { r: f64 },
    /// Two-regime bound under `E e^{R|X|^Q} ≤ K`.
    QRegime {
        q: f64,
        r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau1: Option<f64>,
    },
}

impl TheoremSpec {
    pub fn hypothesis(&self, increments: &Increments) -> Hypothesis {
        match *self {
            TheoremSpec::Bernstein { delta } => Hypothesis::ExpMoment { delta, q: 1.0 },
            TheoremSpec::BernsteinPiecewise | TheoremSpec::EpsilonRegimes { .. } => {
                Hypothesis::ExpMoment { delta: 1.0, q: 1.0 }
            }
            TheoremSpec::HoeffdingBounded => Hypothesis::Bounded { a: increments.abs_bound() },
            TheoremSpec::HoeffdingType { r } => Hypothesis::ExpMoment { delta: r, q: 2.0 },
            TheoremSpec::QRegime { q, r, .. } => Hypothesis::ExpMoment { delta: r, q },
        }
    }

    /// The moment constant of the hypothesis for `increments`.
    pub fn moment(&self, increments: &Increments) -> Result<f64, CliError> {
        Ok(match self.hypothesis(increments) {
            Hypothesis::ExpMoment { delta, q } => increments.conditional_exp_moment(delta, q)?,
            Hypothesis::Bounded { a } => a,
        })
    }

    pub fn curve(&self, k: f64) -> Result<CurveSpec, CliError> {
        Ok(match *self {
            TheoremSpec::Bernstein { delta } => CurveSpec::Bernstein { k, delta },
            TheoremSpec::BernsteinPiecewise => CurveSpec::BernsteinPiecewise { k },
            TheoremSpec::EpsilonRegimes { eps } => CurveSpec::EpsilonRegimes { k, eps },
            TheoremSpec::HoeffdingBounded => CurveSpec::HoeffdingBounded { a: k },
            TheoremSpec::HoeffdingType { r } => CurveSpec::HoeffdingType { r, k },
            TheoremSpec::QRegime { q, r, tau1 } => CurveSpec::QRegime { q, r, k, tau1 },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchSpec {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleVerify {
    pub law: Law,
    /// Centre the law before use.
    #[serde(default)]
    pub center: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arch: Option<ArchSpec>,
    pub theorem: TheoremSpec,
    /// Moment constant to use instead of the computed one; must not be
    /// smaller.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    pub n_list: Vec<usize>,
    pub x_grid: Vec<f64>,
    pub replicates: usize,
    #[serde(default = "upper")]
    pub side: Side,
}

fn upper() -> Side {
    Side::Upper
}

impl MartingaleVerify {
    pub fn increments(&self) -> Increments {
        let law = if self.center { self.law.centered() } else { self.law };
        match self.arch {
            None => Increments::iid(law),
            Some(a) => Increments::Arch {
                innovation: law,
                sigma_lo: a.sigma_lo,
                sigma_hi: a.sigma_hi,
            },
        }
    }
}

fn default_d() -> u32 {
    1
}

fn default_p() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolymerEnergy {
    #[serde(default = "default_d")]
    pub d: u32,
    pub beta: f64,
    pub env_law: Law,
    pub n_list: Vec<u32>,
    pub replicates: usize,
    /// Exponent of the `L^p` fluctuation statistic.
    #[serde(default = "default_p")]
    pub p: f64,
}

/// Curve for the polymer concentration experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "curve", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolymerCurve {
    /// `exp(−n(√(x+K)−√K)²)` with `K = 2 exp(λ(β)+λ(−β))`.
    Bernstein,
    /// Q-type curve under `E e^{R|η|^Q} ≤ K₀`, `K₀` from the law.
    PolymerQ {
        q: f64,
        r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau1: Option<f64>,
    },
}

impl PolymerCurve {
    pub fn build(&self, beta: f64, law: &Law) -> Result<TailBoundCurve<f64>, CliError> {
        let lp = law.log_mgf(beta)?;
        let lm = law.log_mgf(-beta)?;
        Ok(match *self {
            PolymerCurve::Bernstein => {
                TailBoundCurve::bernstein(polymer_bounds::bounds::polymer_k_constant(lp, lm)?)?
            }
            PolymerCurve::PolymerQ { q, r, tau1 } => {
                let k0 = law.exp_moment(r, q)?;
                let tau1 = default_tau1(q, r, tau1)?;
                TailBoundCurve::polymer_q(&polymer_q_constants(beta, q, r, k0, tau1, lp, lm)?)?
            }
        })
    }
}

fn default_polymer_curve() -> PolymerCurve {
    PolymerCurve::Bernstein
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolymerConcentration {
    #[serde(default = "default_d")]
    pub d: u32,
    pub beta: f64,
    pub env_law: Law,
    pub n: u32,
    pub replicates: usize,
    pub x_grid: Vec<f64>,
    #[serde(default = "default_polymer_curve")]
    pub curve: PolymerCurve,
}

fn default_resolution() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeCompare {
    #[serde(default = "default_d")]
    pub d: u32,
    pub beta: f64,
    pub env_law: Law,
    pub m_list: Vec<u32>,
    pub n: u32,
    pub replicates: usize,
    #[serde(default = "default_resolution")]
    pub theta_resolution: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialise")
    }

    /// Structural checks that serde cannot express.
    pub fn check(&self) -> Result<(), CliError> {
        let bad = |field: &str, why: &str| Err(CliError::Config(format!("field `{field}`: {why}")));
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return bad("name", "must be a non-empty identifier of [A-Za-z0-9_-]");
        }
        if let Some(z) = self.z_threshold {
            if !(z.is_finite() && z >= 0.0) {
                return bad("z_threshold", "must be a finite non-negative number");
            }
        }
        let grid_ok = |g: &[f64]| {
            !g.is_empty()
                && g.iter().all(|x| x.is_finite() && *x > 0.0)
                && g.windows(2).all(|w| w[0] < w[1])
        };
        match &self.experiment {
            Experiment::BoundsEval(b) => {
                if b.n == 0 {
                    return bad("n", "must be >= 1");
                }
                if !grid_ok(&b.x_grid) {
                    return bad("x_grid", "must be a non-empty strictly increasing list of positive numbers");
                }
            }
            Experiment::MartingaleVerify(m) => {
                if m.n_list.is_empty() || m.n_list.contains(&0) {
                    return bad("n_list", "must be a non-empty list of positive integers");
                }
                if !grid_ok(&m.x_grid) {
                    return bad("x_grid", "must be a non-empty strictly increasing list of positive numbers");
                }
                if m.replicates < 100 {
                    return bad("replicates", "must be >= 100");
                }
                m.law.validate().map_err(|e| CliError::Config(format!("field `law`: {e}")))?;
            }
            Experiment::PolymerEnergy(p) => {
                if p.n_list.is_empty() || p.n_list.contains(&0) {
                    return bad("n_list", "must be a non-empty list of positive integers");
                }
                if p.replicates < 2 {
                    return bad("replicates", "must be >= 2");
                }
                p.env_law.validate().map_err(|e| CliError::Config(format!("field `env_law`: {e}")))?;
            }
            Experiment::PolymerConcentration(p) => {
                if p.n == 0 {
                    return bad("n", "must be >= 1");
                }
                if !grid_ok(&p.x_grid) {
                    return bad("x_grid", "must be a non-empty strictly increasing list of positive numbers");
                }
                if p.replicates < 2 {
                    return bad("replicates", "must be >= 2");
                }
                p.env_law.validate().map_err(|e| CliError::Config(format!("field `env_law`: {e}")))?;
            }
            Experiment::CascadeCompare(c) => {
                if c.m_list.is_empty() || c.m_list.contains(&0) || c.n == 0 {
                    return bad("m_list", "m_list and n must be positive");
                }
                if c.replicates < 2 {
                    return bad("replicates", "must be >= 2");
                }
                c.env_law.validate().map_err(|e| CliError::Config(format!("field `env_law`: {e}")))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "name": "demo",
        "kind": "martingale_verify",
        "law": {"law": "stretched_exp", "q": 1.5, "r": 1.0},
        "theorem": {"theorem": "q_regime", "q": 1.5, "r": 0.5},
        "n_list": [10, 50],
        "x_grid": [0.1, 0.2],
        "replicates": 1000,
        "side": "upper"
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert_eq!(cfg.seed, None);
        assert_eq!(cfg.experiment.kind(), "martingale_verify");
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let e = ExperimentConfig::from_json(&SAMPLE.replace("\"replicates\": 1000", "\"replicates\": 10")).unwrap_err();
        assert!(e.to_string().contains("replicates"), "{e}");
        let e = ExperimentConfig::from_json(&SAMPLE.replace("n_list", "n_lst")).unwrap_err();
        assert!(e.to_string().contains("n_lst") || e.to_string().contains("n_list"), "{e}");
        let e = ExperimentConfig::from_json(&SAMPLE.replace("martingale_verify", "unknown_kind")).unwrap_err();
        assert!(e.to_string().contains("unknown_kind"), "{e}");
        let e = ExperimentConfig::from_json(&SAMPLE.replace("\"side\"", "\"typo\": 1, \"side\"")).unwrap_err();
        assert!(e.to_string().contains("typo"), "{e}");
        let e = ExperimentConfig::from_json("{ \"name\": ").unwrap_err();
        assert!(e.to_string().contains("line"), "{e}");
    }
}

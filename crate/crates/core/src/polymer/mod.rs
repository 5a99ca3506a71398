//! Directed polymers in a random environment: exact partition functions by
//! log-domain dynamic programming over the reachable cone.

mod cone;
mod experiments;

pub use cone::{reachable_sites, ConeSlice};
pub use experiments::{
    as_rate_report, as_rate_rows, concentration_experiment, free_energy_samples,
    free_energy_trace, mean_rate_check, mean_rate_rows, AsRateRow, ConcentrationReport,
    EnergyStats, MeanRateRow,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::polymer_k_constant;
use crate::error::{Error, Result};
use crate::laws::Law;
use crate::rng::StreamKey;
use crate::scalar::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolymerConfig {
    pub d: u32,
    pub n: u32,
    pub beta: f64,
    pub env_law: Law,
    /// `stream_index` is the experiment id; replicate `r` uses
    /// `StreamKey::replicate(master_seed, stream_index, r)`.
    pub key: StreamKey,
}

impl PolymerConfig {
    /// Checks dimensions and that `λ(±β)` is finite. `β = 0` is allowed.
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Invalid("d must be >= 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Invalid("n must be >= 1".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain {
                name: "beta",
                value: self.beta,
                expected: "must be >= 0",
            });
        }
        self.env_law.validate()?;
        self.env_law.log_mgf(self.beta)?;
        self.env_law.log_mgf(-self.beta)?;
        Ok(())
    }

    pub fn lambda(&self) -> Result<f64> {
        self.env_law.log_mgf(self.beta)
    }

    /// `K = 2 exp(λ(β) + λ(−β))`.
    pub fn k_constant(&self) -> Result<f64> {
        polymer_k_constant(self.env_law.log_mgf(self.beta)?, self.env_law.log_mgf(-self.beta)?)
    }

    /// `β·E η − λ(β)`, the lower end of the free-energy bracket.
    pub fn lower_bracket(&self) -> Result<f64> {
        Ok(self.beta * self.env_law.mean() - self.lambda()?)
    }

    pub fn with_n(&self, n: u32) -> Self {
        PolymerConfig { n, ..*self }
    }

    pub fn replicate_key(&self, r: usize) -> StreamKey {
        StreamKey::replicate(self.key.master_seed, self.key.stream_index, r as u64)
    }
}

/// `η(k, x)` on the cone, one slice per time `k = 1..=n`.
#[derive(Debug, Clone)]
pub struct Environment {
    slices: Vec<ConeSlice>,
    values: Vec<Vec<f64>>,
}

impl Environment {
    /// Draws the slices in time order, each in slice index order, from one
    /// stream. The environment up to time `n` is therefore a prefix of the
    /// environment up to any later time drawn from the same key.
    pub fn sample(d: u32, n: u32, law: &Law, key: StreamKey) -> Self {
        let mut rng = key.rng();
        let mut slices = Vec::with_capacity(n as usize);
        let mut values = Vec::with_capacity(n as usize);
        for k in 1..=n {
            let s = ConeSlice::new(d, k);
            values.push(sample_slice(law, s.len(), &mut rng));
            slices.push(s);
        }
        Environment { slices, values }
    }

    pub fn from_values(d: u32, values: Vec<Vec<f64>>) -> Result<Self> {
        let slices: Vec<ConeSlice> = (1..=values.len() as u32).map(|k| ConeSlice::new(d, k)).collect();
        for (s, v) in slices.iter().zip(&values) {
            if s.len() != v.len() {
                return Err(Error::Invalid(format!(
                    "slice {} needs {} values, got {}",
                    s.time(),
                    s.len(),
                    v.len()
                )));
            }
        }
        Ok(Environment { slices, values })
    }

    pub fn dim(&self) -> u32 {
        self.slices.first().map_or(1, |s| s.dim())
    }

    pub fn horizon(&self) -> u32 {
        self.slices.len() as u32
    }

    pub fn slice(&self, k: u32) -> &[f64] {
        &self.values[k as usize - 1]
    }

    pub fn value(&self, k: u32, x: &[i32]) -> Option<f64> {
        let i = self.slices.get(k as usize - 1)?.index_of(x)?;
        Some(self.values[k as usize - 1][i])
    }

    /// Number of stored `η` values, `Σ_k |L_k|`.
    pub fn stored_sites(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }
}

fn sample_slice<R: Rng>(law: &Law, len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| law.sample_one(rng)).collect()
}

/// `ln W_k(0, x)` for every `x ∈ L_k`.
#[derive(Debug, Clone)]
pub struct PartitionState {
    slice: ConeSlice,
    log_w: Vec<f64>,
}

impl PartitionState {
    pub fn origin(d: u32) -> Self {
        PartitionState {
            slice: ConeSlice::new(d, 0),
            log_w: vec![0.0],
        }
    }

    pub fn time(&self) -> u32 {
        self.slice.time()
    }

    pub fn slice(&self) -> &ConeSlice {
        &self.slice
    }

    pub fn log_w(&self) -> &[f64] {
        &self.log_w
    }

    /// `ln W_k`, the log-sum-exp over the slice.
    pub fn ln_total(&self) -> f64 {
        log_sum_exp(&self.log_w)
    }

    /// One transfer step with the environment `eta` of slice `k + 1`:
    /// `ln W_{k+1}(y) = lse_{x∼y} ln W_k(x) − ln 2d + β η(k+1, y) − λ`.
    pub fn step(&mut self, eta: &[f64], beta: f64, lambda: f64) {
        let next = ConeSlice::new(self.slice.dim(), self.slice.time() + 1);
        assert_eq!(eta.len(), next.len(), "environment slice does not match the cone");
        let ln_2d = (2.0 * self.slice.dim() as f64).ln();
        let mut out = Vec::with_capacity(next.len());
        let mut preds = Vec::with_capacity(2 * self.slice.dim() as usize);
        for (i, &e) in eta.iter().enumerate() {
            preds.clear();
            next.for_each_predecessor(i, &self.slice, |p| preds.push(self.log_w[p]));
            let lse = log_sum_exp(&preds);
            out.push(lse - ln_2d + beta * e - lambda);
        }
        self.slice = next;
        self.log_w = out;
    }
}

/// Runs the transfer recursion through all of `env` and returns the final
/// state together with `ln W_n`.
pub fn dp_partition(env: &Environment, beta: f64, lambda_beta: f64) -> (PartitionState, f64) {
    let mut state = PartitionState::origin(env.dim());
    for k in 1..=env.horizon() {
        state.step(env.slice(k), beta, lambda_beta);
    }
    let total = state.ln_total();
    (state, total)
}

/// Samples the environment slice by slice and runs the recursion without
/// storing past slices, calling `visit` after every step.
pub fn stream_partition(
    d: u32,
    n: u32,
    beta: f64,
    lambda_beta: f64,
    law: &Law,
    key: StreamKey,
    mut visit: impl FnMut(&PartitionState),
) -> PartitionState {
    let mut rng = key.rng();
    let mut state = PartitionState::origin(d);
    for k in 1..=n {
        let len = ConeSlice::new(d, k).len();
        let eta = sample_slice(law, len, &mut rng);
        state.step(&eta, beta, lambda_beta);
        visit(&state);
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss() -> Law {
        Law::Gaussian { mean: 0.0, sd: 1.0 }
    }

    #[test]
    fn beta_zero_is_normalised() {
        for d in 1..=3 {
            let env = Environment::sample(d, 6, &gauss(), StreamKey::new(1, d as u64));
            let (state, total) = dp_partition(&env, 0.0, 0.0);
            assert!(total.abs() < 1e-12);
            assert_eq!(state.log_w().len(), ConeSlice::new(d, 6).len());
        }
    }

    #[test]
    fn one_step_unrolled() {
        let env = Environment::from_values(1, vec![vec![0.3, -1.1]]).unwrap();
        let (beta, lambda) = (0.7, 0.245);
        let (_, total) = dp_partition(&env, beta, lambda);
        let expected = (0.5 * ((beta * 0.3 - lambda).exp() + (beta * -1.1 - lambda).exp())).ln();
        assert!((total - expected).abs() < 1e-14);
    }

    #[test]
    fn environment_is_deterministic_with_prefix_property() {
        let a = Environment::sample(2, 4, &gauss(), StreamKey::new(9, 1));
        let b = Environment::sample(2, 6, &gauss(), StreamKey::new(9, 1));
        for k in 1..=4 {
            assert_eq!(a.slice(k), b.slice(k));
        }
        let e = Environment::sample(1, 2, &gauss(), StreamKey::new(1, 1));
        assert_eq!(e.stored_sites(), 5);
        assert_eq!(Environment::sample(1, 100, &gauss(), StreamKey::new(1, 1)).stored_sites(), 5150);
    }

    #[test]
    fn streaming_matches_stored_environment() {
        let law = gauss();
        let key = StreamKey::new(4, 2);
        let env = Environment::sample(2, 7, &law, key);
        let (state, total) = dp_partition(&env, 0.8, 0.32);
        let mut seen = Vec::new();
        let streamed = stream_partition(2, 7, 0.8, 0.32, &law, key, |s| seen.push(s.time()));
        assert_eq!(seen, (1..=7).collect::<Vec<_>>());
        assert_eq!(streamed.log_w(), state.log_w());
        assert_eq!(streamed.ln_total(), total);
    }

    #[test]
    fn config_validation() {
        let cfg = PolymerConfig {
            d: 1,
            n: 5,
            beta: 3.0,
            env_law: Law::Laplace { scale: 0.5 },
            key: StreamKey::new(1, 1),
        };
        assert!(cfg.validate().is_err());
        let ok = PolymerConfig { beta: 0.5, env_law: gauss(), ..cfg };
        assert!(ok.validate().is_ok());
        assert!((ok.k_constant().unwrap() - 2.0 * 0.25f64.exp()).abs() < 1e-14);
        assert!((ok.lower_bracket().unwrap() + 0.125).abs() < 1e-15);
    }
}

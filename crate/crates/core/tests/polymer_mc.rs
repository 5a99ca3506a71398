use polymer_bounds::bounds::TailBoundCurve;
use polymer_bounds::cascade::{compare_with_polymer, theta_grid, CascadeSamples};
use polymer_bounds::laws::Law;
use polymer_bounds::polymer::{
    as_rate_report, concentration_experiment, free_energy_samples, free_energy_trace,
    mean_rate_check, PolymerConfig,
};
use polymer_bounds::StreamKey;

fn cfg(beta: f64, n: u32, seed: u64) -> PolymerConfig {
    PolymerConfig {
        d: 1,
        n,
        beta,
        env_law: Law::Gaussian { mean: 0.0, sd: 1.0 },
        key: StreamKey::new(seed, 42),
    }
}

#[test]
fn free_energy_bracket_and_jensen() {
    let stats = free_energy_samples(&cfg(0.5, 20, 1), 2000).unwrap();
    let fe = stats.free_energy();
    assert!(fe.mean <= 3.0 * fe.stderr);
    assert!(fe.mean >= -0.125 - 3.0 * fe.stderr);
    let other = free_energy_samples(&cfg(0.5, 20, 2), 2000).unwrap().free_energy();
    let se = (fe.stderr.powi(2) + other.stderr.powi(2)).sqrt();
    assert!((fe.mean - other.mean).abs() <= 6.0 * se);
}

#[test]
fn beta_zero_everything_vanishes() {
    let stats = free_energy_samples(&cfg(0.0, 15, 1), 50).unwrap();
    assert!(stats.ln_w.iter().all(|v| v.abs() < 1e-12));
    let rows = mean_rate_check(&cfg(0.0, 1, 1), &[5, 10], 50, 3.0).unwrap();
    assert!(rows.iter().all(|r| r.deficit.mean.abs() < 1e-12));
    let rows = as_rate_report(&cfg(0.0, 1, 1), &[5, 10], 50, 2.0).unwrap();
    assert!(rows.iter().all(|r| r.q99 < 1e-10));
}

#[test]
fn trace_matches_single_horizon_runs() {
    let c = cfg(0.4, 1, 9);
    let trace = free_energy_trace(&c, &[3, 7], 40).unwrap();
    let single = free_energy_samples(&c.with_n(7), 40).unwrap();
    assert_eq!(trace[1].ln_w, single.ln_w);
}

#[test]
fn superadditivity_trend() {
    let trace = free_energy_trace(&cfg(0.5, 1, 3), &[10, 20, 40], 2000).unwrap();
    for w in trace.windows(2) {
        let (a, b) = (w[0].free_energy(), w[1].free_energy());
        let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!(b.mean >= a.mean - 3.0 * se);
    }
}

#[test]
fn concentration_rows_pass() {
    let c = cfg(0.5, 50, 4);
    let k = c.k_constant().unwrap();
    assert!((k - 2.0 * 0.25f64.exp()).abs() < 1e-14);
    let curve = TailBoundCurve::bernstein(k).unwrap();
    let report = concentration_experiment(&c, 2000, &[0.05, 0.1, 0.2, 0.4, 5.0], &curve, 3.0).unwrap();
    assert!(report.rows.iter().all(|r| r.pass));
    assert_eq!(report.rows[4].empirical.mean, 0.0);
}

#[test]
fn mean_rate_deficit_inside_bound() {
    let rows = mean_rate_check(&cfg(0.3, 1, 5), &[25, 100], 1000, 3.0).unwrap();
    assert!(rows.iter().all(|r| r.lower_ok && r.upper_ok), "{rows:?}");
    assert_eq!(rows[1].deficit.mean, 0.0);
}

#[test]
fn as_rate_quantiles_below_ceiling() {
    let rows = as_rate_report(&cfg(0.5, 1, 6), &[30, 60, 120], 500, 2.0).unwrap();
    for r in &rows {
        assert!(r.q99 < r.as_ceiling);
        assert!(r.lp_norm < r.lp_ceiling);
    }
}

#[test]
fn cascade_normalisation_and_inequality() {
    let c = cfg(0.5, 1, 7);
    for m in [1, 2, 4] {
        let s = CascadeSamples::generate(&c, m, 2000).unwrap();
        let v1 = s.v(1.0).unwrap();
        assert!(v1.mean.abs() <= 3.0 * v1.stderr, "m={m}: {v1:?}");
        let est = s.p_tree(1e-3).unwrap();
        assert!(est.p_tree.mean <= 3.0 * est.p_tree.stderr);
        for (_, v) in &est.theta_grid {
            assert!(est.p_tree.mean <= v.mean + 1e-12);
        }
    }
    let cmp = compare_with_polymer(&c, &[1, 2], 20, 2000, 1e-3, 3.0).unwrap();
    assert_eq!(cmp.inequality.len(), 2 * theta_grid().len());
    assert!(cmp.all_pass());
    let zero = compare_with_polymer(&cfg(0.0, 1, 7), &[1, 2], 10, 100, 1e-3, 3.0).unwrap();
    assert!(zero.gap.abs() < 1e-12);
    assert!(zero.polymer_estimate.mean.abs() < 1e-12);
}

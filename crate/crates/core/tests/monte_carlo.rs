use polymer_bounds::bounds::{
    asymptotic_limits, hoeffding_type_constant, ProcessKind, TailBoundCurve,
};
use polymer_bounds::laws::Law;
use polymer_bounds::martingale::{
    as_rate_trace, estimate_laplace, estimate_tail, lp_rate_trace, verify_curve, ExperimentSpec,
    Hypothesis, Increments, RowStatus, Side,
};
use polymer_bounds::oracle::{rademacher_fourth_moment, rademacher_tail_exact};
use polymer_bounds::scalar::normal_sf;
use polymer_bounds::stats::McEstimate;
use polymer_bounds::StreamKey;

fn spec(law: Law, n: usize, grid: Vec<f64>, m: usize, stream: u64) -> ExperimentSpec {
    ExperimentSpec {
        increments: Increments::iid(law),
        n,
        grid,
        replicates: m,
        key: StreamKey::new(20260101, stream),
        side: Side::Upper,
    }
}

#[test]
fn rademacher_sample_mean() {
    let xs = Law::Rademacher.sample(StreamKey::new(1, 1), 1_000_000);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!(mean.abs() < 4.0 / 1000.0);
}

#[test]
fn stretched_exp_sampled_tail() {
    let xs = Law::StretchedExp { q: 2.0, r: 1.0 }.sample(StreamKey::new(1, 2), 1_000_000);
    let hits: Vec<f64> = xs.iter().map(|x| if x.abs() > 1.0 { 1.0 } else { 0.0 }).collect();
    let e = McEstimate::from_samples(&hits);
    assert!(e.agrees_with((-1.0f64).exp(), 3.0), "{e:?}");
}

#[test]
fn stretched_exp_log_mgf_against_sampling() {
    let law = Law::StretchedExp { q: 2.0, r: 0.5 };
    let xs = law.sample(StreamKey::new(2, 9), 10_000_000);
    let vals: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
    let e = McEstimate::from_samples(&vals);
    assert!(e.agrees_with(law.log_mgf(1.0).unwrap().exp(), 3.0), "{e:?}");
}

#[test]
fn rademacher_tail_matches_enumeration() {
    for n in [1usize, 5, 10, 30] {
        let grid = vec![0.05, 0.1, 0.2, 0.4, 0.6, 0.8];
        let s = spec(Law::Rademacher, n, grid.clone(), 100_000, n as u64);
        let est = estimate_tail(&s).unwrap();
        for (x, e) in grid.iter().zip(&est) {
            let exact = rademacher_tail_exact(n as u32, *x, Side::Upper);
            assert!(e.agrees_with_probability(exact, 3.0), "n={n} x={x}: {e:?} vs {exact}");
        }
    }
    assert!((rademacher_tail_exact(10, 0.8, Side::Upper) - 9.765625e-4).abs() < 1e-12);
}

#[test]
fn gaussian_single_step_tail() {
    let s = spec(Law::Gaussian { mean: 0.0, sd: 1.0 }, 1, vec![1.0], 100_000, 77);
    let e = estimate_tail(&s).unwrap()[0];
    assert!(e.agrees_with(normal_sf(1.0), 3.0), "{e:?}");
}

#[test]
fn tails_are_monotone_in_x() {
    let grid: Vec<f64> = (1..=12).map(|i| 0.05 * i as f64).collect();
    let s = spec(Law::Laplace { scale: 0.5 }, 10, grid, 20_000, 3);
    let est = estimate_tail(&s).unwrap();
    for w in est.windows(2) {
        let allowance = 2.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(w[1].mean <= w[0].mean + allowance);
        // Common random numbers make the estimates exactly monotone.
        assert!(w[1].mean <= w[0].mean);
    }
}

#[test]
fn laplace_transform_oracles() {
    let s = spec(Law::Rademacher, 5, vec![0.1], 100_000, 12);
    let rows = estimate_laplace(&s, &[0.0, 1.0]).unwrap();
    assert_eq!(rows[0].empirical.mean, 1.0);
    assert_eq!(rows[0].empirical.stderr, 0.0);
    let exact = 1f64.cosh().powi(5);
    assert!((rows[1].exact.unwrap() - exact).abs() < 1e-12);
    assert!(rows[1].empirical.agrees_with(exact, 3.0));

    let g = spec(Law::Gaussian { mean: 0.0, sd: 1.0 }, 3, vec![0.1], 100_000, 13);
    let rows = estimate_laplace(&g, &[0.5]).unwrap();
    assert!((rows[0].exact.unwrap() - (0.375f64).exp()).abs() < 1e-12);
    assert!(rows[0].empirical.agrees_with(0.375f64.exp(), 3.0));
}

#[test]
fn hoeffding_dominates_exact_rademacher_tail() {
    let curve = TailBoundCurve::hoeffding_bounded(1.0).unwrap();
    for n in 1..=30u32 {
        for i in 1..=40 {
            let x = 0.025 * i as f64;
            let exact = rademacher_tail_exact(n, x, Side::Upper);
            assert!(exact <= curve.bound(n as u64, x) * (1.0 + 1e-12));
        }
    }
    assert!((curve.bound(10, 0.8) - (-3.2f64).exp()).abs() < 1e-15);
}

#[test]
fn verify_curve_passes_for_rademacher_hoeffding() {
    let s = spec(Law::Rademacher, 10, vec![0.2, 0.4, 0.8, 1.5], 100_000, 14);
    let curve = TailBoundCurve::hoeffding_bounded(1.0).unwrap();
    let rows = verify_curve(&s, &curve, Hypothesis::Bounded { a: 1.0 }, 1.0, 3.0).unwrap();
    assert!(rows.iter().all(|r| r.pass));
    assert_eq!(rows[3].empirical.mean, 0.0);
    assert_eq!(rows[3].status(), RowStatus::Unresolved);
    assert_eq!(rows[0].status(), RowStatus::Pass);
}

#[test]
fn arch_process_respects_conditional_bernstein_bound() {
    let inc = Increments::Arch {
        innovation: Law::Gaussian { mean: 0.0, sd: 1.0 },
        sigma_lo: 0.5,
        sigma_hi: 1.0,
    };
    let k = inc.conditional_exp_moment(1.0, 1.0).unwrap();
    let s = ExperimentSpec {
        increments: inc,
        n: 20,
        grid: vec![0.25, 0.5, 1.0, 1.5],
        replicates: 50_000,
        key: StreamKey::new(5, 5),
        side: Side::TwoSided,
    };
    let curve = TailBoundCurve::bernstein(k).unwrap();
    let rows = verify_curve(&s, &curve, Hypothesis::ExpMoment { delta: 1.0, q: 1.0 }, k, 3.0).unwrap();
    assert!(rows.iter().all(|r| r.pass), "{rows:?}");
}

#[test]
fn gaussian_hoeffding_type_curve_holds() {
    let law = Law::Gaussian { mean: 0.0, sd: 1.0 };
    let k = law.exp_moment(0.25, 2.0).unwrap();
    let h = hoeffding_type_constant(0.25, k).unwrap();
    let curve = TailBoundCurve::hoeffding_type(&h).unwrap();
    let s = spec(law, 10, vec![0.1, 0.5, 1.0, 2.0], 50_000, 15);
    let rows = verify_curve(&s, &curve, Hypothesis::ExpMoment { delta: 0.25, q: 2.0 }, k, 3.0).unwrap();
    assert!(rows.iter().all(|r| r.pass));
}

#[test]
fn lp_trace_identities() {
    let key = StreamKey::new(8, 8);
    let rows = lp_rate_trace(&Increments::iid(Law::Rademacher), 2.0, &[1, 10, 100], key, 100_000).unwrap();
    for r in &rows {
        assert!(r.estimate.agrees_with(1.0, 3.0), "{r:?}");
    }
    assert_eq!(rows[0].estimate.mean, 1.0);
    let rows = lp_rate_trace(&Increments::iid(Law::Gaussian { mean: 0.0, sd: 1.0 }), 2.0, &[5, 50], key, 100_000).unwrap();
    for r in &rows {
        assert!(r.estimate.agrees_with(1.0, 3.0), "{r:?}");
    }
    let n = 100usize;
    let rows = lp_rate_trace(&Increments::iid(Law::Rademacher), 4.0, &[n], key, 100_000).unwrap();
    let exact = rademacher_fourth_moment(n as u64) / (n * n) as f64;
    assert!(rows[0].estimate.agrees_with(exact, 3.0), "{:?} vs {exact}", rows[0]);
    let ceiling = asymptotic_limits(4.0, std::f64::consts::E, ProcessKind::Martingale).unwrap();
    assert!(rows[0].estimate.mean < ceiling.lp_limit);
}

#[test]
fn as_trace_below_ceiling() {
    let key = StreamKey::new(8, 9);
    let k = std::f64::consts::E;
    let ceiling = asymptotic_limits(2.0, k, ProcessKind::Martingale).unwrap().as_limit;
    let rows = as_rate_trace(&Increments::iid(Law::Rademacher), &[100, 400, 1600], key, 20_000).unwrap();
    for r in &rows {
        assert!(r.q99 < ceiling, "{r:?}");
    }
    let rows = as_rate_trace(&Increments::iid(Law::Gaussian { mean: 0.0, sd: 1.0 }), &[100, 400, 1600], key, 20_000).unwrap();
    for w in rows.windows(2) {
        // √(ln n) normalisation makes the quantile decrease slowly.
        assert!(w[1].q99 <= w[0].q99 + 0.05, "{rows:?}");
    }
}

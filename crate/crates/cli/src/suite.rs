//! The pinned-seed reference battery.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use polymer_bounds::bounds::{bernstein_rate, dual_rate, legendre_sup};
use polymer_bounds::cascade::CascadeSamples;
use polymer_bounds::laws::Law;
use polymer_bounds::martingale::{estimate_tail, ExperimentSpec, Increments, Side};
use polymer_bounds::oracle::{
    bernstein_rate_grid, legendre_sup_grid, partition_by_paths, rademacher_tail_exact,
};
use polymer_bounds::polymer::{dp_partition, Environment, PolymerConfig};
use polymer_bounds::rng::experiment_id;
use polymer_bounds::StreamKey;

use crate::config::ExperimentConfig;
use crate::report::{ensure_dir, num, Table};
use crate::run::{resolve_seed, run_config, Outcome, RunOptions};
use crate::CliError;

const REFERENCE_CONFIGS: [(&str, &str); 11] = [
    ("bounds_bernstein", include_str!("../../../configs/bounds_bernstein.json")),
    ("rademacher_hoeffding", include_str!("../../../configs/rademacher_hoeffding.json")),
    ("rademacher_bernstein", include_str!("../../../configs/rademacher_bernstein.json")),
    ("gaussian_hoeffding_type", include_str!("../../../configs/gaussian_hoeffding_type.json")),
    ("laplace_bernstein", include_str!("../../../configs/laplace_bernstein.json")),
    ("stretched_exp_q15", include_str!("../../../configs/stretched_exp_q15.json")),
    ("stretched_exp_q3", include_str!("../../../configs/stretched_exp_q3.json")),
    ("polymer_energy", include_str!("../../../configs/polymer_energy.json")),
    ("polymer_concentration", include_str!("../../../configs/polymer_concentration.json")),
    ("polymer_mean_rate", include_str!("../../../configs/polymer_mean_rate.json")),
    ("cascade_compare", include_str!("../../../configs/cascade_compare.json")),
];

/// Configs of the dominance battery.
pub const DOMINANCE_CONFIGS: [&str; 5] = [
    "rademacher_bernstein",
    "gaussian_hoeffding_type",
    "laplace_bernstein",
    "stretched_exp_q15",
    "stretched_exp_q3",
];

pub fn reference_config(name: &str) -> Result<ExperimentConfig, CliError> {
    let (_, text) = REFERENCE_CONFIGS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::Config(format!("no reference config named {name:?}")))?;
    ExperimentConfig::from_json(text)
}

pub fn reference_configs() -> Result<Vec<ExperimentConfig>, CliError> {
    REFERENCE_CONFIGS.iter().map(|(n, _)| reference_config(n)).collect()
}

#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "criterion {}: {} {} ({:.1} s){}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.details.first().map(|d| format!(": {d}")).unwrap_or_default()
        )
    }
}

struct Tally {
    pass: bool,
    details: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { pass: true, details: Vec::new() }
    }

    fn record(&mut self, pass: bool, detail: String) {
        self.pass &= pass;
        if !pass {
            self.details.insert(0, format!("FAILED {detail}"));
        } else {
            self.details.push(detail);
        }
    }

    fn outcome(&mut self, o: &Outcome, groups: Option<&[&str]>) {
        let mut n = 0;
        for c in &o.checks {
            if groups.is_some_and(|g| !g.contains(&c.group)) {
                continue;
            }
            n += 1;
            if !c.pass {
                self.record(false, format!("{}: {} ({})", o.name, c.name, c.detail));
            }
        }
        if n == 0 {
            self.record(false, format!("{}: no checks of the selected kind ran", o.name));
        } else {
            self.details.push(format!("{}: {n} check{} passed", o.name, if n == 1 { "" } else { "s" }));
        }
    }

    fn finish(self, id: u8, title: &'static str, start: Instant) -> Criterion {
        Criterion {
            id,
            title,
            pass: self.pass,
            details: self.details,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

fn oracle_seed(seed: Option<u64>) -> Result<u64, CliError> {
    Ok(resolve_seed(None, seed)?.0)
}

fn rel_err(a: f64, b: f64) -> f64 {
    ((a - b) / b.abs().max(f64::MIN_POSITIVE)).abs()
}

/// Rate machinery against brute-force maximisation on 200 random tuples.
pub fn criterion_1(seed: Option<u64>, out: Option<&Path>) -> Result<Criterion, CliError> {
    const TUPLES: usize = 200;
    const TOL: f64 = 1e-6;
    let start = Instant::now();
    let key = |tag: &str| -> Result<StreamKey, CliError> {
        Ok(StreamKey::new(oracle_seed(seed)?, experiment_id(&format!("criterion1/{tag}"))))
    };
    let unif = |lo: f64, hi: f64, tag: &str| -> Result<Vec<f64>, CliError> {
        Ok(Law::Uniform { lo, hi }.sample(key(tag)?, TUPLES))
    };
    let rho = unif(1.1, 4.0, "rho")?;
    let tau = unif(0.05, 3.0, "tau")?;
    let t0 = unif(0.0, 1.5, "t0")?;
    let bump = unif(0.0, 3.0, "bump")?;
    let x = unif(0.01, 20.0, "x")?;
    let k = unif(0.05, 10.0, "k")?;

    let mut table = Table::new(&["tuple", "function", "closed_form", "grid", "rel_err"]);
    let mut worst = [0.0f64; 3];
    for i in 0..TUPLES {
        let xl = rho[i] * tau[i] * t0[i].powf(rho[i] - 1.0) + bump[i];
        let q = rho[i] / (rho[i] - 1.0);
        let rows = [
            ("legendre_sup", legendre_sup(rho[i], tau[i], t0[i], xl)?, legendre_sup_grid(rho[i], tau[i], t0[i], xl)),
            ("bernstein_rate", bernstein_rate(x[i], k[i])?, bernstein_rate_grid(x[i], k[i])),
            ("dual_rate", dual_rate(q, tau[i])?, legendre_sup_grid(rho[i], tau[i], 0.0, 1.0)),
        ];
        for (j, (name, closed, grid)) in rows.into_iter().enumerate() {
            let e = rel_err(closed, grid);
            worst[j] = worst[j].max(e);
            table.push(vec![i.to_string(), name.into(), num(closed), num(grid), num(e)]);
        }
    }
    if let Some(dir) = out {
        table.write(&dir.join("criterion1_rates.csv"))?;
    }
    let mut t = Tally::new();
    for (name, w) in ["legendre_sup", "bernstein_rate", "dual_rate"].iter().zip(worst) {
        t.record(w <= TOL, format!("{name}: worst relative error {w:.2e} over {TUPLES} tuples"));
    }
    Ok(t.finish(1, "rate machinery vs grid maximisation", start))
}

/// Rademacher sums: Monte Carlo vs exact enumeration, and Hoeffding over the
/// exact tail.
pub fn criterion_2(seed: Option<u64>, out: Option<&Path>) -> Result<Criterion, CliError> {
    let start = Instant::now();
    let base = oracle_seed(seed)?;
    let grid = vec![0.05, 0.1, 0.2, 0.4, 0.6, 0.8];
    let mut t = Tally::new();
    let mut table = Table::new(&["n", "x", "empirical_mean", "stderr", "exact", "hoeffding"]);
    let mut disagreements = 0;
    let mut rows = 0;
    for n in [1usize, 5, 10, 20, 30] {
        let spec = ExperimentSpec {
            increments: Increments::iid(Law::Rademacher),
            n,
            grid: grid.clone(),
            replicates: 100_000,
            key: StreamKey::new(base, experiment_id(&format!("criterion2/n={n}"))),
            side: Side::Upper,
        };
        let est = estimate_tail(&spec)?;
        for (x, e) in grid.iter().zip(&est) {
            let exact = rademacher_tail_exact(n as u32, *x, Side::Upper);
            let hoeffding = (-(n as f64) * x * x / 2.0).exp();
            rows += 1;
            if !e.agrees_with_probability(exact, 3.0) {
                disagreements += 1;
                t.record(false, format!("n = {n}, x = {x}: MC {} +- {} vs exact {exact}", num(e.mean), num(e.stderr)));
            }
            table.push(vec![n.to_string(), num(*x), num(e.mean), num(e.stderr), num(exact), num(hoeffding)]);
        }
    }
    if disagreements == 0 {
        t.record(true, format!("MC agrees with enumeration on {rows} (n, x) pairs at 3 stderr"));
    }
    let mut violations = 0;
    for n in 1..=30u32 {
        for i in 1..=100 {
            let x = 0.01 * i as f64;
            let exact = rademacher_tail_exact(n, x, Side::Upper);
            if exact > (-(n as f64) * x * x / 2.0).exp() * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    t.record(violations == 0, format!("Hoeffding dominates the exact tail on 3000 (n, x) pairs, {violations} violations"));
    let exact = rademacher_tail_exact(10, 0.8, Side::Upper);
    let bound = (-10.0f64 * 0.64 / 2.0).exp();
    t.record(
        exact <= bound,
        format!("n = 10, x = 0.8: exact {exact:.3e} <= bound {bound:.3e}"),
    );
    if let Some(dir) = out {
        table.write(&dir.join("criterion2_rademacher.csv"))?;
    }
    Ok(t.finish(2, "Rademacher sums vs exact enumeration", start))
}

/// Transfer-matrix recursion against explicit path sums.
pub fn criterion_4(seed: Option<u64>, out: Option<&Path>) -> Result<Criterion, CliError> {
    let start = Instant::now();
    let base = oracle_seed(seed)?;
    let laws = [
        Law::Gaussian { mean: 0.0, sd: 1.0 },
        Law::Rademacher,
        Law::Bernoulli { p: 0.3, lo: -0.5, hi: 2.0 },
    ];
    let mut t = Tally::new();
    let mut table = Table::new(&["d", "n", "environment", "law", "beta", "dp", "paths", "rel_err", "ln_w_beta0"]);
    let mut worst = 0.0f64;
    let mut worst_abs = 0.0f64;
    let mut worst_beta0 = 0.0f64;
    for (d, n_max) in [(1u32, 6u32), (2, 5)] {
        for n in 1..=n_max {
            for rep in 0..50u64 {
                let law = laws[rep as usize % laws.len()];
                let beta = 0.2 + 0.03 * rep as f64;
                let lambda = law.log_mgf(beta)?;
                let key = StreamKey::new(base, experiment_id(&format!("criterion4/d={d}/n={n}/env={rep}")));
                let env = Environment::sample(d, n, &law, key);
                let (_, dp) = dp_partition(&env, beta, lambda);
                let paths = partition_by_paths(&env, beta, lambda);
                let (_, zero) = dp_partition(&env, 0.0, 0.0);
                let e = rel_err(dp, paths);
                worst_abs = worst_abs.max((dp - paths).abs());
                // ln W can sit near 0, where relative error is meaningless.
                if (dp - paths).abs() >= 1e-13 {
                    worst = worst.max(e);
                }
                worst_beta0 = worst_beta0.max(zero.abs());
                table.push(vec![
                    d.to_string(),
                    n.to_string(),
                    rep.to_string(),
                    law.to_string(),
                    num(beta),
                    num(dp),
                    num(paths),
                    num(e),
                    num(zero),
                ]);
            }
        }
    }
    if let Some(dir) = out {
        table.write(&dir.join("criterion4_polymer_dp.csv"))?;
    }
    t.record(worst <= 1e-10, format!(
            "vs path enumeration over 550 environments: worst relative error {worst:.2e} (|diff| < 1e-13 exempt), worst |diff| {worst_abs:.2e}"
        ));
    t.record(worst_beta0 <= 1e-12, format!("beta = 0: max |ln W_n| = {worst_beta0:.2e}"));
    Ok(t.finish(4, "polymer DP vs path enumeration", start))
}

/// At `β = 0`, `v_1(θ) = ((1−θ)/θ) ln 2` in `d = 1`.
fn cascade_beta_zero(seed: Option<u64>, out: Option<&Path>, t: &mut Tally) -> Result<(), CliError> {
    let cfg = PolymerConfig {
        d: 1,
        n: 1,
        beta: 0.0,
        env_law: Law::Gaussian { mean: 0.0, sd: 1.0 },
        key: StreamKey::new(oracle_seed(seed)?, experiment_id("criterion8/beta0")),
    };
    let samples = CascadeSamples::generate(&cfg, 1, 200)?;
    let mut table = Table::new(&["theta", "v_mean", "v_stderr", "closed_form"]);
    let mut bad = 0;
    let grid = polymer_bounds::cascade::theta_grid();
    for &theta in &grid {
        let v = samples.v(theta)?;
        let exact = (1.0 - theta) / theta * std::f64::consts::LN_2;
        if !(v.agrees_with(exact, 3.0) || (v.mean - exact).abs() <= 1e-12 * exact.abs().max(1.0)) {
            bad += 1;
        }
        table.push(vec![num(theta), num(v.mean), num(v.stderr), num(exact)]);
    }
    if let Some(dir) = out {
        table.write(&dir.join("criterion8_beta0.csv"))?;
    }
    t.record(bad == 0, format!("beta = 0 closed form ((1-theta)/theta) ln 2 at {} theta values, {bad} off", grid.len()));
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub plots: bool,
    /// Rerun every reference config on 1 and 4 threads and compare CSVs.
    pub determinism: bool,
}

#[derive(Debug)]
pub struct SuiteReport {
    pub criteria: Vec<Criterion>,
    pub outcomes: Vec<Outcome>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass) && self.outcomes.iter().all(|o| o.all_pass())
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            crate::EXIT_PASS
        } else {
            crate::EXIT_CHECK_FAILED
        }
    }

    pub fn matrix(&self) -> String {
        let mut s = String::new();
        for c in &self.criteria {
            let _ = writeln!(s, "{}", c.line());
            for d in c.details.iter().skip(1) {
                let _ = writeln!(s, "    {d}");
            }
        }
        let _ = writeln!(s, "reference configs:");
        for o in &self.outcomes {
            let _ = writeln!(
                s,
                "  {:<26} {:<22} {}",
                o.name,
                o.kind,
                if o.all_pass() { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(s, "suite: {}", if self.all_pass() { "PASS" } else { "FAIL" });
        s
    }
}

fn run_reference(name: &str, opts: &SuiteOptions, root: &Path) -> Result<Outcome, CliError> {
    let cfg = reference_config(name)?;
    run_config(
        &cfg,
        &RunOptions {
            out_dir: root.join(name),
            seed: opts.seed,
            z: None,
            plots: opts.plots,
        },
    )
}

/// Every `*.csv` below `dir`, keyed by relative path.
pub fn collect_csv(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, CliError> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<PathBuf, Vec<u8>>) -> Result<(), CliError> {
        let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
        let mut paths: Vec<PathBuf> = entries
            .map(|e| e.map(|e| e.path()).map_err(|err| CliError::io(dir, err)))
            .collect::<Result<_, _>>()?;
        paths.sort();
        for p in paths {
            if p.is_dir() {
                walk(root, &p, acc)?;
            } else if p.extension().is_some_and(|e| e == "csv") {
                let bytes = std::fs::read(&p).map_err(|e| CliError::io(&p, e))?;
                acc.insert(p.strip_prefix(root).unwrap_or(&p).to_path_buf(), bytes);
            }
        }
        Ok(())
    }
    let mut acc = BTreeMap::new();
    walk(dir, dir, &mut acc)?;
    Ok(acc)
}

/// Names of files that differ or exist on one side only.
pub fn csv_differences(a: &BTreeMap<PathBuf, Vec<u8>>, b: &BTreeMap<PathBuf, Vec<u8>>) -> Vec<String> {
    let mut diffs = Vec::new();
    for (k, v) in a {
        match b.get(k) {
            Some(w) if w == v => {}
            Some(_) => diffs.push(format!("{} differs", k.display())),
            None => diffs.push(format!("{} missing on one side", k.display())),
        }
    }
    for k in b.keys().filter(|k| !a.contains_key(*k)) {
        diffs.push(format!("{} missing on one side", k.display()));
    }
    diffs
}

fn determinism(opts: &SuiteOptions, main: &Path) -> Result<Criterion, CliError> {
    let start = Instant::now();
    let mut t = Tally::new();
    let reference = collect_csv(main)?;
    let scratch = main.join("determinism");
    for jobs in [1usize, 4] {
        let dir = scratch.join(format!("jobs{jobs}"));
        crate::with_jobs(Some(jobs), || -> Result<(), CliError> {
            for (name, _) in REFERENCE_CONFIGS {
                run_reference(name, &SuiteOptions { plots: false, ..opts.clone() }, &dir)?;
            }
            Ok(())
        })??;
        let rerun = collect_csv(&dir)?;
        let expected: BTreeMap<PathBuf, Vec<u8>> = reference
            .iter()
            .filter(|(k, _)| REFERENCE_CONFIGS.iter().any(|(n, _)| k.starts_with(n)))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let diffs = csv_differences(&expected, &rerun);
        t.record(
            diffs.is_empty(),
            format!(
                "--jobs {jobs}: {} CSV files compared, {}",
                rerun.len(),
                if diffs.is_empty() { "byte-identical".to_string() } else { diffs.join("; ") }
            ),
        );
    }
    std::fs::remove_dir_all(&scratch).map_err(|e| CliError::io(&scratch, e))?;
    Ok(t.finish(9, "byte-identical reference CSVs across --jobs 1 and 4", start))
}

/// Runs criteria 1 to 8 (and 9 when requested), writing everything below
/// `opts.out_dir`.
pub fn run_suite(opts: &SuiteOptions) -> Result<SuiteReport, CliError> {
    let root = &opts.out_dir;
    ensure_dir(root)?;
    let oracles = root.join("oracles");
    ensure_dir(&oracles)?;
    let mut criteria = Vec::new();
    let mut outcomes = Vec::new();

    criteria.push(criterion_1(opts.seed, Some(&oracles))?);

    let start = Instant::now();
    let c2 = criterion_2(opts.seed, Some(&oracles))?;
    let o = run_reference("rademacher_hoeffding", opts, root)?;
    let mut t = Tally { pass: c2.pass, details: c2.details };
    t.outcome(&o, None);
    outcomes.push(o);
    criteria.push(t.finish(2, c2.title, start));

    let start = Instant::now();
    let mut t = Tally::new();
    for name in DOMINANCE_CONFIGS {
        let o = run_reference(name, opts, root)?;
        t.outcome(&o, Some(&["dominance"]));
        outcomes.push(o);
    }
    criteria.push(t.finish(3, "bound dominance battery", start));

    criteria.push(criterion_4(opts.seed, Some(&oracles))?);

    let start = Instant::now();
    let mut t = Tally::new();
    let o = run_reference("polymer_energy", opts, root)?;
    t.outcome(&o, Some(&["bracket", "superadditivity"]));
    outcomes.push(o);
    criteria.push(t.finish(5, "free-energy brackets and superadditivity", start));

    let start = Instant::now();
    let mut t = Tally::new();
    let o = run_reference("polymer_concentration", opts, root)?;
    t.outcome(&o, Some(&["dominance"]));
    outcomes.push(o);
    criteria.push(t.finish(6, "free-energy concentration", start));

    let start = Instant::now();
    let mut t = Tally::new();
    let o = run_reference("polymer_mean_rate", opts, root)?;
    t.outcome(&o, Some(&["mean_rate"]));
    outcomes.push(o);
    criteria.push(t.finish(7, "mean-rate bound", start));

    let start = Instant::now();
    let mut t = Tally::new();
    let o = run_reference("cascade_compare", opts, root)?;
    t.outcome(&o, Some(&["v_at_one", "p_tree", "inequality"]));
    outcomes.push(o);
    cascade_beta_zero(opts.seed, Some(&oracles), &mut t)?;
    criteria.push(t.finish(8, "cascade free energy", start));

    outcomes.push(run_reference("bounds_bernstein", opts, root)?);

    if opts.determinism {
        criteria.push(determinism(opts, root)?);
    }
    let report = SuiteReport { criteria, outcomes };
    crate::report::write_text(&root.join("suite.txt"), &strip_timings(&report.matrix()))?;
    Ok(report)
}

/// The matrix without wall-clock times, so the file is reproducible.
fn strip_timings(matrix: &str) -> String {
    matrix
        .lines()
        .map(|l| match (l.find(" ("), l.find(" s)")) {
            (Some(a), Some(b)) if l.starts_with("criterion") && a < b => format!("{}{}", &l[..a], &l[b + 3..]),
            _ => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn criterion(id: u8, pass: bool) -> Criterion {
        Criterion { id, title: "t", pass, details: vec!["d".into()], seconds: 1.25 }
    }

    #[test]
    fn one_failure_flips_the_exit_code() {
        let ok = SuiteReport { criteria: (1..=3).map(|i| criterion(i, true)).collect(), outcomes: vec![] };
        assert_eq!(ok.exit_code(), crate::EXIT_PASS);
        let mut bad = ok;
        bad.criteria[1].pass = false;
        assert_eq!(bad.exit_code(), crate::EXIT_CHECK_FAILED);
    }

    #[test]
    fn matrix_file_has_no_timings() {
        let r = SuiteReport { criteria: vec![criterion(1, true)], outcomes: vec![] };
        assert!(r.matrix().contains("(1.2 s)"));
        let stripped = strip_timings(&r.matrix());
        assert!(stripped.starts_with("criterion 1: PASS t: d\n"), "{stripped}");
    }

    #[test]
    fn every_reference_config_parses() {
        let names: Vec<String> = reference_configs().unwrap().into_iter().map(|c| c.name).collect();
        for (n, _) in REFERENCE_CONFIGS {
            assert!(names.iter().any(|m| m == n));
        }
        for n in DOMINANCE_CONFIGS {
            assert!(names.iter().any(|m| m == n));
        }
    }

    #[test]
    fn csv_differences_reports_both_sides() {
        let a: BTreeMap<PathBuf, Vec<u8>> = [("x.csv".into(), b"1".to_vec()), ("y.csv".into(), b"2".to_vec())].into();
        let b: BTreeMap<PathBuf, Vec<u8>> = [("x.csv".into(), b"1".to_vec()), ("z.csv".into(), b"2".to_vec())].into();
        assert_eq!(csv_differences(&a, &a), Vec::<String>::new());
        assert_eq!(csv_differences(&a, &b).len(), 2);
    }
}

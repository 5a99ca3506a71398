use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polymer_bounds_cli::suite::{collect_csv, csv_differences, reference_configs};
use polymer_bounds_cli::ExperimentConfig;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polymer-bounds"))
        .args(args)
        .env_remove("POLYMER_BOUNDS_SEED")
        .output()
        .expect("binary runs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bin(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bounds_eval_writes_rate_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs_dir().join("bounds_bernstein.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,rate,bound"));
    // K = 2, x = 0.05: (√2.05 − √2)² and exp(−50·rate).
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let rate = (2.05f64.sqrt() - 2f64.sqrt()).powi(2);
    assert!((first[1] - rate).abs() < 1e-15);
    assert!((first[2] - (-50.0 * rate).exp()).abs() < 1e-15);
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn hoeffding_reference_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs_dir().join("rademacher_hoeffding.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("martingale.csv")).unwrap();
    assert!(csv.starts_with(
        "experiment_id,law,n,abscissa,empirical_mean,stderr,bound,slack_sigmas,pass\n"
    ));
    assert_eq!(csv.lines().count(), 1 + 2 * 6);
    assert!(!csv.contains(",fail"));
}

#[test]
fn malformed_configs_exit_1_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("{\"name\": \"x\",\n \"kind\": ", "line 2"),
        (
            r#"{"name":"x","kind":"bounds_eval","curve":{"curve":"bernstein","k":2},"n":5,"xgrid":[0.1]}"#,
            "xgrid",
        ),
        (r#"{"name":"x","kind":"nope"}"#, "nope"),
        (
            r#"{"name":"x","kind":"bounds_eval","curve":{"curve":"bernstein","k":2},"n":5,"x_grid":[0.2,0.1]}"#,
            "x_grid",
        ),
        (
            r#"{"name":"x","kind":"martingale_verify","law":{"law":"uniform","lo":1,"hi":0},"theorem":{"theorem":"hoeffding_bounded"},"n_list":[5],"x_grid":[0.1],"replicates":1000}"#,
            "law",
        ),
        (
            r#"{"name":"x","kind":"martingale_verify","law":{"law":"rademacher"},"theorem":{"theorem":"bernstein"},"k":1.5,"n_list":[5],"x_grid":[0.1],"replicates":1000}"#,
            "`k`",
        ),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.json"));
        std::fs::write(&path, text).unwrap();
        let o = run(&path, &dir.path().join(format!("out{i}")), &[]);
        assert_eq!(o.status.code(), Some(1), "case {i}");
        assert!(stderr(&o).contains(needle), "case {i}: {}", stderr(&o));
    }
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bin(&["run"]).status.code(), Some(1));
    let o = bin(&["eval", "--curve", "bernstein", "--n", "10", "--x", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--k"));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = run(&configs_dir().join("bounds_bernstein.json"), &blocker.join("sub"), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn failing_check_exits_2() {
    // With no statistical allowance the sampled v_m(1) cannot be exactly 0.
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs_dir().join("cascade_compare.json"), dir.path(), &["--z", "0"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("result: FAIL"));
    let o = run(&configs_dir().join("cascade_compare.json"), dir.path(), &["--z", "-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn seed_source_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("bounds_bernstein.json");
    let read = |sub: &str| std::fs::read_to_string(dir.path().join(sub).join("summary.txt")).unwrap();

    run(&cfg, &dir.path().join("a"), &[]);
    assert!(read("a").contains("seed: 20240611 (from config)"));
    run(&cfg, &dir.path().join("b"), &["--seed", "9"]);
    assert!(read("b").contains("seed: 9 (from --seed)"));
    let o = Command::new(env!("CARGO_BIN_EXE_polymer-bounds"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--seed", "9", "--out"])
        .arg(dir.path().join("c"))
        .env("POLYMER_BOUNDS_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(read("c").contains("seed: 7 (from POLYMER_BOUNDS_SEED)"));

    let unseeded = dir.path().join("unseeded.json");
    std::fs::write(&unseeded, std::fs::read_to_string(&cfg).unwrap().replace("\"seed\": 20240611,", "")).unwrap();
    run(&unseeded, &dir.path().join("d"), &[]);
    assert!(read("d").contains("seed: 20240611 (default)"));
    let resolved = ExperimentConfig::load(&dir.path().join("d/config.json")).unwrap();
    assert_eq!(resolved.seed, Some(20240611));
}

#[test]
fn shipped_configs_round_trip() {
    let configs = reference_configs().unwrap();
    assert_eq!(configs.len(), 11);
    for cfg in configs {
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let on_disk = ExperimentConfig::load(&configs_dir().join(format!("{}.json", cfg.name))).unwrap();
        assert_eq!(on_disk, cfg);
    }
}

#[test]
fn output_independent_of_jobs_and_sensitive_to_seed() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["stretched_exp_q3", "polymer_concentration", "cascade_compare"] {
        let cfg = configs_dir().join(format!("{name}.json"));
        let a = dir.path().join(format!("{name}_1"));
        let b = dir.path().join(format!("{name}_4"));
        let c = dir.path().join(format!("{name}_seed"));
        assert_eq!(run(&cfg, &a, &["--jobs", "1"]).status.code(), Some(0));
        assert_eq!(run(&cfg, &b, &["--jobs", "4"]).status.code(), Some(0));
        run(&cfg, &c, &["--seed", "1"]);
        let (a, b, c) = (collect_csv(&a).unwrap(), collect_csv(&b).unwrap(), collect_csv(&c).unwrap());
        assert!(!a.is_empty());
        assert_eq!(csv_differences(&a, &b), Vec::<String>::new(), "{name}");
        assert!(!csv_differences(&a, &c).is_empty(), "{name}: seed had no effect");
    }
}

#[test]
fn plots_only_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("rademacher_hoeffding.json");
    run(&cfg, &dir.path().join("plain"), &[]);
    run(&cfg, &dir.path().join("plots"), &["--plots"]);
    assert!(!dir.path().join("plain/martingale_n10.svg").exists());
    let svg = std::fs::read_to_string(dir.path().join("plots/martingale_n10.svg")).unwrap();
    assert!(svg.starts_with("<?xml") || svg.starts_with("<svg"));
    assert!(svg.contains("version=\"1.1\""));
}

#[test]
fn eval_prints_csv() {
    let o = bin(&["eval", "--curve", "bernstein-piecewise", "--k", "2", "--n", "10", "--x", "1,4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let c = (1.0 + 2f64.sqrt()).powi(2);
    assert!((rows[0][1] - 1.0 / (2.0 * c)).abs() < 1e-15);
    assert!((rows[1][1] - 4.0 / c).abs() < 1e-15);
}

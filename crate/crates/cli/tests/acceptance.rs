//! Runs the reference battery and prints one line per criterion.

use std::process::ExitCode;

use polymer_bounds_cli::suite::{collect_csv, csv_differences, run_suite, Criterion, SuiteOptions};

/// Wall-clock ceilings in seconds, criteria 1 to 9.
const BUDGET: [f64; 9] = [10.0, 60.0, 600.0, 60.0, 300.0, 600.0, 600.0, 900.0, 2700.0];

fn report(c: &Criterion, failures: &mut usize) {
    let in_budget = c.seconds < BUDGET[c.id as usize - 1];
    let pass = c.pass && in_budget;
    if !pass {
        *failures += 1;
    }
    println!(
        "criterion {}: {} {} [{:.1} s, budget {} s]",
        c.id,
        if pass { "PASS" } else { "FAIL" },
        c.title,
        c.seconds,
        BUDGET[c.id as usize - 1]
    );
    for d in &c.details {
        println!("    {d}");
    }
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    if std::env::var_os("POLYMER_BOUNDS_SEED").is_some() {
        println!("note: POLYMER_BOUNDS_SEED is set and overrides the pinned seeds");
    }
    let dir = tempfile::tempdir().expect("temporary directory");
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let opts = |out| SuiteOptions { out_dir: out, seed: None, plots: false, determinism: false };

    let a = run_suite(&opts(first.clone())).expect("reference suite runs");
    let mut failures = 0;
    for c in &a.criteria {
        report(c, &mut failures);
    }

    // Criterion 9: a second full run, which also reruns every config on 1
    // and 4 threads.
    let start = std::time::Instant::now();
    let b = run_suite(&SuiteOptions { determinism: true, ..opts(second.clone()) }).expect("second run");
    let internal = b.criteria.iter().find(|c| c.id == 9).expect("determinism criterion").clone();
    let diffs = csv_differences(&collect_csv(&first).unwrap(), &collect_csv(&second).unwrap());
    let mut details = vec![format!(
        "two consecutive runs: {}",
        if diffs.is_empty() { "byte-identical".to_string() } else { diffs.join("; ") }
    )];
    details.extend(internal.details.iter().cloned());
    let c9 = Criterion {
        id: 9,
        title: "pinned-seed suite is byte-identical across runs and --jobs 1/4",
        pass: diffs.is_empty() && internal.pass && b.all_pass(),
        details,
        seconds: start.elapsed().as_secs_f64()
            + a.criteria.iter().map(|c| c.seconds).sum::<f64>(),
    };
    report(&c9, &mut failures);

    for o in a.outcomes.iter().filter(|o| !o.all_pass()) {
        failures += 1;
        println!("reference config {} failed:\n{}", o.name, o.summary());
    }
    if failures == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} failing");
        ExitCode::FAILURE
    }
}

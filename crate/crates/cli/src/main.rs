use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polymer_bounds_cli::config::CurveSpec;
use polymer_bounds_cli::report::{num, Table};
use polymer_bounds_cli::suite::{run_suite, SuiteOptions};
use polymer_bounds_cli::{run_config, with_jobs, CliError, ExperimentConfig, RunOptions, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "polymer-bounds", version, about = "Tail-bound evaluation and Monte Carlo verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed, overriding the config (POLYMER_BOUNDS_SEED overrides both).
        #[arg(long)]
        seed: Option<u64>,
        /// Standard-error multiplier for the dominance checks.
        #[arg(long, allow_negative_numbers = true)]
        z: Option<f64>,
        /// Also write SVG plots.
        #[arg(long)]
        plots: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the pinned reference battery and print a pass/fail matrix.
    Suite {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        plots: bool,
        #[arg(long)]
        jobs: Option<usize>,
        /// Skip the rerun on 1 and 4 threads.
        #[arg(long)]
        skip_determinism: bool,
    },
    /// Evaluate a tail curve on a grid and print CSV.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveKind {
    Bernstein,
    BernsteinPiecewise,
    EpsilonRegimes,
    Petrov,
    HoeffdingBounded,
    HoeffdingType,
    QRegime,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    curve: CurveKind,
    /// Number of increments.
    #[arg(long)]
    n: u64,
    /// Comma-separated abscissae.
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<f64>,
    /// Moment constant K.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long)]
    eps: Option<f64>,
    /// Increment bound, or the Petrov variance coefficient.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    t_cap: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn need(v: Option<f64>, flag: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Config(format!("this curve needs --{flag}")))
}

impl EvalArgs {
    fn spec(&self) -> Result<CurveSpec, CliError> {
        Ok(match self.curve {
            CurveKind::Bernstein => CurveSpec::Bernstein { k: need(self.k, "k")?, delta: self.delta },
            CurveKind::BernsteinPiecewise => CurveSpec::BernsteinPiecewise { k: need(self.k, "k")? },
            CurveKind::EpsilonRegimes => CurveSpec::EpsilonRegimes {
                k: need(self.k, "k")?,
                eps: need(self.eps, "eps")?,
            },
            CurveKind::Petrov => CurveSpec::Petrov {
                a: need(self.a, "a")?,
                t_cap: need(self.t_cap, "t-cap")?,
            },
            CurveKind::HoeffdingBounded => CurveSpec::HoeffdingBounded { a: need(self.a, "a")? },
            CurveKind::HoeffdingType => CurveSpec::HoeffdingType {
                r: need(self.r, "r")?,
                k: need(self.k, "k")?,
            },
            CurveKind::QRegime => CurveSpec::QRegime {
                q: need(self.q, "q")?,
                r: need(self.r, "r")?,
                k: need(self.k, "k")?,
                tau1: self.tau1,
            },
        })
    }
}

fn eval(args: &EvalArgs) -> Result<i32, CliError> {
    if args.n == 0 {
        return Err(CliError::Config("--n must be >= 1".into()));
    }
    let curve = args.spec()?.build()?;
    let mut t = Table::new(&["x", "rate", "bound"]);
    for &x in &args.x {
        if !(x.is_finite() && x > 0.0) {
            return Err(CliError::Config(format!("--x value {x} must be positive")));
        }
        t.push(vec![num(x), num(curve.rate(x)), num(curve.bound(args.n, x))]);
    }
    match &args.out {
        Some(p) => {
            t.write(p)?;
        }
        None => print!("{}", t.to_csv_string()?),
    }
    Ok(polymer_bounds_cli::EXIT_PASS)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, out, seed, z, plots, jobs } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
            let opts = RunOptions { out_dir, seed, z, plots };
            let outcome = with_jobs(jobs, || run_config(&cfg, &opts))??;
            print!("{}", outcome.summary());
            println!("output: {}", opts.out_dir.display());
            Ok(outcome.exit_code())
        }
        Command::Suite { out, seed, plots, jobs, skip_determinism } => {
            let opts = SuiteOptions {
                out_dir: out,
                seed,
                plots,
                determinism: !skip_determinism,
            };
            let report = with_jobs(jobs, || run_suite(&opts))??;
            print!("{}", report.matrix());
            Ok(report.exit_code())
        }
        Command::Eval(args) => eval(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

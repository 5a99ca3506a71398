//! Batch runner for the `polymer-bounds` experiments: JSON configs in,
//! CSV tables, text summaries and optional SVG plots out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod plot;
pub mod report;
pub mod run;
pub mod suite;

use std::fmt;

pub use config::ExperimentConfig;
pub use run::{run_config, Outcome, RunOptions};

/// Exit status of a successful run in which every hard check passed.
pub const EXIT_PASS: i32 = 0;
/// Usage, configuration or I/O error.
pub const EXIT_ERROR: i32 = 1;
/// The run completed but a verification check failed.
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Library(#[from] polymer_bounds::Error),
}

impl CliError {
    pub fn io(path: &std::path::Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

/// Runs `f` on a pool of `jobs` threads (all cores when `None`).
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

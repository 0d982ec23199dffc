//! Experiment driver: configuration parsing, the experiment runners and
//! CSV/JSON reporting. The `collapsar` binary is a thin wrapper over [`run`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod report;

use std::path::Path;
use thiserror::Error;

pub use config::{Experiment, ExperimentConfig};
pub use report::{Check, Outcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io { .. } => 3,
        }
    }
}

impl From<collapsar_core::Error> for CliError {
    fn from(e: collapsar_core::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Exit code for a run whose acceptance checks failed in `--check` mode.
pub const EXIT_CHECK_FAILED: i32 = 4;

/// Runs the configured experiment with `jobs` worker threads and writes its
/// outputs into `cfg.output_dir`.
pub fn run(cfg: &ExperimentConfig, jobs: usize) -> Result<Outcome> {
    let outcome = run_in_memory(cfg, jobs)?;
    outcome.write(Path::new(&cfg.output_dir))?;
    Ok(outcome)
}

/// Like [`run`] without touching the file system.
pub fn run_in_memory(cfg: &ExperimentConfig, jobs: usize) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| experiments::run(cfg))
}

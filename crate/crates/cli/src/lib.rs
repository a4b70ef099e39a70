//! Scenario runner for the obstacle-problem laboratory.
//!
//! A run reads a TOML scenario file, checks the hypotheses, solves the
//! discrete problem and writes `summary.json`, `solution.dump` and one CSV
//! per requested analysis under `<out>/<name>/`.

pub mod compare;
pub mod config;
pub mod report;
pub mod run;
pub mod summary;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] obstacle_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Configuration and usage errors exit 64; everything else exits 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 64,
            _ => 1,
        }
    }
}

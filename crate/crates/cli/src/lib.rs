//! Batch driver for linear-pencil experiments: builds Markov pencils from a
//! JSON config, runs convergence, subsequence, factorization and
//! biorthogonality checks, and writes CSV tables with JSON summaries.

pub mod config;
pub mod experiments;
pub mod records;
pub mod selftest;

use std::path::PathBuf;

pub use config::ExperimentConfig;
pub use experiments::{
    run_biorthogonality, run_build, run_convergence, run_factorization_suite, run_subsequence,
};
pub use records::{CheckRecord, Report, ResultRecord, SubsequenceRecord, Summary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] linpencil::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("output: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

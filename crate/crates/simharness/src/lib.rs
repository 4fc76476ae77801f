//! Monte Carlo comparison of fission, data splitting and full-data reuse.
//!
//! Each experiment simulates independent trials from a per-trial random
//! stream, runs every configured method on the same dataset, and records
//! one row of metrics per (trial, method). Results are identical for any
//! number of worker threads.

pub mod config;
pub mod experiments;
pub mod generate;
pub mod run;
pub mod summary;

pub use config::{ConfigError, DesignKind, Experiment, ExperimentConfig, Method, Variance};
pub use run::{run, run_trial, write_outputs, RunOutput, CONFIG_ECHO_FILE, SUMMARY_FILE, TRIALS_FILE};
pub use summary::{read_trials, write_trials, Metrics, MetricsSummary, SummaryEntry, TrialRecord, FAILURE_RATE, METRICS};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("data generation failed: {0}")]
    Generate(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

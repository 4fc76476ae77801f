//! Trial scheduling and output files.

use std::fs;
use std::path::Path;

use distkit::RngStream;
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::experiments::{multitest, regression, trend};
use crate::summary::{write_trials, MetricsSummary, TrialRecord};
use crate::SimError;

/// Trial records in (trial, method) order and their summary.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub records: Vec<TrialRecord>,
    pub summary: MetricsSummary,
}

/// Random stream of one method in one trial; stream 0 is the data.
fn trial_stream(seed: u64, trial: usize, stream: u64) -> RngStream {
    RngStream::new(seed, trial as u64).child(stream)
}

/// Simulates one dataset and scores every configured method on it.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<Vec<TrialRecord>, SimError> {
    let mut data_rng = trial_stream(cfg.seed, trial, 0);
    let generated = match cfg.experiment {
        Experiment::MultitestGauss | Experiment::MultitestPoisson => {
            Dataset::Grid(multitest::generate(cfg, &mut data_rng).map_err(SimError::Generate)?)
        }
        Experiment::TrendfilterGrid => Dataset::Trend(trend::generate(cfg, &mut data_rng)),
        _ => Dataset::Regression(regression::generate(cfg, &mut data_rng).map_err(SimError::Generate)?),
    };
    Ok(cfg
        .methods
        .iter()
        .map(|&method| {
            let mut rng = trial_stream(cfg.seed, trial, method.stream());
            let result = match &generated {
                Dataset::Regression(d) => regression::run_method(cfg, d, method, &mut rng),
                Dataset::Grid(d) => multitest::run_method(cfg, d, method, &mut rng),
                Dataset::Trend(d) => trend::run_method(cfg, d, method, &mut rng),
            };
            match result {
                Ok(m) => TrialRecord::ok(trial, method, m),
                Err(reason) => TrialRecord::failed(trial, method, reason),
            }
        })
        .collect())
}

enum Dataset {
    Regression(regression::RegressionData),
    Grid(multitest::GridData),
    Trend(trend::TrendData),
}

/// Runs every trial, on `threads` worker threads when given. The result
/// does not depend on the number of threads.
pub fn run(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| SimError::ThreadPool(e.to_string()))?;
    let per_trial: Vec<Vec<TrialRecord>> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect::<Result<_, _>>())?;
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let summary = MetricsSummary::from_records(&cfg.methods, &records);
    Ok(RunOutput { records, summary })
}

/// File names written by [`write_outputs`].
pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_ECHO_FILE: &str = "config_echo";

/// Writes `trials.csv`, `summary.csv` and `config_echo` into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, output: &RunOutput) -> Result<(), SimError> {
    fs::create_dir_all(dir)?;
    let name = cfg.experiment.name();
    write_trials(fs::File::create(dir.join(TRIALS_FILE))?, name, &output.records)?;
    output.summary.write_csv(fs::File::create(dir.join(SUMMARY_FILE))?, name)?;
    fs::write(dir.join(CONFIG_ECHO_FILE), cfg.to_text())?;
    Ok(())
}


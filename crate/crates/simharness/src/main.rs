use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use distkit::RngStream;
use simharness::{run, write_outputs, ConfigError, Experiment, ExperimentConfig, SimError};
use trendfilter::{fission_bands, read_series_file, write_bands_csv, BandOptions, KnotRule};

#[derive(Parser)]
#[command(name = "fiss", version, about = "Selective inference by data fission")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation study and write trials.csv, summary.csv and config_echo.
    Sim {
        /// One of linreg_leverage, linreg_indep, glm_poisson, glm_logistic,
        /// multitest_gauss, multitest_poisson, trendfilter_grid.
        experiment: String,
        /// Flat `key = value` configuration; omitted keys take the experiment's defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fit fission confidence bands to a two-column (t, y) series.
    Trend {
        input: PathBuf,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 0.2)]
        alpha: f64,
        /// Known noise standard deviation; estimated from differences when omitted.
        #[arg(long)]
        sigma: Option<f64>,
        /// Knot selection rule: cv_min or cv_1se.
        #[arg(long, default_value = "cv_min")]
        rule: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn sim(
    experiment: &str,
    config: Option<PathBuf>,
    out: PathBuf,
    trials: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> anyhow::Result<()> {
    let experiment: Experiment = experiment.parse()?;
    let text = match &config {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => String::new(),
    };
    let mut cfg = ExperimentConfig::parse(&text, Some(experiment))?;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    if threads == Some(0) {
        return Err(ConfigError::new("threads", "must be at least 1").into());
    }
    let output = run(&cfg, threads)?;
    write_outputs(&out, &cfg, &output).with_context(|| format!("writing to {}", out.display()))?;
    let mut stdout = io::stdout().lock();
    for e in &output.summary.entries {
        if let Some(mean) = e.mean {
            writeln!(stdout, "{:<11} {:<19} {mean:.4}", e.method.name(), e.metric)?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn trend(
    input: PathBuf,
    out: Option<PathBuf>,
    degree: usize,
    tau: f64,
    alpha: f64,
    sigma: Option<f64>,
    rule: &str,
    seed: u64,
) -> anyhow::Result<()> {
    let rule = match rule {
        "cv_min" => KnotRule::CvMin,
        "cv_1se" => KnotRule::Cv1se,
        other => return Err(ConfigError::new("rule", format!("unknown knot rule `{other}`")).into()),
    };
    let series = read_series_file(&input).with_context(|| format!("reading {}", input.display()))?;
    let opts = BandOptions {
        degree,
        tau,
        alpha,
        rule,
        sigma2: sigma.map(|s| s * s),
        uniform: true,
        ..Default::default()
    };
    let mut rng = RngStream::new(seed, 0);
    let result = fission_bands(&series.t, &series.y, &opts, &mut rng)?;
    let mut bands = vec![&result.pointwise];
    bands.extend(result.uniform.as_ref());
    match out {
        Some(path) => write_bands_csv(fs::File::create(&path)?, &series.t, &bands)?,
        None => write_bands_csv(io::stdout().lock(), &series.t, &bands)?,
    }
    eprintln!("knots at {:?}; sigma^2 = {}", result.knots(), result.sigma2);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sim {
            experiment,
            config,
            out,
            trials,
            seed,
            threads,
        } => sim(&experiment, config, out, trials, seed, threads),
        Command::Trend {
            input,
            out,
            degree,
            tau,
            alpha,
            sigma,
            rule,
            seed,
        } => trend(input, out, degree, tau, alpha, sigma, &rule, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let config_error = err.downcast_ref::<ConfigError>().is_some()
                || matches!(err.downcast_ref::<SimError>(), Some(SimError::Config(_)));
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}

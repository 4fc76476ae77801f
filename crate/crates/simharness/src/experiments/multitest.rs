//! Grid multiple-testing experiments with Gaussian or Poisson signals.

use distkit::{Dist, RngStream, Value};
use fission_rules::{fission, FissionRule};
use posi::{
    aggregate_ci, bh_select, fission_multitest, one_sided_pvalue, poisson_aggregate_ci, selection_metrics,
    upper_randomized_pvalue, CiTable, Interval, Sidedness, Target,
};

use crate::config::{Experiment, ExperimentConfig, Method};
use crate::generate::circle_means;
use crate::summary::Metrics;

/// Means and observations on the hypothesis grid.
#[derive(Clone, Debug)]
pub struct GridData {
    pub mean: Vec<f64>,
    pub is_null: Vec<bool>,
    pub y: Vec<f64>,
}

/// Null mean of the Poisson experiment.
const POISSON_NULL: f64 = 1.0;

pub fn generate(cfg: &ExperimentConfig, rng: &mut RngStream) -> Result<GridData, String> {
    let null = match cfg.experiment {
        Experiment::MultitestPoisson => POISSON_NULL,
        _ => 0.0,
    };
    let mean = circle_means(cfg.grid, cfg.radius, cfg.signal, null);
    let is_null = mean.iter().map(|m| *m == null).collect();
    let y = match cfg.experiment {
        Experiment::MultitestPoisson => mean
            .iter()
            .map(|&m| Dist::Poisson { mean: m }.sample(rng).map(|v| v.as_f64().unwrap_or_default()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?,
        _ => mean.iter().map(|m| m + cfg.sigma * rng.standard_normal()).collect(),
    };
    Ok(GridData { mean, is_null, y })
}

fn average(idx: &[usize], v: &[f64]) -> f64 {
    idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64
}

/// Scores a rejection set with optional per-hypothesis intervals and an
/// interval for the average mean over the set.
fn score(data: &GridData, rejected: &[usize], per_signal: Option<&CiTable>, aggregate: Option<Interval>) -> Metrics {
    let sel = selection_metrics(rejected, &data.is_null);
    let (fcr, ci_length) = match per_signal {
        Some(t) => {
            let miss = t.rows().iter().filter(|r| !r.interval.contains(data.mean[r.index])).count();
            let len = (!t.is_empty()).then(|| t.rows().iter().map(|r| r.interval.length()).sum::<f64>() / t.len() as f64);
            (Some(miss as f64 / t.len().max(1) as f64), len)
        }
        None => (None, None),
    };
    Metrics {
        selected: Some(rejected.len() as f64),
        fcr,
        ci_length,
        fdp: Some(sel.fdp),
        power: Some(sel.power),
        miscoverage: aggregate.map(|ci| f64::from(u8::from(!ci.contains(average(rejected, &data.mean))))),
        aggregate_length: aggregate.map(|ci| ci.length()),
        ..Default::default()
    }
}

fn gaussian(cfg: &ExperimentConfig, data: &GridData, method: Method, rng: &mut RngStream) -> Result<Metrics, String> {
    match method {
        Method::FullTwice => {
            let z = numkit::z_two_sided(cfg.alpha).map_err(|e| e.to_string())?;
            let pvalues: Vec<f64> = data.y.iter().map(|&v| one_sided_pvalue(v, cfg.sigma, Sidedness::OneSided)).collect();
            let rejected = bh_select(&pvalues, cfg.q).map_err(|e| e.to_string())?.rejected;
            let mut table = CiTable::new(Target::MuIndividual, 1.0 - cfg.alpha);
            for &i in &rejected {
                table
                    .push(i, data.y[i], Interval::centered(data.y[i], z * cfg.sigma))
                    .map_err(|e| e.to_string())?;
            }
            let values: Vec<f64> = rejected.iter().map(|&i| data.y[i]).collect();
            let aggregate = if values.is_empty() {
                None
            } else {
                Some(aggregate_ci(&values, cfg.sigma, cfg.alpha).map_err(|e| e.to_string())?)
            };
            Ok(score(data, &rejected, Some(&table), aggregate))
        }
        _ => {
            let out = fission_multitest(&data.y, cfg.sigma, cfg.tau, cfg.alpha, cfg.q, Sidedness::OneSided, rng)
                .map_err(|e| e.to_string())?;
            Ok(score(data, &out.rejections.rejected, Some(&out.per_signal), out.aggregate))
        }
    }
}

fn poisson(cfg: &ExperimentConfig, data: &GridData, method: Method, rng: &mut RngStream) -> Result<Metrics, String> {
    let (select_on, infer_on, p) = match method {
        Method::FullTwice => (data.y.clone(), data.y.clone(), 0.0),
        _ => {
            let rule = FissionRule::PoissonP1 { p: cfg.fission_p };
            let mut f = Vec::with_capacity(data.y.len());
            let mut g = Vec::with_capacity(data.y.len());
            for &v in &data.y {
                let out = fission(&Value::Int(v as u64), &rule, rng).map_err(|e| e.to_string())?;
                f.push(out.f.as_f64().unwrap_or_default());
                g.push(out.g.as_f64().unwrap_or_default());
            }
            (f, g, cfg.fission_p)
        }
    };
    let null = Dist::Poisson {
        mean: if p > 0.0 { p * POISSON_NULL } else { POISSON_NULL },
    };
    let pvalues = select_on
        .iter()
        .map(|&v| upper_randomized_pvalue(v, &null, rng))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| e.to_string())?;
    let rejected = bh_select(&pvalues, cfg.q).map_err(|e| e.to_string())?.rejected;
    let aggregate = if rejected.is_empty() {
        None
    } else {
        let counts: Vec<u64> = rejected.iter().map(|&i| infer_on[i] as u64).collect();
        Some(poisson_aggregate_ci(&counts, p, cfg.alpha).map_err(|e| e.to_string())?)
    };
    Ok(score(data, &rejected, None, aggregate))
}

pub fn run_method(cfg: &ExperimentConfig, data: &GridData, method: Method, rng: &mut RngStream) -> Result<Metrics, String> {
    match cfg.experiment {
        Experiment::MultitestPoisson => poisson(cfg, data, method, rng),
        _ => gaussian(cfg, data, method, rng),
    }
}

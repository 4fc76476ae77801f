//! Trend filtering confidence bands on a random piecewise-linear trend.

use distkit::RngStream;
use trendfilter::{fission_bands, full_data_bands, projected_mean, BandOptions, BandResult, KnotRule};

use crate::config::{ExperimentConfig, Method, Variance};
use crate::generate::random_trend;
use crate::summary::Metrics;

#[derive(Clone, Debug)]
pub struct TrendData {
    pub t: Vec<f64>,
    pub trend: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn generate(cfg: &ExperimentConfig, rng: &mut RngStream) -> TrendData {
    let t: Vec<f64> = (1..=cfg.n).map(|i| i as f64).collect();
    let trend = random_trend(cfg.n, cfg.p_knot, cfg.slope_range, rng);
    let y = trend.iter().map(|m| m + cfg.sigma * rng.standard_normal()).collect();
    TrendData { t, trend, y }
}

fn options(cfg: &ExperimentConfig) -> BandOptions {
    let sigma2 = match cfg.variance {
        Variance::Known => Some(cfg.sigma * cfg.sigma),
        Variance::Estimated => None,
    };
    let rule = match cfg.knot_rule {
        KnotRule::Sure { df, .. } => KnotRule::Sure { sigma2: None, df },
        other => other,
    };
    BandOptions {
        degree: cfg.degree,
        tau: cfg.tau,
        alpha: cfg.alpha,
        rule,
        sigma2,
        uniform: true,
        ..Default::default()
    }
}

fn score(data: &TrendData, bands: &BandResult) -> Result<Metrics, String> {
    let target = projected_mean(&bands.basis, &data.trend).map_err(|e| e.to_string())?;
    let uniform = bands.uniform.as_ref().ok_or("uniform band missing")?;
    Ok(Metrics {
        selected: Some(bands.knots().len() as f64),
        fcr: Some(bands.pointwise.miss_fraction(&target)),
        ci_length: Some(bands.pointwise.mean_width()),
        sim_type1: Some(f64::from(u8::from(uniform.miss_fraction(&target) > 0.0))),
        uniform_length: Some(uniform.mean_width()),
        ..Default::default()
    })
}

pub fn run_method(cfg: &ExperimentConfig, data: &TrendData, method: Method, rng: &mut RngStream) -> Result<Metrics, String> {
    let opts = options(cfg);
    let bands = match method {
        Method::FullTwice => full_data_bands(&data.t, &data.y, &opts),
        _ => fission_bands(&data.t, &data.y, &opts, rng),
    }
    .map_err(|e| e.to_string())?;
    score(data, &bands)
}

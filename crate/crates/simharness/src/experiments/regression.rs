//! Linear and GLM selection-then-inference experiments.

use distkit::{Dist, RngStream, Value};
use fission_rules::{fission, FissionRule};
use modelfit::{cv_select, Design, Family};
use numkit::Matrix;
use posi::{
    full_model_sigma, kl_projection, linear_ci, linear_projection, regression_metrics, sandwich_ci, CiTable,
    Correction, SelectedModel, Target,
};

use crate::config::{DesignKind, Experiment, ExperimentConfig, Method, Variance};
use crate::generate::{leverage_beta, leverage_design, sparse_beta, toeplitz_design};
use crate::summary::Metrics;

/// One simulated regression dataset.
#[derive(Clone, Debug)]
pub struct RegressionData {
    pub x: Matrix,
    pub beta: Vec<f64>,
    /// True mean of each response.
    pub mean: Vec<f64>,
    pub y: Vec<f64>,
}

fn family(experiment: Experiment) -> Family {
    match experiment {
        Experiment::GlmPoisson => Family::Poisson,
        Experiment::GlmLogistic => Family::Binomial,
        _ => Family::Gaussian,
    }
}

fn uses_leverage(cfg: &ExperimentConfig) -> bool {
    match cfg.experiment {
        Experiment::LinregLeverage => true,
        Experiment::GlmPoisson => cfg.design == DesignKind::Leverage,
        _ => false,
    }
}

/// Draws covariates, coefficients and responses for a regression experiment.
pub fn generate(cfg: &ExperimentConfig, rng: &mut RngStream) -> Result<RegressionData, String> {
    let fam = family(cfg.experiment);
    let binary_cols = if fam == Family::Gaussian { 0 } else { 2 };
    let (x, beta) = if uses_leverage(cfg) {
        (
            leverage_design(cfg.n, cfg.p, cfg.gamma, binary_cols, rng),
            leverage_beta(cfg.p, cfg.signal),
        )
    } else {
        let beta = match cfg.experiment {
            Experiment::LinregIndep => sparse_beta(cfg.p, cfg.signal, 9, -1.0),
            Experiment::GlmPoisson => sparse_beta(cfg.p, cfg.signal, 8, 2.0),
            _ => sparse_beta(cfg.p, cfg.signal, 9, 2.0),
        };
        (toeplitz_design(cfg.n, cfg.p, cfg.rho, binary_cols, rng), beta)
    };
    let mean: Vec<f64> = x.matvec(&beta).into_iter().map(|eta| fam.mean(eta)).collect();
    let y = mean
        .iter()
        .map(|&m| {
            let law = match fam {
                Family::Gaussian => return Ok(m + cfg.sigma * rng.standard_normal()),
                Family::Poisson => Dist::Poisson { mean: m },
                Family::Binomial => Dist::Bernoulli { p: m },
            };
            law.sample(rng)
                .map_err(|e| e.to_string())?
                .as_f64()
                .ok_or_else(|| "non-scalar draw".to_string())
        })
        .collect::<Result<Vec<f64>, String>>()?;
    Ok(RegressionData { x, beta, mean, y })
}

/// Lasso support at the 1-SE λ of K-fold cross-validation, with an
/// unpenalized intercept.
fn select(x: &Matrix, response: &[f64], fam: Family, folds: usize, rng: &mut RngStream) -> Result<Vec<usize>, String> {
    let design = Design::new(x.clone(), response.to_vec(), fam)
        .map_err(|e| e.to_string())?
        .with_intercept(true);
    let cv = cv_select(&design, None, folds.min(x.rows()), rng).map_err(|e| e.to_string())?;
    let mut m = cv.selected;
    m.sort_unstable();
    Ok(m)
}

/// Intervals and their targets for one method.
struct Inference {
    selected: Vec<usize>,
    table: CiTable,
    targets: Vec<f64>,
}

impl Inference {
    fn empty(target: Target, alpha: f64) -> Self {
        Self {
            selected: Vec::new(),
            table: CiTable::new(target, 1.0 - alpha),
            targets: Vec::new(),
        }
    }
}

/// Linear intervals for `β*(M)` from `response` regressed on `x[:, M]`.
fn linear_inference(
    x: &Matrix,
    response: &[f64],
    mean: &[f64],
    selected: Vec<usize>,
    sigma2: f64,
    tau: f64,
    alpha: f64,
) -> Result<Inference, String> {
    if selected.is_empty() {
        return Ok(Inference::empty(Target::BetaStar, alpha));
    }
    let model = SelectedModel::new(x, &selected).map_err(|e| e.to_string())?;
    let table = linear_ci(response, &model, &fission_rules::Covariance::Iso(sigma2), tau, alpha).map_err(|e| e.to_string())?;
    let targets = linear_projection(&model, mean).map_err(|e| e.to_string())?;
    Ok(Inference {
        selected,
        table,
        targets,
    })
}

/// Sandwich intervals for the KL-projection target of a GLM with
/// intercept fitted to `response` on `x[:, M]`. `target_mean` is the true
/// mean of `response` given everything conditioned on.
#[allow(clippy::too_many_arguments)]
fn glm_inference(
    x: &Matrix,
    response: &[f64],
    target_mean: Vec<f64>,
    offset: f64,
    fam: Family,
    selected: Vec<usize>,
    alpha: f64,
) -> Result<Inference, String> {
    if selected.is_empty() {
        return Ok(Inference::empty(Target::BetaStarN, alpha));
    }
    let xm = x.select_columns(&selected);
    let offsets = vec![offset; x.rows()];
    let design = Design::new(xm.clone(), response.to_vec(), fam)
        .and_then(|d| d.with_offset(offsets.clone()))
        .map_err(|e| e.to_string())?
        .with_intercept(true);
    let (pieces, table) = sandwich_ci(&design, &selected, alpha, Correction::DegreesOfFreedom).map_err(|e| e.to_string())?;
    if !pieces.fit.converged {
        return Err("inference GLM did not converge".into());
    }
    let target = kl_projection(&xm, target_mean, fam, offsets, true).map_err(|e| e.to_string())?;
    if !target.converged {
        return Err("projection target did not converge".into());
    }
    Ok(Inference {
        selected,
        table,
        targets: target.coefficients,
    })
}

fn scalar_fission(values: &[f64], rule: &FissionRule, rng: &mut RngStream) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut f = Vec::with_capacity(values.len());
    let mut g = Vec::with_capacity(values.len());
    for &v in values {
        let out = fission(&Value::Int(v as u64), rule, rng).map_err(|e| e.to_string())?;
        f.push(out.f.as_f64().unwrap_or_default());
        g.push(out.g.as_f64().unwrap_or_default());
    }
    Ok((f, g))
}

fn rows(x: &Matrix, v: &[f64], idx: &[usize]) -> (Matrix, Vec<f64>) {
    (x.select_rows(idx), idx.iter().map(|&i| v[i]).collect())
}

/// Runs one method on one dataset and scores it.
pub fn run_method(
    cfg: &ExperimentConfig,
    data: &RegressionData,
    method: Method,
    rng: &mut RngStream,
) -> Result<Metrics, String> {
    let fam = family(cfg.experiment);
    let (x, y, mean) = (&data.x, &data.y, &data.mean);
    let sigma2 = |x: &Matrix, y: &[f64]| -> Result<f64, String> {
        match cfg.variance {
            Variance::Known => Ok(cfg.sigma * cfg.sigma),
            Variance::Estimated => full_model_sigma(y, x).map(|s| s.sigma2).map_err(|e| e.to_string()),
        }
    };
    let inference = match method {
        Method::Fission => match fam {
            Family::Gaussian => {
                let s2 = sigma2(x, y)?;
                let out = fission(&Value::Reals(y.clone()), &FissionRule::gauss_p1(cfg.tau, s2), rng)
                    .map_err(|e| e.to_string())?;
                let (f, g) = (out.f.to_reals(), out.g.to_reals());
                let m = select(x, &f, fam, cfg.folds, rng)?;
                linear_inference(x, &g, mean, m, s2, cfg.tau, cfg.alpha)?
            }
            Family::Poisson => {
                let p = cfg.fission_p;
                let (f, g) = scalar_fission(y, &FissionRule::PoissonP1 { p }, rng)?;
                let m = select(x, &f, fam, cfg.folds, rng)?;
                let g_mean = mean.iter().map(|v| (1.0 - p) * v).collect();
                glm_inference(x, &g, g_mean, (1.0 - p).ln(), fam, m, cfg.alpha)?
            }
            Family::Binomial => {
                let p = cfg.fission_p;
                let (f, g) = scalar_fission(y, &FissionRule::BernoulliP2 { p }, rng)?;
                let m = select(x, &f, fam, cfg.folds, rng)?;
                let cond: Vec<f64> = mean
                    .iter()
                    .zip(&f)
                    .map(|(&pi, &fi)| {
                        let (keep, flip) = if fi == 1.0 { (1.0 - p, p) } else { (p, 1.0 - p) };
                        pi * keep / (pi * keep + (1.0 - pi) * flip)
                    })
                    .collect();
                glm_inference(x, &g, cond, 0.0, fam, m, cfg.alpha)?
            }
        },
        Method::Split => {
            let mut order: Vec<usize> = (0..x.rows()).collect();
            rng.shuffle(&mut order);
            let (first, second) = order.split_at(x.rows() / 2);
            let (mut a, mut b) = (first.to_vec(), second.to_vec());
            a.sort_unstable();
            b.sort_unstable();
            let (xa, ya) = rows(x, y, &a);
            let (xb, yb) = rows(x, y, &b);
            let mb: Vec<f64> = b.iter().map(|&i| mean[i]).collect();
            let m = select(&xa, &ya, fam, cfg.folds, rng)?;
            match fam {
                Family::Gaussian => {
                    let s2 = sigma2(&xb, &yb)?;
                    linear_inference(&xb, &yb, &mb, m, s2, f64::INFINITY, cfg.alpha)?
                }
                _ => glm_inference(&xb, &yb, mb, 0.0, fam, m, cfg.alpha)?,
            }
        }
        Method::FullTwice => {
            let m = select(x, y, fam, cfg.folds, rng)?;
            match fam {
                Family::Gaussian => {
                    let s2 = sigma2(x, y)?;
                    linear_inference(x, y, mean, m, s2, f64::INFINITY, cfg.alpha)?
                }
                _ => glm_inference(x, y, mean.clone(), 0.0, fam, m, cfg.alpha)?,
            }
        }
    };
    let r = regression_metrics(&data.beta, &inference.selected, &inference.table, &inference.targets);
    Ok(Metrics {
        selected: Some(inference.selected.len() as f64),
        fcr: Some(r.fcr),
        ci_length: r.avg_ci_length,
        fsr: Some(r.fsr),
        power_sign: Some(r.power_sign),
        power_selected: Some(r.power_selected),
        precision_selected: Some(r.precision_selected),
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_match_setups() {
        let mut rng = RngStream::new(5, 0);
        let cfg = ExperimentConfig::defaults(Experiment::GlmPoisson);
        let d = generate(&cfg, &mut rng).unwrap();
        assert_eq!((d.x.rows(), d.x.cols()), (16, 20));
        assert!(d.y.iter().all(|v| v.fract() == 0.0 && *v >= 0.0));
        for j in 0..2 {
            assert!((0..15).all(|i| d.x[(i, j)] == 0.0 || d.x[(i, j)] == 1.0));
        }
        let cfg = ExperimentConfig {
            n: 50,
            ..ExperimentConfig::defaults(Experiment::GlmLogistic)
        };
        let d = generate(&cfg, &mut rng).unwrap();
        assert!(d.y.iter().all(|v| *v == 0.0 || *v == 1.0));
        assert_eq!(d.beta.iter().filter(|b| **b != 0.0).count(), 30);
    }

    #[test]
    fn every_method_scores_a_leverage_trial() {
        let cfg = ExperimentConfig::defaults(Experiment::LinregLeverage);
        let mut rng = RngStream::new(6, 0);
        let d = generate(&cfg, &mut rng).unwrap();
        for m in cfg.methods.clone() {
            let r = run_method(&cfg, &d, m, &mut rng).unwrap();
            let fcr = r.fcr.unwrap();
            assert!((0.0..=1.0).contains(&fcr));
            assert_eq!(r.ci_length.is_some(), r.selected.unwrap() > 0.0);
        }
    }
}

use distkit::{RngStream, Value};
use fission_rules::{fission, Covariance, FissionRule};
use numkit::Matrix;

use crate::admm::TrendFit;
use crate::band::{pointwise_band, uniform_band, Band};
use crate::basis::falling_factorial_basis;
use crate::select::{knot_select, KnotRule, LambdaGrid};
use crate::variance::estimate_sigma_differences;
use crate::TrendError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandOptions {
    pub degree: usize,
    pub tau: f64,
    pub alpha: f64,
    pub rule: KnotRule,
    pub grid: LambdaGrid,
    /// Known noise variance; `None` estimates it from first differences
    /// and switches the uniform multiplier to its t form.
    pub sigma2: Option<f64>,
    pub uniform: bool,
}

impl Default for BandOptions {
    fn default() -> Self {
        Self {
            degree: 1,
            tau: 1.0,
            alpha: 0.2,
            rule: KnotRule::CvMin,
            grid: LambdaGrid::default(),
            sigma2: None,
            uniform: true,
        }
    }
}

/// Knots chosen on the selection series and bands built on the inference series.
#[derive(Clone, Debug)]
pub struct BandResult {
    pub selection: TrendFit,
    pub basis: Matrix,
    pub sigma2: f64,
    pub sigma_estimated: bool,
    pub pointwise: Band,
    pub uniform: Option<Band>,
}

impl BandResult {
    pub fn knots(&self) -> &[f64] {
        &self.selection.knots
    }
}

fn resolve_sigma(y: &[f64], opts: &BandOptions) -> Result<(f64, bool), TrendError> {
    match opts.sigma2 {
        Some(s2) if s2 > 0.0 && s2.is_finite() => Ok((s2, false)),
        Some(s2) => Err(TrendError::InvalidArgument(format!("variance {s2} must be positive"))),
        None => {
            let s2 = estimate_sigma_differences(y)?;
            if s2 > 0.0 {
                Ok((s2, true))
            } else {
                Err(TrendError::InvalidArgument("estimated noise variance is zero".into()))
            }
        }
    }
}

fn with_sure_variance(rule: KnotRule, variance: f64) -> KnotRule {
    match rule {
        KnotRule::Sure { sigma2: None, df } => KnotRule::Sure {
            sigma2: Some(variance),
            df,
        },
        other => other,
    }
}

fn bands(
    t: &[f64],
    selection: TrendFit,
    inference: &[f64],
    sigma2: f64,
    estimated: bool,
    tau: f64,
    opts: &BandOptions,
) -> Result<BandResult, TrendError> {
    let basis = falling_factorial_basis(t, &selection.knots, opts.degree)?;
    let pointwise = pointwise_band(inference, &basis, &Covariance::Iso(sigma2), tau, opts.alpha)?;
    let uniform = if opts.uniform {
        let df = estimated.then(|| (t.len() as f64 - selection.num_knots() as f64 - 1.0).max(1.0));
        Some(uniform_band(inference, &basis, sigma2, tau, opts.alpha, df)?)
    } else {
        None
    };
    Ok(BandResult {
        selection,
        basis,
        sigma2,
        sigma_estimated: estimated,
        pointwise,
        uniform,
    })
}

/// Fissions `y` with Gaussian noise, selects knots on `f(y)` and builds
/// bands for the projected mean from `g(y)`.
pub fn fission_bands(t: &[f64], y: &[f64], opts: &BandOptions, rng: &mut RngStream) -> Result<BandResult, TrendError> {
    let (sigma2, estimated) = resolve_sigma(y, opts)?;
    let rule = FissionRule::gauss_p1(opts.tau, sigma2);
    let out = fission(&Value::Reals(y.to_vec()), &rule, rng)?;
    let (f, g) = (out.f.to_reals(), out.g.to_reals());
    let select_rule = with_sure_variance(opts.rule, sigma2 * (1.0 + opts.tau * opts.tau));
    let selection = knot_select(t, &f, opts.degree, select_rule, opts.grid)?;
    bands(t, selection, &g, sigma2, estimated, opts.tau, opts)
}

/// Selects knots and builds classical bands on the same series. The bands
/// ignore the selection step and are not valid for the projected mean.
pub fn full_data_bands(t: &[f64], y: &[f64], opts: &BandOptions) -> Result<BandResult, TrendError> {
    let (sigma2, estimated) = resolve_sigma(y, opts)?;
    let selection = knot_select(t, y, opts.degree, with_sure_variance(opts.rule, sigma2), opts.grid)?;
    bands(t, selection, y, sigma2, estimated, f64::INFINITY, opts)
}

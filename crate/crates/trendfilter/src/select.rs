use crate::admm::{TrendFilter, TrendFit};
use crate::TrendError;

/// Number of interleaved hold-out folds used by cross-validation.
pub const CV_FOLDS: usize = 5;

/// Degrees-of-freedom convention in the SURE penalty `2σ² df / n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SureDf {
    /// `df = m`, the number of knots.
    Knots,
    /// `df = m + 1`.
    KnotsPlusOne,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KnotRule {
    /// Minimum cross-validation error.
    CvMin,
    /// Largest `λ` whose error is within one standard error of the minimum.
    Cv1se,
    /// Minimum SURE; `sigma2` is the noise variance of the series being
    /// smoothed (`None` lets a caller that knows it fill it in).
    Sure { sigma2: Option<f64>, df: SureDf },
}

impl KnotRule {
    pub fn label(&self) -> &'static str {
        match self {
            KnotRule::CvMin => "cv_min",
            KnotRule::Cv1se => "cv_1se",
            KnotRule::Sure { df: SureDf::Knots, .. } => "sure_m",
            KnotRule::Sure { df: SureDf::KnotsPlusOne, .. } => "sure_m_plus_1",
        }
    }
}

/// Log-spaced `λ` grid from `λ_max` down to `ratio · λ_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaGrid {
    pub count: usize,
    pub ratio: f64,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self { count: 40, ratio: 1e-4 }
    }
}

impl LambdaGrid {
    pub fn values(&self, lambda_max: f64) -> Result<Vec<f64>, TrendError> {
        if self.count < 1 || !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(TrendError::InvalidArgument("grid needs count >= 1 and ratio in (0,1)".into()));
        }
        let top = if lambda_max > 0.0 { lambda_max } else { 1.0 };
        if self.count == 1 {
            return Ok(vec![top]);
        }
        let step = self.ratio.ln() / (self.count - 1) as f64;
        Ok((0..self.count).map(|i| top * (step * i as f64).exp()).collect())
    }
}

/// Record of the tuning-parameter search behind a selected fit.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionDiagnostics {
    pub rule: KnotRule,
    pub lambdas: Vec<f64>,
    /// CV error or SURE value at each `λ`.
    pub scores: Vec<f64>,
    /// Standard error of the CV error across folds.
    pub score_se: Option<Vec<f64>>,
    /// Knot count of the full-data fit at each `λ`.
    pub knot_counts: Vec<usize>,
    pub chosen: usize,
}

/// `(1/n)Σ(yᵢ − x̂ᵢ)² + 2σ² df / n`.
pub fn sure_score(y: &[f64], fit: &TrendFit, sigma2: f64, df: SureDf) -> f64 {
    let n = y.len() as f64;
    let rss: f64 = y.iter().zip(&fit.fitted).map(|(a, b)| (a - b).powi(2)).sum();
    let m = fit.num_knots() as f64
        + match df {
            SureDf::Knots => 0.0,
            SureDf::KnotsPlusOne => 1.0,
        };
    rss / n + 2.0 * sigma2 * m / n
}

/// Linear interpolation of `(xs, ys)` at `x` inside the range of `xs`.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let j = xs.partition_point(|&v| v < x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = (x - x0) / (x1 - x0);
    (1.0 - w) * ys[j - 1] + w * ys[j]
}

/// Cross-validation errors over `lambdas`.
///
/// Fold `r` holds out the interior points whose index is `r` modulo
/// `folds`, fits the remaining points at their own positions, and predicts
/// the held-out points by linear interpolation of that fit. Returns the
/// mean squared prediction error over folds and its standard error.
pub fn cv_errors(
    t: &[f64],
    y: &[f64],
    degree: usize,
    lambdas: &[f64],
    folds: usize,
) -> Result<(Vec<f64>, Vec<f64>), TrendError> {
    let n = y.len();
    if folds < 2 || n < folds + degree + 4 {
        return Err(TrendError::TooShort {
            n,
            needed: folds + degree + 4,
        });
    }
    let mut per_fold = Vec::with_capacity(folds);
    for r in 0..folds {
        let held = |i: usize| i > 0 && i + 1 < n && i % folds == r;
        let keep: Vec<usize> = (0..n).filter(|&i| !held(i)).collect();
        let out: Vec<usize> = (0..n).filter(|&i| held(i)).collect();
        let kt: Vec<f64> = keep.iter().map(|&i| t[i]).collect();
        let ky: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
        let filter = TrendFilter::new(&kt, degree)?;
        let path = filter.fit_path(&ky, lambdas)?;
        let errs: Vec<f64> = path
            .iter()
            .map(|fit| {
                out.iter()
                    .map(|&i| (y[i] - interpolate(&kt, &fit.fitted, t[i])).powi(2))
                    .sum::<f64>()
                    / out.len() as f64
            })
            .collect();
        per_fold.push(errs);
    }
    let kf = folds as f64;
    let mut mean = vec![0.0; lambdas.len()];
    let mut se = vec![0.0; lambdas.len()];
    for l in 0..lambdas.len() {
        let m = per_fold.iter().map(|e| e[l]).sum::<f64>() / kf;
        let var = per_fold.iter().map(|e| (e[l] - m).powi(2)).sum::<f64>() / (kf - 1.0);
        mean[l] = m;
        se[l] = (var / kf).sqrt();
    }
    Ok((mean, se))
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &x)| if x < best.1 { (i, x) } else { best })
        .0
}

/// Chooses `λ` for a degree-`k` trend filter of `y` at positions `t` by the
/// given rule and returns the full-data fit at that `λ`, whose knots are the
/// selected ones. Only `y` is consulted.
pub fn knot_select(t: &[f64], y: &[f64], degree: usize, rule: KnotRule, grid: LambdaGrid) -> Result<TrendFit, TrendError> {
    let filter = TrendFilter::new(t, degree)?;
    let lambdas = grid.values(filter.lambda_max(y)?)?;
    let path = filter.fit_path(y, &lambdas)?;
    let (scores, score_se, chosen) = match rule {
        KnotRule::CvMin | KnotRule::Cv1se => {
            let (mean, se) = cv_errors(t, y, degree, &lambdas, CV_FOLDS)?;
            let best = argmin(&mean);
            let chosen = match rule {
                KnotRule::Cv1se => (0..=best).find(|&i| mean[i] <= mean[best] + se[best]).unwrap_or(best),
                _ => best,
            };
            (mean, Some(se), chosen)
        }
        KnotRule::Sure { sigma2, df } => {
            let s2 = sigma2.ok_or_else(|| TrendError::InvalidArgument("SURE needs a noise variance".into()))?;
            let scores: Vec<f64> = path.iter().map(|fit| sure_score(y, fit, s2, df)).collect();
            let chosen = argmin(&scores);
            (scores, None, chosen)
        }
    };
    let knot_counts = path.iter().map(TrendFit::num_knots).collect();
    let mut fit = path.into_iter().nth(chosen).expect("chosen index lies on the grid");
    fit.selection = Some(SelectionDiagnostics {
        rule,
        lambdas,
        scores,
        score_se,
        knot_counts,
        chosen,
    });
    Ok(fit)
}

use numkit::{Cholesky, Matrix};

use crate::{Design, Family, ModelError};

/// Iteration cap for IRLS.
pub const MAX_IRLS_ITERATIONS: usize = 100;

/// A logistic fit whose linear predictor exceeds this bound in absolute
/// value is treated as perfectly separated.
pub const SEPARATION_BOUND: f64 = 30.0;

/// Ratio of the smallest squared Cholesky pivot to its diagonal entry below
/// which a Gram matrix is declared singular.
const PIVOT_RATIO: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// Coefficients of the columns of `X`, excluding any intercept.
    pub coefficients: Vec<f64>,
    pub intercept: Option<f64>,
    /// Fitted means.
    pub fitted: Vec<f64>,
    /// Linear predictor including the offset.
    pub linear_predictor: Vec<f64>,
    pub deviance: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    /// Coefficients in the column order of the fitted matrix: the intercept
    /// first when present, then the columns of `X`.
    pub fn full_coefficients(&self) -> Vec<f64> {
        self.intercept.iter().copied().chain(self.coefficients.iter().copied()).collect()
    }

    fn from_full(design: &Design, beta: Vec<f64>, eta: Vec<f64>, converged: bool, iterations: usize) -> Self {
        let family = design.family();
        let fitted: Vec<f64> = eta.iter().map(|&e| family.mean(e)).collect();
        let deviance = deviance(design, &fitted);
        let (intercept, coefficients) = if design.intercept() {
            (Some(beta[0]), beta[1..].to_vec())
        } else {
            (None, beta)
        };
        FitResult {
            coefficients,
            intercept,
            fitted,
            linear_predictor: eta,
            deviance,
            converged,
            iterations,
        }
    }
}

fn deviance(design: &Design, mu: &[f64]) -> f64 {
    let family = design.family();
    design
        .y()
        .iter()
        .zip(mu)
        .zip(design.weights())
        .map(|((&y, &m), &w)| w * family.unit_deviance(y, m))
        .sum()
}

/// Solves the weighted normal equations `XᵀWXβ = XᵀWz` with one step of
/// iterative refinement.
fn weighted_least_squares(x: &Matrix, w: &[f64], z: &[f64]) -> Result<Vec<f64>, ModelError> {
    let gram = x.weighted_gram(Some(w));
    let chol = Cholesky::new(&gram).map_err(|_| ModelError::SingularDesign)?;
    let l = chol.factor();
    for j in 0..gram.rows() {
        if l[(j, j)] * l[(j, j)] < PIVOT_RATIO * gram[(j, j)] {
            return Err(ModelError::SingularDesign);
        }
    }
    let wz: Vec<f64> = z.iter().zip(w).map(|(z, w)| z * w).collect();
    let rhs = x.tr_matvec(&wz);
    let mut beta = chol.solve(&rhs);
    let fitted = gram.matvec(&beta);
    let resid: Vec<f64> = rhs.iter().zip(&fitted).map(|(r, f)| r - f).collect();
    for (b, d) in beta.iter_mut().zip(chol.solve(&resid)) {
        *b += d;
    }
    Ok(beta)
}

/// Least-squares fit of `y − offset` on the design, weighted by the prior
/// weights.
pub fn ols(design: &Design) -> Result<FitResult, ModelError> {
    if design.family() != Family::Gaussian {
        return Err(ModelError::InvalidArgument(format!(
            "ols needs a gaussian design, got {}",
            design.family().name()
        )));
    }
    let x = design.fit_matrix();
    let z: Vec<f64> = design.y().iter().zip(design.offset()).map(|(y, o)| y - o).collect();
    let beta = weighted_least_squares(&x, design.weights(), &z)?;
    let eta: Vec<f64> = x.matvec(&beta).iter().zip(design.offset()).map(|(e, o)| e + o).collect();
    Ok(FitResult::from_full(design, beta, eta, true, 1))
}

/// Gradient of the log-likelihood, `Xᵀ W (y − μ) (dμ/dη) / V(μ)`, at the
/// coefficients `beta` of the fitted matrix (intercept first when present).
pub fn score(design: &Design, beta: &[f64]) -> Result<Vec<f64>, ModelError> {
    let x = design.fit_matrix();
    if beta.len() != x.cols() {
        return Err(ModelError::DimensionMismatch(format!(
            "{} coefficients for {} columns",
            beta.len(),
            x.cols()
        )));
    }
    let family = design.family();
    let eta = x.matvec(beta);
    let u: Vec<f64> = eta
        .iter()
        .zip(design.offset())
        .zip(design.y())
        .zip(design.weights())
        .map(|(((e, o), y), w)| {
            let mu = family.mean(e + o);
            w * (y - mu) * family.mean_derivative(mu) / family.variance(mu)
        })
        .collect();
    Ok(x.tr_matvec(&u))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximum-likelihood fit by iteratively reweighted least squares with
/// step-halving.
pub fn glm_irls(design: &Design) -> Result<FitResult, ModelError> {
    let family = design.family();
    let x = design.fit_matrix();
    let (y, offset, weights) = (design.y(), design.offset(), design.weights());
    let n = design.n();
    let total_w: f64 = weights.iter().sum();
    let ybar = y.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / total_w;

    let mut mu: Vec<f64> = y.iter().map(|&v| family.initial_mean(v, ybar)).collect();
    let mut eta: Vec<f64> = mu.iter().map(|&m| family.link(m)).collect();
    let mut beta: Option<Vec<f64>> = None;
    let mut dev_old = f64::INFINITY;
    let scale = 1.0 + max_abs(&x.tr_matvec(&y.iter().zip(weights).map(|(y, w)| y * w).collect::<Vec<_>>()));

    let linear = |b: &[f64]| -> Vec<f64> { x.matvec(b).iter().zip(offset).map(|(e, o)| e + o).collect() };
    let dev_of = |eta: &[f64]| -> f64 {
        let m: Vec<f64> = eta.iter().map(|&e| family.mean(e)).collect();
        deviance(design, &m)
    };

    for iter in 1..=MAX_IRLS_ITERATIONS {
        let mut w = vec![0.0; n];
        let mut z = vec![0.0; n];
        for i in 0..n {
            let d = family.mean_derivative(mu[i]).max(1e-300);
            w[i] = weights[i] * family.working_weight(mu[i]);
            z[i] = eta[i] - offset[i] + (y[i] - mu[i]) / d;
        }
        let mut candidate = weighted_least_squares(&x, &w, &z)?;
        let mut eta_new = linear(&candidate);
        let mut dev_new = dev_of(&eta_new);
        if let Some(prev) = &beta {
            let mut halvings = 0;
            while !(dev_new.is_finite() && dev_new <= dev_old + 1e-12 * dev_old.abs().max(1.0)) {
                halvings += 1;
                if halvings > 50 {
                    return Err(ModelError::NoConvergence { iterations: iter });
                }
                for (c, p) in candidate.iter_mut().zip(prev) {
                    *c = 0.5 * (*c + p);
                }
                eta_new = linear(&candidate);
                dev_new = dev_of(&eta_new);
            }
        }
        if family == Family::Binomial && max_abs(&eta_new) > SEPARATION_BOUND {
            return Err(ModelError::SeparationDetected);
        }
        let change = (dev_old - dev_new).abs() / (dev_new.abs() + 0.1);
        beta = Some(candidate);
        eta = eta_new;
        mu = eta.iter().map(|&e| family.mean(e)).collect();
        dev_old = dev_new;
        let b = beta.as_ref().expect("coefficients set above");
        let grad = max_abs(&score(design, b)?);
        if grad <= 1e-11 * scale || (change < 1e-15 && grad <= 1e-8 * scale) {
            return Ok(FitResult::from_full(design, b.clone(), eta, true, iter));
        }
    }
    Err(ModelError::NoConvergence {
        iterations: MAX_IRLS_ITERATIONS,
    })
}

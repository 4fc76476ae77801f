use fission_rules::Covariance;
use numkit::{Cholesky, Matrix};

use crate::{z_crit, CiTable, PosiError, Target};

/// A selected subset of covariate columns together with the corresponding
/// submatrix.
#[derive(Clone, Debug)]
pub struct SelectedModel {
    indices: Vec<usize>,
    x_m: Matrix,
}

impl SelectedModel {
    /// Sorts and deduplicates `indices` and extracts those columns of `x`.
    pub fn new(x: &Matrix, indices: &[usize]) -> Result<Self, PosiError> {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if let Some(bad) = idx.iter().find(|&&j| j >= x.cols()) {
            return Err(PosiError::InvalidArgument(format!("column {bad} out of range")));
        }
        Ok(SelectedModel {
            x_m: x.select_columns(&idx),
            indices: idx,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn design(&self) -> &Matrix {
        &self.x_m
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Smallest accepted ratio of a squared Cholesky pivot to its diagonal entry.
const PIVOT_RATIO: f64 = 1e-12;

/// Inverse of an SPD matrix, rejecting numerically rank-deficient input.
pub(crate) fn checked_inverse(m: &Matrix) -> Option<Matrix> {
    let chol = Cholesky::new(m).ok()?;
    let l = chol.factor();
    if (0..m.rows()).any(|j| l[(j, j)] * l[(j, j)] < PIVOT_RATIO * m[(j, j)]) {
        return None;
    }
    Some(chol.inverse())
}

fn gram_inverse(x: &Matrix) -> Result<Matrix, PosiError> {
    checked_inverse(&x.gram()).ok_or(PosiError::SingularDesign)
}

/// `(X_MᵀX_M)⁻¹X_Mᵀμ`, the least-squares projection of a mean vector.
pub fn linear_projection(model: &SelectedModel, mu: &[f64]) -> Result<Vec<f64>, PosiError> {
    let inv = gram_inverse(model.design())?;
    Ok(inv.matvec(&model.design().tr_matvec(mu)))
}

/// `X_MᵀΣX_M` for an `n × n` noise covariance.
fn sandwich_meat(x: &Matrix, cov: &Covariance) -> Result<Matrix, PosiError> {
    cov.check_dim(x.rows())?;
    Ok(match cov {
        Covariance::Iso(s2) => x.gram().scale(*s2),
        Covariance::Diag(d) => x.weighted_gram(Some(d)),
        Covariance::Full { cov, .. } => x.transpose().matmul(&cov.matmul(x)),
    })
}

/// Intervals for the projection coefficients of a selected linear model
/// fitted to the inference part `g_y` of Gaussian fission with tuning `tau`.
///
/// The half-width for coefficient `k` is
/// `z_{α/2} √((1 + τ⁻²) [(X_MᵀX_M)⁻¹X_MᵀΣX_M(X_MᵀX_M)⁻¹]_kk)`. Passing
/// `tau = ∞` gives the classical interval for unfissioned data.
pub fn linear_ci(g_y: &[f64], model: &SelectedModel, cov: &Covariance, tau: f64, alpha: f64) -> Result<CiTable, PosiError> {
    let x = model.design();
    if g_y.len() != x.rows() {
        return Err(PosiError::InvalidArgument(format!("{} responses for {} rows", g_y.len(), x.rows())));
    }
    if !(tau > 0.0) {
        return Err(PosiError::InvalidArgument(format!("tau {tau} is not positive")));
    }
    let z = z_crit(alpha)?;
    let inflation = 1.0 + 1.0 / (tau * tau);
    let inv = gram_inverse(x)?;
    let estimate = inv.matvec(&x.tr_matvec(g_y));
    let var = inv.matmul(&sandwich_meat(x, cov)?).matmul(&inv);
    let half: Vec<f64> = var.diag().iter().map(|v| z * (inflation * v.max(0.0)).sqrt()).collect();
    CiTable::symmetric(Target::BetaStar, alpha, model.indices(), &estimate, &half)
}

/// Noise variance estimated from the residuals of the full linear model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaEstimate {
    pub sigma2: f64,
    /// Residual degrees of freedom `n − p`.
    pub df: usize,
    /// Set when only one residual degree of freedom is available.
    pub low_df: bool,
}

/// `σ̂² = ‖y − Xβ̂‖² / (n − p)` from the unselected full model.
pub fn full_model_sigma(y: &[f64], x_full: &Matrix) -> Result<SigmaEstimate, PosiError> {
    let (n, p) = (x_full.rows(), x_full.cols());
    if y.len() != n {
        return Err(PosiError::InvalidArgument(format!("{} responses for {n} rows", y.len())));
    }
    if n <= p {
        return Err(PosiError::RankDeficientFullModel);
    }
    let inv = checked_inverse(&x_full.gram()).ok_or(PosiError::RankDeficientFullModel)?;
    let beta = inv.matvec(&x_full.tr_matvec(y));
    let rss: f64 = x_full.matvec(&beta).iter().zip(y).map(|(f, y)| (y - f).powi(2)).sum();
    let df = n - p;
    Ok(SigmaEstimate {
        sigma2: rss / df as f64,
        df,
        low_df: df == 1,
    })
}

/// `linear_ci` with homoscedastic noise at the estimated variance, for data
/// fissioned using `σ̂` in place of the unknown `σ`.
pub fn linear_ci_estvar(
    g_y: &[f64],
    model: &SelectedModel,
    sigma: &SigmaEstimate,
    tau: f64,
    alpha: f64,
) -> Result<CiTable, PosiError> {
    linear_ci(g_y, model, &Covariance::Iso(sigma.sigma2), tau, alpha)
}

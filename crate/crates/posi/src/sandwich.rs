use modelfit::{glm_irls, Design, FitResult};
use numkit::Matrix;

use crate::linear::checked_inverse;
use crate::{z_crit, CiTable, PosiError, Target};

/// Small-sample adjustment applied to sandwich intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Correction {
    None,
    /// Multiplies half-widths by `√(n / (n − k))`, `k` the number of fitted
    /// coefficients.
    DegreesOfFreedom,
}

/// Ingredients of the robust variance estimate `Ĥ⁻¹V̂Ĥ⁻¹`.
#[derive(Clone, Debug)]
pub struct SandwichPieces {
    /// Expected information `Σ wᵢ (∂μᵢ/∂ηᵢ)² / V(μᵢ) x̃ᵢx̃ᵢᵀ` at the fit.
    pub hessian: Matrix,
    /// Empirical score outer product `Σ wᵢ² (yᵢ − μᵢ)² ((∂μᵢ/∂ηᵢ)/V(μᵢ))² x̃ᵢx̃ᵢᵀ`.
    pub meat: Matrix,
    pub variance: Matrix,
    pub fit: FitResult,
}

/// Fits the GLM on `design` (the selected columns, with the offset that
/// accounts for fission) and returns sandwich intervals for the columns of
/// `X`, labelled by `indices`. An intercept, if requested by the design, is
/// part of the fit but not of the table.
pub fn sandwich_ci(
    design: &Design,
    indices: &[usize],
    alpha: f64,
    correction: Correction,
) -> Result<(SandwichPieces, CiTable), PosiError> {
    if indices.len() != design.p() {
        return Err(PosiError::InvalidArgument(format!(
            "{} labels for {} columns",
            indices.len(),
            design.p()
        )));
    }
    let z = z_crit(alpha)?;
    let fit = glm_irls(design)?;
    let x = design.fit_matrix();
    let family = design.family();
    let (n, k) = (x.rows(), x.cols());
    let mut hw = Vec::with_capacity(n);
    let mut mw = Vec::with_capacity(n);
    for i in 0..n {
        let mu = fit.fitted[i];
        let w = design.weights()[i];
        let d = family.mean_derivative(mu);
        let v = family.variance(mu);
        hw.push(w * d * d / v);
        mw.push((w * (design.y()[i] - mu) * d / v).powi(2));
    }
    let hessian = x.weighted_gram(Some(&hw));
    let meat = x.weighted_gram(Some(&mw));
    let inv = checked_inverse(&hessian).ok_or(PosiError::SingularHessian)?;
    let variance = inv.matmul(&meat).matmul(&inv).symmetrized();
    let factor = match correction {
        Correction::None => 1.0,
        Correction::DegreesOfFreedom => {
            if n <= k {
                return Err(PosiError::InvalidArgument(format!("{n} observations for {k} coefficients")));
            }
            (n as f64 / (n - k) as f64).sqrt()
        }
    };
    let skip = usize::from(design.intercept());
    let coefs = fit.full_coefficients();
    let estimates = &coefs[skip..];
    let half: Vec<f64> = variance.diag()[skip..].iter().map(|v| factor * z * v.max(0.0).sqrt()).collect();
    let table = CiTable::symmetric(Target::BetaStarN, alpha, indices, estimates, &half)?;
    Ok((
        SandwichPieces {
            hessian,
            meat,
            variance,
            fit,
        },
        table,
    ))
}

/// Kullback–Leibler projection target `β*_n(M)`: the GLM fit to the exact
/// conditional mean of the response.
///
/// `design_x` holds the selected columns, `mean` the true mean of the
/// response the inference GLM is fitted to (for Poisson fission this is
/// `(1 − p)·E[y]`), and `offset` the same offset used in the inference fit.
pub fn kl_projection(
    design_x: &Matrix,
    mean: Vec<f64>,
    family: modelfit::Family,
    offset: Vec<f64>,
    intercept: bool,
) -> Result<FitResult, PosiError> {
    let d = Design::from_expected(design_x.clone(), mean, family)?
        .with_offset(offset)?
        .with_intercept(intercept);
    Ok(glm_irls(&d)?)
}

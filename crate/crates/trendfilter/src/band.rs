use std::io::Write;

use fission_rules::Covariance;
use numkit::{norm_sf, spd_inverse_sqrt, t_sf, z_two_sided, Matrix};

use crate::basis::Projection;
use crate::TrendError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BandKind {
    Pointwise,
    Uniform,
}

impl BandKind {
    pub fn label(&self) -> &'static str {
        match self {
            BandKind::Pointwise => "pointwise",
            BandKind::Uniform => "uniform",
        }
    }
}

/// Confidence band for the projected mean at every time point.
#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub centers: Vec<f64>,
    pub halfwidths: Vec<f64>,
    pub kind: BandKind,
    /// Normal quantile for pointwise bands, `c(α)` for uniform bands.
    pub multiplier: f64,
    /// Length `|γ|` of the normalized basis curve (uniform bands only).
    pub curve_length: Option<f64>,
    /// Degrees of freedom of the t-version multiplier, when used.
    pub df: Option<f64>,
    /// Number of basis columns.
    pub basis_dim: usize,
}

impl Band {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.centers.iter().zip(&self.halfwidths).map(|(c, h)| c - h).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.centers.iter().zip(&self.halfwidths).map(|(c, h)| c + h).collect()
    }

    /// Per-point coverage of `target`.
    pub fn covers(&self, target: &[f64]) -> Vec<bool> {
        self.centers
            .iter()
            .zip(&self.halfwidths)
            .zip(target)
            .map(|((c, h), m)| (m - c).abs() <= *h)
            .collect()
    }

    /// Fraction of points whose interval misses `target`.
    pub fn miss_fraction(&self, target: &[f64]) -> f64 {
        let misses = self.covers(target).iter().filter(|c| !**c).count();
        misses as f64 / self.len().max(1) as f64
    }

    pub fn mean_width(&self) -> f64 {
        2.0 * self.halfwidths.iter().sum::<f64>() / self.len().max(1) as f64
    }
}

fn check_alpha(alpha: f64) -> Result<(), TrendError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(TrendError::InvalidArgument(format!("alpha {alpha} is not in (0,1)")))
    }
}

/// Variance inflation `1 + τ⁻²` of the `g` part; `τ = ∞` gives 1.
fn inflation(tau: f64) -> Result<f64, TrendError> {
    if tau > 0.0 {
        Ok(1.0 + 1.0 / (tau * tau))
    } else {
        Err(TrendError::InvalidArgument(format!("tau {tau} must be positive")))
    }
}

/// Pointwise intervals `μ̂ᵢ ± z_{α/2} √((1+τ⁻²) bᵢᵀ AᵀΣA bᵢ)` with
/// `bᵢ = (AᵀA)⁻¹a(xᵢ)`, centered on the projection of `g` onto the basis.
pub fn pointwise_band(g: &[f64], basis: &Matrix, cov: &Covariance, tau: f64, alpha: f64) -> Result<Band, TrendError> {
    check_alpha(alpha)?;
    let infl = inflation(tau)?;
    cov.check_dim(g.len())?;
    cov.validate()?;
    let proj = Projection::new(basis.clone())?;
    let centers = proj.project(g)?;
    let var: Vec<f64> = match cov {
        Covariance::Iso(s2) => proj.leverages().iter().map(|h| s2 * h).collect(),
        _ => {
            let sigma = cov.to_matrix(g.len());
            let meat = basis.transpose().matmul(&sigma.matmul(basis));
            let b = proj.hat_rows();
            (0..g.len()).map(|i| numkit::dot(b.row(i), &meat.matvec(b.row(i)))).collect()
        }
    };
    let z = z_two_sided(alpha)?;
    Ok(Band {
        centers,
        halfwidths: var.iter().map(|v| z * (infl * v).sqrt()).collect(),
        kind: BandKind::Pointwise,
        multiplier: z,
        curve_length: None,
        df: None,
        basis_dim: basis.cols(),
    })
}

/// Solution `c(α)` of the tube equation together with the curve length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformMultiplier {
    pub c: f64,
    pub curve_length: f64,
    pub df: Option<f64>,
}

/// `|γ| = Σ ‖ã(x_{i+1}) − ã(x_i)‖` for `ã(x) = (AᵀA)^{-1/2}a(x)` normalized.
pub fn curve_length(basis: &Matrix) -> Result<f64, TrendError> {
    let root = spd_inverse_sqrt(&basis.gram())?;
    let mut prev: Option<Vec<f64>> = None;
    let mut total = 0.0;
    for i in 0..basis.rows() {
        let mut v = root.matvec(basis.row(i));
        let len = numkit::norm2(&v);
        if len > 0.0 {
            v.iter_mut().for_each(|a| *a /= len);
        }
        if let Some(p) = &prev {
            total += p.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        }
        prev = Some(v);
    }
    Ok(total)
}

/// Left side of the tube equation at `c`: the normal form
/// `|γ|/(2π) e^{−c²/2} + 1 − Φ(c)`, or with `df = Some(v)` the t form
/// `|γ|/(2π) (1 + c²/v)^{−v/2} + P(t_v > c)`.
pub fn tube_lhs(c: f64, curve_length: f64, df: Option<f64>) -> f64 {
    let k = curve_length / (2.0 * std::f64::consts::PI);
    match df {
        None => k * (-0.5 * c * c).exp() + norm_sf(c),
        Some(v) => k * (1.0 + c * c / v).powf(-0.5 * v) + t_sf(c, v).unwrap_or(f64::NAN),
    }
}

/// Solves the tube equation `tube_lhs(c) = α/2` by bisection.
pub fn solve_multiplier(curve_length: f64, alpha: f64, df: Option<f64>) -> Result<UniformMultiplier, TrendError> {
    check_alpha(alpha)?;
    if let Some(v) = df {
        if !(v > 0.0) {
            return Err(TrendError::InvalidArgument(format!("degrees of freedom {v} must be positive")));
        }
    }
    let target = 0.5 * alpha;
    let f = |c: f64| tube_lhs(c, curve_length, df);
    let done = |c: f64| UniformMultiplier { c, curve_length, df };
    if f(0.0) <= target {
        return Ok(done(0.0));
    }
    let mut hi = 1.0;
    while f(hi) >= target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(TrendError::NoRoot);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Ok(done(0.5 * (lo + hi)))
}

/// Multiplier `c(α)` for a uniform band over the rows of `basis`.
pub fn uniform_multiplier(basis: &Matrix, alpha: f64, df: Option<f64>) -> Result<UniformMultiplier, TrendError> {
    Projection::new(basis.clone())?;
    solve_multiplier(curve_length(basis)?, alpha, df)
}

/// Uniform band `μ̂ᵢ ± c(α) σ √((1+τ⁻²) a(xᵢ)ᵀ(AᵀA)⁻¹a(xᵢ))` for
/// homoscedastic noise of variance `sigma2`; `df` switches to the t form.
pub fn uniform_band(
    g: &[f64],
    basis: &Matrix,
    sigma2: f64,
    tau: f64,
    alpha: f64,
    df: Option<f64>,
) -> Result<Band, TrendError> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(TrendError::InvalidArgument(format!("variance {sigma2} must be positive")));
    }
    let infl = inflation(tau)?;
    let proj = Projection::new(basis.clone())?;
    let centers = proj.project(g)?;
    let mult = uniform_multiplier(basis, alpha, df)?;
    let halfwidths = proj
        .leverages()
        .iter()
        .map(|h| mult.c * (sigma2 * infl * h).sqrt())
        .collect();
    Ok(Band {
        centers,
        halfwidths,
        kind: BandKind::Uniform,
        multiplier: mult.c,
        curve_length: Some(mult.curve_length),
        df,
        basis_dim: basis.cols(),
    })
}

/// Projection of the true trend onto the basis, the coverage target.
pub fn projected_mean(basis: &Matrix, trend: &[f64]) -> Result<Vec<f64>, TrendError> {
    Projection::new(basis.clone())?.project(trend)
}

/// Writes bands as CSV with header `t,fit,lower,upper,kind`.
pub fn write_bands_csv<W: Write>(writer: W, t: &[f64], bands: &[&Band]) -> Result<(), TrendError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "fit", "lower", "upper", "kind"])?;
    for band in bands {
        if band.len() != t.len() {
            return Err(TrendError::InvalidArgument("band and time axis lengths differ".into()));
        }
        for (i, ti) in t.iter().enumerate() {
            let (c, h) = (band.centers[i], band.halfwidths[i]);
            w.write_record([
                ti.to_string(),
                c.to_string(),
                (c - h).to_string(),
                (c + h).to_string(),
                band.kind.label().to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

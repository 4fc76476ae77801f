use distkit::{Dist, RngStream};
use numkit::{Cholesky, Matrix};

use crate::FissionError;

/// Known noise covariance of a Gaussian observation.
///
/// `Iso` and `Diag` broadcast to the observation's dimension; `Full` stores
/// its Cholesky factor so repeated draws avoid refactorizing.
#[derive(Clone, Debug)]
pub enum Covariance {
    Iso(f64),
    Diag(Vec<f64>),
    Full { cov: Matrix, chol: Matrix },
}

impl Covariance {
    pub fn full(cov: Matrix) -> Result<Self, FissionError> {
        let chol = Cholesky::new(&cov)
            .map_err(|e| FissionError::InvalidTuning(format!("covariance: {e}")))?
            .into_factor();
        Ok(Covariance::Full { cov, chol })
    }

    pub fn validate(&self) -> Result<(), FissionError> {
        let ok = match self {
            Covariance::Iso(v) => *v > 0.0 && v.is_finite(),
            Covariance::Diag(v) => !v.is_empty() && v.iter().all(|&x| x > 0.0 && x.is_finite()),
            Covariance::Full { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(FissionError::InvalidTuning("variances must be positive".into()))
        }
    }

    /// Dimension the covariance fixes, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            Covariance::Iso(_) => None,
            Covariance::Diag(v) => Some(v.len()),
            Covariance::Full { cov, .. } => Some(cov.rows()),
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<(), FissionError> {
        match self.fixed_dim() {
            Some(d) if d != n => Err(FissionError::OutOfSupport(format!(
                "observation has dimension {n}, covariance has {d}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn to_matrix(&self, n: usize) -> Matrix {
        match self {
            Covariance::Iso(v) => Matrix::identity(n).scale(*v),
            Covariance::Diag(d) => Matrix::from_diag(d),
            Covariance::Full { cov, .. } => cov.clone(),
        }
    }

    /// Draws `Z ~ N(0, scale · Σ)` of dimension `n`.
    pub fn sample_noise(&self, n: usize, scale: f64, rng: &mut RngStream) -> Vec<f64> {
        let s = scale.sqrt();
        match self {
            Covariance::Iso(v) => {
                let sd = v.sqrt() * s;
                (0..n).map(|_| sd * rng.standard_normal()).collect()
            }
            Covariance::Diag(d) => d.iter().map(|v| v.sqrt() * s * rng.standard_normal()).collect(),
            Covariance::Full { chol, .. } => {
                let z = rng.normals(n);
                chol.matvec(&z).into_iter().map(|v| v * s).collect()
            }
        }
    }

    /// `N(mean, scale · Σ)`; a one-element mean with `scalar = true` yields a
    /// univariate normal.
    pub fn normal_law(&self, mean: Vec<f64>, scale: f64, scalar: bool) -> Result<Dist, FissionError> {
        let n = mean.len();
        self.check_dim(n)?;
        let d = match self {
            Covariance::Iso(v) if scalar => Dist::Normal {
                mean: mean[0],
                sd: (v * scale).sqrt(),
            },
            Covariance::Diag(d) if scalar => Dist::Normal {
                mean: mean[0],
                sd: (d[0] * scale).sqrt(),
            },
            Covariance::Full { chol, .. } if scalar => Dist::Normal {
                mean: mean[0],
                sd: chol[(0, 0)] * scale.sqrt(),
            },
            Covariance::Iso(v) => Dist::MvNormalDiag {
                mean,
                var: vec![v * scale; n],
            },
            Covariance::Diag(d) => Dist::MvNormalDiag {
                mean,
                var: d.iter().map(|v| v * scale).collect(),
            },
            Covariance::Full { chol, .. } => Dist::MvNormalChol {
                mean,
                chol: chol.scale(scale.sqrt()),
            },
        };
        Ok(d)
    }
}

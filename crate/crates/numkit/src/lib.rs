//! Dense linear algebra and special functions for desk-scale statistics.
//!
//! Matrices are small (at most a few hundred rows and columns), so all
//! routines are straightforward dense implementations.

mod banded;
mod decomp;
mod matrix;
pub mod special;

pub use banded::BandedCholesky;
pub use decomp::{
    cholesky, solve_spd, spd_inverse, spd_inverse_sqrt, sym_eigen, Cholesky, SymEigen,
    SYMMETRY_TOL,
};
pub use matrix::{dot, norm2, Matrix};
pub use special::{
    chisq_cdf, chisq_quantile, log_gamma, norm_cdf, norm_quantile, norm_sf, t_cdf, t_quantile,
    t_sf, z_two_sided,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumError {
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry")]
    NonFinite,
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

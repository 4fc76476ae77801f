//! Estimators for the selection and inference stages of a regression
//! pipeline: ordinary least squares, IRLS fits of Gaussian, Poisson and
//! logistic GLMs with offsets, lasso paths by coordinate descent, and
//! K-fold cross-validation with the minimum and one-standard-error rules.

mod cv;
mod design;
mod family;
mod glm;
mod lasso;

pub use cv::{cv_select, CvSelection};
pub use design::Design;
pub use family::Family;
pub use glm::{glm_irls, ols, score, FitResult, MAX_IRLS_ITERATIONS, SEPARATION_BOUND};
pub use lasso::{lambda_grid, lambda_max, lasso_path, LassoPath};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid response: {0}")]
    InvalidResponse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("design is singular")]
    SingularDesign,
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("perfect separation: linear predictor exceeded the bound")]
    SeparationDetected,
}

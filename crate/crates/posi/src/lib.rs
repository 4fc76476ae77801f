//! Post-selection inference: intervals for linear and generalized linear
//! models fitted on the inference part of fissioned data, multiple-testing
//! selection with interval estimates for the selected effects, and the
//! error-rate metrics used to evaluate them.

mod linear;
mod metrics;
mod multitest;
mod sandwich;
mod table;

pub use linear::{full_model_sigma, linear_ci, linear_ci_estvar, linear_projection, SelectedModel, SigmaEstimate};
pub use metrics::{regression_metrics, selection_metrics, MultitestMetrics, RegressionMetrics};
pub use multitest::{
    aggregate_ci, bh_select, by_ci, fission_multitest, one_sided_pvalue, poisson_aggregate_ci, randomized_pvalue,
    upper_randomized_pvalue, MultitestOutcome, RejectionSet, Sidedness,
};
pub use sandwich::{kl_projection, sandwich_ci, Correction, SandwichPieces};
pub use table::{CiRow, CiTable, Interval, Target};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PosiError {
    #[error("selected design is singular")]
    SingularDesign,
    #[error("estimated Hessian is not positive definite")]
    SingularHessian,
    #[error("full model leaves no residual degrees of freedom")]
    RankDeficientFullModel,
    #[error("rejection set is empty")]
    EmptyRejectionSet,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(#[from] modelfit::ModelError),
    #[error(transparent)]
    Fission(#[from] fission_rules::FissionError),
    #[error(transparent)]
    Num(#[from] numkit::NumError),
    #[error("csv output failed: {0}")]
    Csv(String),
}

/// Two-sided normal critical value `z_{α/2}`, checking `α ∈ (0, 1)`.
pub(crate) fn z_crit(alpha: f64) -> Result<f64, PosiError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(PosiError::InvalidArgument(format!("level α = {alpha} is not in (0,1)")));
    }
    Ok(numkit::z_two_sided(alpha)?)
}

//! Randomized decompositions of a single observation `X` into two parts
//! `f(X)` and `g(X)` whose joint law is known.
//!
//! Each [`FissionRule`] draws auxiliary noise, releases `f` for exploration
//! and keeps `g` for inference. [`marginal_of_f`] and [`conditional_of_g`]
//! give the laws needed downstream, and [`reconstruct`] recovers `X`.
//! [`conjugate_reversal`] builds a rule from any exponential family paired
//! with a conjugate likelihood.

mod conjugate;
mod cov;
mod laws;
pub mod oracle;
mod record;
mod rule;

pub use conjugate::{
    conjugate_reversal, log_marginal, posterior_natural, BinomialProb, ExpFamSpec,
    MultinomialProbs, PoissonRate,
};
pub use cov::Covariance;
pub use laws::{conditional_of_g, ln_marginal_f, marginal_of_f, ConditionalFamily};
pub use record::Record;
pub use rule::{fission, reconstruct, BetaSide, CpMode, FissionOutput, FissionRule};

use distkit::DistError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FissionError {
    #[error("invalid tuning parameter: {0}")]
    InvalidTuning(String),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("value outside the support: {0}")]
    OutOfSupport(String),
    #[error("parts are not jointly attainable: {0}")]
    InconsistentParts(String),
    #[error("invalid exponential-family specification: {0}")]
    InvalidSpec(String),
    #[error("no closed-form law: {0}")]
    NoClosedForm(String),
    #[error("malformed rule record: {0}")]
    BadRecord(String),
}

impl From<DistError> for FissionError {
    fn from(e: DistError) -> Self {
        match e {
            DistError::OutOfSupport(m) => FissionError::OutOfSupport(m),
            other => FissionError::InvalidParameter(other.to_string()),
        }
    }
}

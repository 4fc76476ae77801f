//! Probability distributions with sampling, densities and CDFs, plus
//! reproducible counter-based random streams.

mod dist;
pub mod gof;
mod rng;

pub use dist::{Dist, TRUNCATION_MASS};
pub use rng::RngStream;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("value outside the support: {0}")]
    OutOfSupport(String),
    #[error("operation requires a univariate law")]
    NotUnivariate,
}

/// A draw from a [`Dist`]: scalar or vector, real or count valued.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Real(f64),
    Int(u64),
    Reals(Vec<f64>),
    Ints(Vec<u64>),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Real(v) => Some(*v),
            Value::Int(k) => Some(*k as f64),
            _ => None,
        }
    }

    pub fn as_u64(&self) -> Option<u64> {
        match self {
            Value::Int(k) => Some(*k),
            _ => None,
        }
    }

    /// Components as reals; scalars become one-element vectors.
    pub fn to_reals(&self) -> Vec<f64> {
        match self {
            Value::Real(v) => vec![*v],
            Value::Int(k) => vec![*k as f64],
            Value::Reals(v) => v.clone(),
            Value::Ints(v) => v.iter().map(|&k| k as f64).collect(),
        }
    }

    /// Components as counts; `None` for real-valued draws.
    pub fn to_counts(&self) -> Option<Vec<u64>> {
        match self {
            Value::Int(k) => Some(vec![*k]),
            Value::Ints(v) => Some(v.clone()),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Value::Real(_) | Value::Int(_) => 1,
            Value::Reals(v) => v.len(),
            Value::Ints(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Value::Real(_) | Value::Int(_))
    }
}

use numkit::Matrix;

use crate::{Family, ModelError};

/// A regression problem: covariates, response, family, offset and prior
/// weights.
///
/// For `ols` and `glm_irls` the columns of `x` are used as given unless an
/// intercept is requested; the lasso always fits an unpenalized intercept.
#[derive(Clone, Debug)]
pub struct Design {
    x: Matrix,
    y: Vec<f64>,
    family: Family,
    offset: Vec<f64>,
    weights: Vec<f64>,
    intercept: bool,
}

impl Design {
    pub fn new(x: Matrix, y: Vec<f64>, family: Family) -> Result<Self, ModelError> {
        if x.rows() != y.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "{} rows in X but {} responses",
                x.rows(),
                y.len()
            )));
        }
        if x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidArgument("non-finite covariate".into()));
        }
        if let Some(bad) = y.iter().find(|&&v| !family.validate_response(v)) {
            return Err(ModelError::InvalidResponse(format!(
                "{bad} is not a valid {} response",
                family.name()
            )));
        }
        let n = y.len();
        Ok(Self {
            x,
            y,
            family,
            offset: vec![0.0; n],
            weights: vec![1.0; n],
            intercept: false,
        })
    }

    /// A design whose response is an expected value rather than an
    /// observation: Poisson responses may be any nonnegative number and
    /// binomial responses any probability. Used to compute projection
    /// targets by fitting to the true conditional mean.
    pub fn from_expected(x: Matrix, mean: Vec<f64>, family: Family) -> Result<Self, ModelError> {
        let ok = |v: f64| match family {
            Family::Gaussian => v.is_finite(),
            Family::Poisson => v >= 0.0 && v.is_finite(),
            Family::Binomial => (0.0..=1.0).contains(&v),
        };
        if let Some(bad) = mean.iter().find(|&&v| !ok(v)) {
            return Err(ModelError::InvalidResponse(format!("{bad} is not a valid {} mean", family.name())));
        }
        let placeholder: Vec<f64> = mean.iter().map(|_| 0.0).collect();
        let mut d = Design::new(x, placeholder, Family::Gaussian)?;
        d.y = mean;
        d.family = family;
        Ok(d)
    }

    pub fn with_offset(mut self, offset: Vec<f64>) -> Result<Self, ModelError> {
        if offset.len() != self.n() || offset.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::DimensionMismatch("offset length or values".into()));
        }
        self.offset = offset;
        Ok(self)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, ModelError> {
        if weights.len() != self.n() {
            return Err(ModelError::DimensionMismatch("weights length".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || weights.iter().all(|w| *w == 0.0) {
            return Err(ModelError::InvalidArgument("weights must be nonnegative and not all zero".into()));
        }
        self.weights = weights;
        Ok(self)
    }

    /// Adds a leading intercept column when fitting by `ols` or `glm_irls`.
    pub fn with_intercept(mut self, intercept: bool) -> Self {
        self.intercept = intercept;
        self
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> bool {
        self.intercept
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// The matrix fitted by `ols` and `glm_irls`: `X` with a leading column
    /// of ones when an intercept is requested.
    pub fn fit_matrix(&self) -> Matrix {
        if !self.intercept {
            return self.x.clone();
        }
        Matrix::from_fn(self.n(), self.p() + 1, |i, j| if j == 0 { 1.0 } else { self.x[(i, j - 1)] })
    }

    /// Restriction to the given rows, keeping family, offset and weights.
    pub fn subset(&self, rows: &[usize]) -> Design {
        Design {
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            family: self.family,
            offset: rows.iter().map(|&i| self.offset[i]).collect(),
            weights: rows.iter().map(|&i| self.weights[i]).collect(),
            intercept: self.intercept,
        }
    }

    /// Restriction to the given columns.
    pub fn select(&self, cols: &[usize]) -> Design {
        Design {
            x: self.x.select_columns(cols),
            ..self.clone()
        }
    }
}

/// Response family with its canonical link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Identity link, unit variance function.
    Gaussian,
    /// Log link, variance equal to the mean.
    Poisson,
    /// Logit link for 0/1 responses.
    Binomial,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Poisson => "poisson",
            Family::Binomial => "binomial",
        }
    }

    /// Mean as a function of the linear predictor.
    pub fn mean(self, eta: f64) -> f64 {
        match self {
            Family::Gaussian => eta,
            Family::Poisson => eta.exp(),
            Family::Binomial => 1.0 / (1.0 + (-eta).exp()),
        }
    }

    /// Linear predictor as a function of the mean.
    pub fn link(self, mu: f64) -> f64 {
        match self {
            Family::Gaussian => mu,
            Family::Poisson => mu.ln(),
            Family::Binomial => (mu / (1.0 - mu)).ln(),
        }
    }

    /// Derivative of the mean with respect to the linear predictor.
    pub fn mean_derivative(self, mu: f64) -> f64 {
        match self {
            Family::Gaussian => 1.0,
            Family::Poisson => mu,
            Family::Binomial => mu * (1.0 - mu),
        }
    }

    pub fn variance(self, mu: f64) -> f64 {
        match self {
            Family::Gaussian => 1.0,
            Family::Poisson => mu,
            Family::Binomial => mu * (1.0 - mu),
        }
    }

    /// IRLS weight `(dμ/dη)² / V(μ)`, floored away from zero.
    pub fn working_weight(self, mu: f64) -> f64 {
        let d = self.mean_derivative(mu);
        (d * d / self.variance(mu)).max(1e-12)
    }

    /// Unit deviance of one observation.
    pub fn unit_deviance(self, y: f64, mu: f64) -> f64 {
        let xlogy = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
        match self {
            Family::Gaussian => (y - mu).powi(2),
            Family::Poisson => 2.0 * (xlogy(y, mu) - (y - mu)),
            Family::Binomial => 2.0 * (xlogy(y, mu) + xlogy(1.0 - y, 1.0 - mu)),
        }
    }

    /// Starting mean for IRLS.
    pub(crate) fn initial_mean(self, y: f64, ybar: f64) -> f64 {
        match self {
            Family::Gaussian => y,
            Family::Poisson => 0.5 * (y + ybar.max(0.1)),
            Family::Binomial => 0.25 + 0.5 * y,
        }
    }

    pub(crate) fn validate_response(self, y: f64) -> bool {
        match self {
            Family::Gaussian => y.is_finite(),
            Family::Poisson => y >= 0.0 && y.fract() == 0.0 && y.is_finite(),
            Family::Binomial => y == 0.0 || y == 1.0,
        }
    }
}

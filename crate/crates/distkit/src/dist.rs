use numkit::special::{beta_inc, gamma_p, gamma_q, ln_beta, ln_choose, ln_factorial, ln_gamma};
use numkit::{norm_cdf, Matrix};

use crate::{DistError, RngStream, Value};

/// Cumulative mass at which unbounded discrete supports are truncated when
/// enumerated.
pub const TRUNCATION_MASS: f64 = 1e-12;

/// Tolerance on probability vectors summing to one.
const SIMPLEX_TOL: f64 = 1e-9;

/// A parametric probability law.
///
/// Counts are parameterized by the number of failures: `NegBinomial { r, p }`
/// has pmf `C(k+r−1, k)(1−p)^k p^r` and `Geometric { p }` has `p(1−p)^k`,
/// both on `k = 0, 1, …`.
#[derive(Clone, Debug, PartialEq)]
pub enum Dist {
    Normal { mean: f64, sd: f64 },
    MvNormalDiag { mean: Vec<f64>, var: Vec<f64> },
    /// Multivariate normal with covariance `chol · cholᵀ`.
    MvNormalChol { mean: Vec<f64>, chol: Matrix },
    Poisson { mean: f64 },
    Binomial { n: u64, p: f64 },
    Bernoulli { p: f64 },
    NegBinomial { r: f64, p: f64 },
    Gamma { shape: f64, rate: f64 },
    Exponential { rate: f64 },
    Beta { a: f64, b: f64 },
    Dirichlet { alpha: Vec<f64> },
    /// Values `0..probs.len()`.
    Categorical { probs: Vec<f64> },
    Multinomial { n: u64, probs: Vec<f64> },
    Geometric { p: f64 },
    BetaBinomial { n: u64, a: f64, b: f64 },
    /// Inclusive integer range `lo..=hi`.
    DiscreteUniform { lo: u64, hi: u64 },
    DirichletMultinomial { n: u64, alpha: Vec<f64> },
}

fn invalid(msg: impl Into<String>) -> DistError {
    DistError::InvalidParameters(msg.into())
}

fn check(cond: bool, msg: &str) -> Result<(), DistError> {
    if cond {
        Ok(())
    } else {
        Err(invalid(msg))
    }
}

fn is_prob(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn check_simplex(probs: &[f64]) -> Result<(), DistError> {
    check(!probs.is_empty(), "empty probability vector")?;
    check(probs.iter().all(|&p| is_prob(p)), "probabilities must lie in [0,1]")?;
    let s: f64 = probs.iter().sum();
    check((s - 1.0).abs() <= SIMPLEX_TOL, "probabilities must sum to 1")
}

impl Dist {
    pub fn validate(&self) -> Result<(), DistError> {
        use Dist::*;
        match self {
            Normal { mean, sd } => check(mean.is_finite() && positive(*sd), "normal needs finite mean, sd > 0"),
            MvNormalDiag { mean, var } => {
                check(mean.len() == var.len(), "mean/variance length mismatch")?;
                check(mean.iter().all(|m| m.is_finite()), "non-finite mean")?;
                check(var.iter().all(|&v| positive(v)), "variances must be > 0")
            }
            MvNormalChol { mean, chol } => {
                check(chol.is_square() && chol.rows() == mean.len(), "cholesky factor shape mismatch")?;
                check(mean.iter().all(|m| m.is_finite()), "non-finite mean")?;
                check(chol.diag().iter().all(|&d| d > 0.0), "cholesky factor needs positive diagonal")
            }
            Poisson { mean } => check(*mean >= 0.0 && mean.is_finite(), "poisson mean must be >= 0"),
            Binomial { p, .. } | Bernoulli { p } => check(is_prob(*p), "probability must lie in [0,1]"),
            NegBinomial { r, p } => check(positive(*r) && *p > 0.0 && *p <= 1.0, "negative binomial needs r > 0, p in (0,1]"),
            Gamma { shape, rate } => check(positive(*shape) && positive(*rate), "gamma needs shape, rate > 0"),
            Exponential { rate } => check(positive(*rate), "exponential needs rate > 0"),
            Beta { a, b } => check(positive(*a) && positive(*b), "beta needs a, b > 0"),
            Dirichlet { alpha } | DirichletMultinomial { alpha, .. } => {
                check(alpha.len() >= 2, "dirichlet needs at least two components")?;
                check(alpha.iter().all(|&a| positive(a)), "dirichlet concentrations must be > 0")
            }
            Categorical { probs } | Multinomial { probs, .. } => check_simplex(probs),
            Geometric { p } => check(*p > 0.0 && *p <= 1.0, "geometric needs p in (0,1]"),
            BetaBinomial { a, b, .. } => check(positive(*a) && positive(*b), "beta-binomial needs a, b > 0"),
            DiscreteUniform { lo, hi } => check(lo <= hi, "discrete uniform needs lo <= hi"),
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(
            self,
            Dist::Normal { .. }
                | Dist::MvNormalDiag { .. }
                | Dist::MvNormalChol { .. }
                | Dist::Gamma { .. }
                | Dist::Exponential { .. }
                | Dist::Beta { .. }
                | Dist::Dirichlet { .. }
        )
    }

    pub fn is_univariate(&self) -> bool {
        !matches!(
            self,
            Dist::MvNormalDiag { .. }
                | Dist::MvNormalChol { .. }
                | Dist::Dirichlet { .. }
                | Dist::Multinomial { .. }
                | Dist::DirichletMultinomial { .. }
        )
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<Value, DistError> {
        self.validate()?;
        Ok(self.sample_unchecked(rng))
    }

    fn sample_unchecked(&self, rng: &mut RngStream) -> Value {
        use Dist::*;
        match self {
            Normal { mean, sd } => Value::Real(mean + sd * rng.standard_normal()),
            MvNormalDiag { mean, var } => Value::Reals(
                mean.iter()
                    .zip(var)
                    .map(|(m, v)| m + v.sqrt() * rng.standard_normal())
                    .collect(),
            ),
            MvNormalChol { mean, chol } => {
                let z = rng.normals(mean.len());
                let lz = chol.matvec(&z);
                Value::Reals(mean.iter().zip(lz).map(|(m, e)| m + e).collect())
            }
            Poisson { mean } => Value::Int(poisson(*mean, rng)),
            Binomial { n, p } => Value::Int(binomial(*n, *p, rng)),
            Bernoulli { p } => Value::Int(u64::from(rng.uniform() < *p)),
            NegBinomial { r, p } => {
                if *p == 1.0 {
                    return Value::Int(0);
                }
                let lambda = gamma(*r, p / (1.0 - p), rng);
                Value::Int(poisson(lambda, rng))
            }
            Gamma { shape, rate } => Value::Real(gamma(*shape, *rate, rng)),
            Exponential { rate } => {
                Value::Real(rng.sample_with(rand_distr::Exp::new(*rate).expect("validated rate")))
            }
            Beta { a, b } => {
                Value::Real(rng.sample_with(rand_distr::Beta::new(*a, *b).expect("validated beta")))
            }
            Dirichlet { alpha } => Value::Reals(dirichlet(alpha, rng)),
            Categorical { probs } => Value::Int(categorical(probs, rng)),
            Multinomial { n, probs } => Value::Ints(multinomial(*n, probs, rng)),
            Geometric { p } => {
                if *p == 1.0 {
                    return Value::Int(0);
                }
                Value::Int(rng.sample_with(rand_distr::Geometric::new(*p).expect("validated p")))
            }
            BetaBinomial { n, a, b } => {
                let x: f64 = rng.sample_with(rand_distr::Beta::new(*a, *b).expect("validated beta"));
                Value::Int(binomial(*n, x, rng))
            }
            DiscreteUniform { lo, hi } => Value::Int(lo + rng.index((hi - lo + 1) as usize) as u64),
            DirichletMultinomial { n, alpha } => {
                let probs = dirichlet(alpha, rng);
                Value::Ints(multinomial(*n, &probs, rng))
            }
        }
    }

    /// Log pmf/pdf of `x`; `OutOfSupport` when `x` has zero probability.
    pub fn log_density(&self, x: &Value) -> Result<f64, DistError> {
        self.validate()?;
        let out = match (self, x) {
            (d, Value::Int(k)) if d.is_discrete() && d.is_univariate() => d.ln_pmf_unchecked(*k),
            (d, Value::Real(v)) if !d.is_discrete() && d.is_univariate() => d.ln_pdf_unchecked(*v),
            (d, Value::Ints(ks)) if d.is_discrete() => d.ln_pmf_vector(ks)?,
            (d, Value::Reals(vs)) if !d.is_discrete() => d.ln_pdf_vector(vs)?,
            _ => return Err(DistError::OutOfSupport(format!("{x:?} has the wrong shape for {self:?}"))),
        };
        if out == f64::NEG_INFINITY {
            return Err(DistError::OutOfSupport(format!("{x:?}")));
        }
        Ok(out)
    }

    /// Probability mass at `k` for univariate discrete laws; zero outside the
    /// support.
    pub fn pmf(&self, k: u64) -> f64 {
        self.ln_pmf_unchecked(k).exp()
    }

    fn ln_pmf_unchecked(&self, k: u64) -> f64 {
        use Dist::*;
        let kf = k as f64;
        match self {
            Poisson { mean } => {
                if *mean == 0.0 {
                    return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
                }
                kf * mean.ln() - mean - ln_factorial(k)
            }
            Binomial { n, p } => {
                if k > *n {
                    return f64::NEG_INFINITY;
                }
                ln_choose(*n, k) + xlogy(kf, *p) + xlogy((n - k) as f64, 1.0 - p)
            }
            Bernoulli { p } => match k {
                0 => (1.0 - p).ln(),
                1 => p.ln(),
                _ => f64::NEG_INFINITY,
            },
            NegBinomial { r, p } => {
                ln_gamma(kf + r) - ln_gamma(*r) - ln_factorial(k) + xlogy(kf, 1.0 - p) + r * p.ln()
            }
            Geometric { p } => p.ln() + xlogy(kf, 1.0 - p),
            Categorical { probs } => probs.get(k as usize).map_or(f64::NEG_INFINITY, |p| p.ln()),
            BetaBinomial { n, a, b } => {
                if k > *n {
                    return f64::NEG_INFINITY;
                }
                ln_choose(*n, k) + ln_beta(kf + a, (n - k) as f64 + b) - ln_beta(*a, *b)
            }
            DiscreteUniform { lo, hi } => {
                if k < *lo || k > *hi {
                    f64::NEG_INFINITY
                } else {
                    -((hi - lo + 1) as f64).ln()
                }
            }
            _ => f64::NEG_INFINITY,
        }
    }

    fn ln_pdf_unchecked(&self, x: f64) -> f64 {
        use Dist::*;
        match self {
            Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            Gamma { shape, rate } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * rate.ln() - ln_gamma(*shape) + (shape - 1.0) * x.ln() - rate * x
            }
            Exponential { rate } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                rate.ln() - rate * x
            }
            Beta { a, b } => {
                if x <= 0.0 || x >= 1.0 {
                    return f64::NEG_INFINITY;
                }
                (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(*a, *b)
            }
            _ => f64::NEG_INFINITY,
        }
    }

    fn ln_pmf_vector(&self, ks: &[u64]) -> Result<f64, DistError> {
        use Dist::*;
        match self {
            Multinomial { n, probs } => {
                check_len(ks.len(), probs.len())?;
                if ks.iter().sum::<u64>() != *n {
                    return Ok(f64::NEG_INFINITY);
                }
                let mut s = ln_factorial(*n);
                for (&k, &p) in ks.iter().zip(probs) {
                    s += xlogy(k as f64, p) - ln_factorial(k);
                }
                Ok(s)
            }
            DirichletMultinomial { n, alpha } => {
                check_len(ks.len(), alpha.len())?;
                if ks.iter().sum::<u64>() != *n {
                    return Ok(f64::NEG_INFINITY);
                }
                let total: f64 = alpha.iter().sum();
                let mut s = ln_gamma(total) + ln_factorial(*n) - ln_gamma(*n as f64 + total);
                for (&k, &a) in ks.iter().zip(alpha) {
                    s += ln_gamma(a + k as f64) - ln_gamma(a) - ln_factorial(k);
                }
                Ok(s)
            }
            _ => Err(DistError::OutOfSupport("vector value for a univariate law".into())),
        }
    }

    fn ln_pdf_vector(&self, xs: &[f64]) -> Result<f64, DistError> {
        use Dist::*;
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        match self {
            MvNormalDiag { mean, var } => {
                check_len(xs.len(), mean.len())?;
                Ok(xs
                    .iter()
                    .zip(mean)
                    .zip(var)
                    .map(|((x, m), v)| -0.5 * ((x - m).powi(2) / v + v.ln() + ln_2pi))
                    .sum())
            }
            MvNormalChol { mean, chol } => {
                check_len(xs.len(), mean.len())?;
                let n = mean.len();
                let mut z: Vec<f64> = xs.iter().zip(mean).map(|(x, m)| x - m).collect();
                for i in 0..n {
                    let s: f64 = (0..i).map(|k| chol[(i, k)] * z[k]).sum();
                    z[i] = (z[i] - s) / chol[(i, i)];
                }
                let log_det: f64 = chol.diag().iter().map(|d| d.ln()).sum();
                Ok(-0.5 * z.iter().map(|v| v * v).sum::<f64>() - log_det - 0.5 * n as f64 * ln_2pi)
            }
            Dirichlet { alpha } => {
                check_len(xs.len(), alpha.len())?;
                let s: f64 = xs.iter().sum();
                if xs.iter().any(|&x| x <= 0.0) || (s - 1.0).abs() > SIMPLEX_TOL {
                    return Ok(f64::NEG_INFINITY);
                }
                let total: f64 = alpha.iter().sum();
                let mut out = ln_gamma(total);
                for (&x, &a) in xs.iter().zip(alpha) {
                    out += (a - 1.0) * x.ln() - ln_gamma(a);
                }
                Ok(out)
            }
            _ => Err(DistError::OutOfSupport("vector value for a univariate law".into())),
        }
    }

    /// `P(X ≤ x)` for univariate laws.
    pub fn cdf(&self, x: f64) -> Result<f64, DistError> {
        self.validate()?;
        self.require_univariate()?;
        if self.is_discrete() {
            if x < 0.0 {
                return Ok(0.0);
            }
            return Ok(self.discrete_cdf(x.floor() as u64));
        }
        use Dist::*;
        Ok(match self {
            Normal { mean, sd } => norm_cdf((x - mean) / sd),
            Gamma { shape, rate } => gamma_p(*shape, rate * x.max(0.0)),
            Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Beta { a, b } => beta_inc(*a, *b, x),
            _ => unreachable!("continuous univariate families are exhausted above"),
        })
    }

    /// Left limit `P(X < x)`; equals `cdf` for continuous laws.
    pub fn cdf_left(&self, x: f64) -> Result<f64, DistError> {
        self.validate()?;
        self.require_univariate()?;
        if !self.is_discrete() {
            return self.cdf(x);
        }
        let below = x.ceil() - 1.0;
        if below < 0.0 {
            return Ok(0.0);
        }
        Ok(self.discrete_cdf(below as u64))
    }

    /// Survival `P(X > x)`, computed without cancellation where closed forms
    /// exist.
    pub fn sf(&self, x: f64) -> Result<f64, DistError> {
        self.validate()?;
        self.require_univariate()?;
        use Dist::*;
        match self {
            Poisson { mean } if x >= 0.0 && *mean > 0.0 => Ok(gamma_p(x.floor() + 1.0, *mean)),
            Normal { mean, sd } => Ok(numkit::norm_sf((x - mean) / sd)),
            _ => Ok(1.0 - self.cdf(x)?),
        }
    }

    fn discrete_cdf(&self, k: u64) -> f64 {
        use Dist::*;
        let kf = k as f64;
        match self {
            Poisson { mean } => {
                if *mean == 0.0 {
                    1.0
                } else {
                    gamma_q(kf + 1.0, *mean)
                }
            }
            Binomial { n, p } => {
                if k >= *n {
                    1.0
                } else {
                    beta_inc((n - k) as f64, kf + 1.0, 1.0 - p)
                }
            }
            NegBinomial { r, p } => beta_inc(*r, kf + 1.0, *p),
            Geometric { p } => -((kf + 1.0) * (-p).ln_1p()).exp_m1(),
            DiscreteUniform { lo, hi } => {
                if k < *lo {
                    0.0
                } else {
                    ((k.min(*hi) - lo + 1) as f64) / ((hi - lo + 1) as f64)
                }
            }
            _ => (0..=k).map(|j| self.pmf(j)).sum::<f64>().min(1.0),
        }
    }

    fn require_univariate(&self) -> Result<(), DistError> {
        if self.is_univariate() {
            Ok(())
        } else {
            Err(DistError::NotUnivariate)
        }
    }

    /// Enumerates `(k, pmf(k))` over the support of a univariate discrete law,
    /// truncating unbounded supports once the enumerated mass exceeds
    /// `1 − TRUNCATION_MASS`.
    pub fn enumerate_pmf(&self) -> Result<Vec<(u64, f64)>, DistError> {
        self.validate()?;
        if !(self.is_discrete() && self.is_univariate()) {
            return Err(DistError::NotUnivariate);
        }
        use Dist::*;
        let bounded = match self {
            Binomial { n, .. } | BetaBinomial { n, .. } => Some((0, *n)),
            Bernoulli { .. } => Some((0, 1)),
            Categorical { probs } => Some((0, probs.len() as u64 - 1)),
            DiscreteUniform { lo, hi } => Some((*lo, *hi)),
            _ => None,
        };
        if let Some((lo, hi)) = bounded {
            return Ok((lo..=hi).map(|k| (k, self.pmf(k))).collect());
        }
        let mut out = Vec::new();
        let mut mass = 0.0;
        let mut k = 0;
        // Stop once the tail is below the truncation mass, checked with the
        // closed-form survival function rather than 1 − (running sum).
        loop {
            let p = self.pmf(k);
            mass += p;
            out.push((k, p));
            if mass >= 1.0 - TRUNCATION_MASS && self.sf(k as f64)? < TRUNCATION_MASS {
                break;
            }
            k += 1;
        }
        Ok(out)
    }

    pub fn mean(&self) -> Result<Vec<f64>, DistError> {
        self.validate()?;
        use Dist::*;
        Ok(match self {
            Normal { mean, .. } => vec![*mean],
            MvNormalDiag { mean, .. } | MvNormalChol { mean, .. } => mean.clone(),
            Poisson { mean } => vec![*mean],
            Binomial { n, p } => vec![*n as f64 * p],
            Bernoulli { p } => vec![*p],
            NegBinomial { r, p } => vec![r * (1.0 - p) / p],
            Gamma { shape, rate } => vec![shape / rate],
            Exponential { rate } => vec![1.0 / rate],
            Beta { a, b } => vec![a / (a + b)],
            Dirichlet { alpha } => {
                let s: f64 = alpha.iter().sum();
                alpha.iter().map(|a| a / s).collect()
            }
            Categorical { probs } => vec![probs.iter().enumerate().map(|(i, p)| i as f64 * p).sum()],
            Multinomial { n, probs } => probs.iter().map(|p| *n as f64 * p).collect(),
            Geometric { p } => vec![(1.0 - p) / p],
            BetaBinomial { n, a, b } => vec![*n as f64 * a / (a + b)],
            DiscreteUniform { lo, hi } => vec![(*lo as f64 + *hi as f64) / 2.0],
            DirichletMultinomial { n, alpha } => {
                let s: f64 = alpha.iter().sum();
                alpha.iter().map(|a| *n as f64 * a / s).collect()
            }
        })
    }

    /// Marginal variances (diagonal of the covariance).
    pub fn variance(&self) -> Result<Vec<f64>, DistError> {
        self.validate()?;
        use Dist::*;
        Ok(match self {
            Normal { sd, .. } => vec![sd * sd],
            MvNormalDiag { var, .. } => var.clone(),
            MvNormalChol { chol, .. } => (0..chol.rows())
                .map(|i| chol.row(i).iter().map(|v| v * v).sum())
                .collect(),
            Poisson { mean } => vec![*mean],
            Binomial { n, p } => vec![*n as f64 * p * (1.0 - p)],
            Bernoulli { p } => vec![p * (1.0 - p)],
            NegBinomial { r, p } => vec![r * (1.0 - p) / (p * p)],
            Gamma { shape, rate } => vec![shape / (rate * rate)],
            Exponential { rate } => vec![1.0 / (rate * rate)],
            Beta { a, b } => vec![a * b / ((a + b).powi(2) * (a + b + 1.0))],
            Dirichlet { alpha } => {
                let s: f64 = alpha.iter().sum();
                alpha.iter().map(|a| a * (s - a) / (s * s * (s + 1.0))).collect()
            }
            Categorical { probs } => {
                let m: f64 = probs.iter().enumerate().map(|(i, p)| i as f64 * p).sum();
                vec![probs.iter().enumerate().map(|(i, p)| (i as f64 - m).powi(2) * p).sum()]
            }
            Multinomial { n, probs } => probs.iter().map(|p| *n as f64 * p * (1.0 - p)).collect(),
            Geometric { p } => vec![(1.0 - p) / (p * p)],
            BetaBinomial { n, a, b } => {
                let nf = *n as f64;
                let s = a + b;
                vec![nf * a * b * (s + nf) / (s * s * (s + 1.0))]
            }
            DiscreteUniform { lo, hi } => {
                let w = (hi - lo + 1) as f64;
                vec![(w * w - 1.0) / 12.0]
            }
            DirichletMultinomial { n, alpha } => {
                let nf = *n as f64;
                let s: f64 = alpha.iter().sum();
                alpha
                    .iter()
                    .map(|a| {
                        let q = a / s;
                        nf * q * (1.0 - q) * (nf + s) / (1.0 + s)
                    })
                    .collect()
            }
        })
    }
}

fn check_len(found: usize, expected: usize) -> Result<(), DistError> {
    if found == expected {
        Ok(())
    } else {
        Err(DistError::OutOfSupport(format!(
            "expected {expected} components, found {found}"
        )))
    }
}

/// `x·ln(y)` with the convention `0·ln 0 = 0`.
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

fn poisson(mean: f64, rng: &mut RngStream) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = rng.sample_with(rand_distr::Poisson::new(mean).expect("finite positive mean"));
    draw as u64
}

fn binomial(n: u64, p: f64, rng: &mut RngStream) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    rng.sample_with(rand_distr::Binomial::new(n, p).expect("validated binomial"))
}

/// Marsaglia–Tsang gamma draw (with the shape < 1 boost) via `rand_distr`.
fn gamma(shape: f64, rate: f64, rng: &mut RngStream) -> f64 {
    rng.sample_with(rand_distr::Gamma::new(shape, 1.0 / rate).expect("validated gamma"))
}

fn dirichlet(alpha: &[f64], rng: &mut RngStream) -> Vec<f64> {
    let g: Vec<f64> = alpha.iter().map(|&a| gamma(a, 1.0, rng)).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

fn categorical(probs: &[f64], rng: &mut RngStream) -> u64 {
    let u = rng.uniform();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u64;
        }
    }
    // Rounding left u above the accumulated mass: fall back to the last
    // category carrying positive probability.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u64
}

fn multinomial(n: u64, probs: &[f64], rng: &mut RngStream) -> Vec<u64> {
    let mut out = vec![0; probs.len()];
    let mut left = n;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = binomial(left, q, rng);
        out[i] = k;
        left -= k;
        mass -= p;
    }
    out
}

//! Conjugate-prior reversal.
//!
//! The observation `X` has density `H(η)·exp{ηᵀS(x)}` and auxiliary draws
//! follow `p(z | x) = h(z)·exp{(T(z) + θ₃)ᵀS(x)}`. Drawing `B` such `z`'s and
//! releasing them as `f` keeps `X | f` in the same family with natural
//! parameter `η + Σ T(zᵢ) + B·θ₃`.

use std::fmt;

use distkit::{Dist, RngStream, Value};
use numkit::special::{ln_beta, ln_choose, ln_factorial, ln_gamma};

use crate::FissionError;

/// An exponential family for `X` paired with a conjugate likelihood for the
/// auxiliary draws.
pub trait ExpFamSpec: fmt::Debug + Send + Sync {
    /// Stable name used in serialized rule records.
    fn tag(&self) -> &'static str;

    /// Tuning fields for serialized rule records.
    fn params(&self) -> Vec<(&'static str, String)>;

    /// Rejects tuning values outside their domain.
    fn validate(&self) -> Result<(), FissionError>;

    /// Number of components in one auxiliary draw.
    fn draw_len(&self) -> usize {
        1
    }

    /// Whether a single draw lies in the support of `p(z | x)`.
    fn draw_in_support(&self, z: &[u64]) -> bool {
        z.len() == self.draw_len()
    }

    /// Rejects natural parameters outside the family's domain.
    fn check_natural(&self, eta: &[f64]) -> Result<(), FissionError>;

    /// `ln H(η)`.
    fn log_normalizer(&self, eta: &[f64]) -> f64;

    /// `S(x)`; errors when `x` is outside the support.
    fn suff_stat(&self, x: &Value) -> Result<Vec<f64>, FissionError>;

    /// `T(z)` for a single draw.
    fn lik_stat(&self, z: &[u64]) -> Vec<f64>;

    /// `θ₃`.
    fn shift(&self) -> Vec<f64>;

    /// `ln h(z)` for a single draw.
    fn log_base(&self, z: &[u64]) -> f64;

    /// One draw from `p(z | x)`.
    fn sample_z(&self, x: &Value, rng: &mut RngStream) -> Result<Vec<u64>, FissionError>;

    /// The law of `X` with natural parameter `η`.
    fn law(&self, eta: &[f64]) -> Result<Dist, FissionError>;

    /// `ln p(x | η)`.
    fn log_density(&self, eta: &[f64], x: &Value) -> Result<f64, FissionError> {
        self.check_natural(eta)?;
        let s = self.suff_stat(x)?;
        Ok(self.log_normalizer(eta) + eta.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>())
    }
}

/// Gamma prior on a Poisson rate: `X ~ Gamma(α, β)`, `z | x ~ Poi(scale · x)`.
///
/// Natural parameter `η = (α − 1, β)` with `S(x) = (ln x, −x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonRate {
    pub scale: f64,
}

impl PoissonRate {
    pub fn natural(shape: f64, rate: f64) -> Vec<f64> {
        vec![shape - 1.0, rate]
    }
}

impl ExpFamSpec for PoissonRate {
    fn tag(&self) -> &'static str {
        "poisson_rate"
    }

    fn params(&self) -> Vec<(&'static str, String)> {
        vec![("scale", self.scale.to_string())]
    }

    fn validate(&self) -> Result<(), FissionError> {
        if self.scale > 0.0 && self.scale.is_finite() {
            Ok(())
        } else {
            Err(FissionError::InvalidSpec("Poisson scale must be positive".into()))
        }
    }

    fn check_natural(&self, eta: &[f64]) -> Result<(), FissionError> {
        if eta.len() == 2 && eta[0] > -1.0 && eta[1] > 0.0 {
            Ok(())
        } else {
            Err(FissionError::InvalidParameter(format!("gamma natural parameter {eta:?}")))
        }
    }

    fn log_normalizer(&self, eta: &[f64]) -> f64 {
        let (shape, rate) = (eta[0] + 1.0, eta[1]);
        shape * rate.ln() - ln_gamma(shape)
    }

    fn suff_stat(&self, x: &Value) -> Result<Vec<f64>, FissionError> {
        match x {
            Value::Real(v) if *v > 0.0 && v.is_finite() => Ok(vec![v.ln(), -v]),
            _ => Err(FissionError::OutOfSupport(format!("{x:?} is not a positive real"))),
        }
    }

    fn lik_stat(&self, z: &[u64]) -> Vec<f64> {
        vec![z[0] as f64, 0.0]
    }

    fn shift(&self) -> Vec<f64> {
        vec![0.0, self.scale]
    }

    fn log_base(&self, z: &[u64]) -> f64 {
        z[0] as f64 * self.scale.ln() - ln_factorial(z[0])
    }

    fn sample_z(&self, x: &Value, rng: &mut RngStream) -> Result<Vec<u64>, FissionError> {
        self.suff_stat(x)?;
        let mean = self.scale * x.as_f64().unwrap_or_default();
        let z = Dist::Poisson { mean }.sample(rng)?;
        Ok(vec![z.as_u64().unwrap_or_default()])
    }

    fn law(&self, eta: &[f64]) -> Result<Dist, FissionError> {
        self.check_natural(eta)?;
        Ok(Dist::Gamma {
            shape: eta[0] + 1.0,
            rate: eta[1],
        })
    }
}

/// Beta prior on a binomial success probability: `X ~ Beta(a, b)` and
/// `z | x ~ Bin(trials, x)`, or `Bin(trials, 1 − x)` when mirrored.
///
/// Natural parameter `η = (a − 1, b − 1)` with `S(x) = (ln x, ln(1 − x))`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinomialProb {
    pub trials: u64,
    pub mirrored: bool,
}

impl BinomialProb {
    pub fn natural(a: f64, b: f64) -> Vec<f64> {
        vec![a - 1.0, b - 1.0]
    }
}

impl ExpFamSpec for BinomialProb {
    fn tag(&self) -> &'static str {
        "binomial_prob"
    }

    fn params(&self) -> Vec<(&'static str, String)> {
        vec![
            ("trials", self.trials.to_string()),
            ("mirrored", self.mirrored.to_string()),
        ]
    }

    fn validate(&self) -> Result<(), FissionError> {
        if self.trials >= 1 {
            Ok(())
        } else {
            Err(FissionError::InvalidSpec("binomial trials must be >= 1".into()))
        }
    }

    fn check_natural(&self, eta: &[f64]) -> Result<(), FissionError> {
        if eta.len() == 2 && eta[0] > -1.0 && eta[1] > -1.0 {
            Ok(())
        } else {
            Err(FissionError::InvalidParameter(format!("beta natural parameter {eta:?}")))
        }
    }

    fn log_normalizer(&self, eta: &[f64]) -> f64 {
        -ln_beta(eta[0] + 1.0, eta[1] + 1.0)
    }

    fn suff_stat(&self, x: &Value) -> Result<Vec<f64>, FissionError> {
        match x {
            Value::Real(v) if *v > 0.0 && *v < 1.0 => Ok(vec![v.ln(), (-v).ln_1p()]),
            _ => Err(FissionError::OutOfSupport(format!("{x:?} is not in (0,1)"))),
        }
    }

    fn draw_in_support(&self, z: &[u64]) -> bool {
        z.len() == 1 && z[0] <= self.trials
    }

    fn lik_stat(&self, z: &[u64]) -> Vec<f64> {
        let (hit, miss) = (z[0] as f64, (self.trials - z[0]) as f64);
        if self.mirrored {
            vec![miss, hit]
        } else {
            vec![hit, miss]
        }
    }

    fn shift(&self) -> Vec<f64> {
        vec![0.0, 0.0]
    }

    fn log_base(&self, z: &[u64]) -> f64 {
        ln_choose(self.trials, z[0])
    }

    fn sample_z(&self, x: &Value, rng: &mut RngStream) -> Result<Vec<u64>, FissionError> {
        self.suff_stat(x)?;
        let v = x.as_f64().unwrap_or_default();
        let p = if self.mirrored { 1.0 - v } else { v };
        let z = Dist::Binomial { n: self.trials, p }.sample(rng)?;
        Ok(vec![z.as_u64().unwrap_or_default()])
    }

    fn law(&self, eta: &[f64]) -> Result<Dist, FissionError> {
        self.check_natural(eta)?;
        Ok(Dist::Beta {
            a: eta[0] + 1.0,
            b: eta[1] + 1.0,
        })
    }
}

/// Dirichlet prior on multinomial probabilities: `X ~ Dir(α)`,
/// `z | x ~ Multinom(trials, x)`.
///
/// Natural parameter `η = α − 1` with `S(x) = ln x` componentwise.
#[derive(Clone, Debug, PartialEq)]
pub struct MultinomialProbs {
    pub trials: u64,
    pub dim: usize,
}

impl MultinomialProbs {
    pub fn natural(alpha: &[f64]) -> Vec<f64> {
        alpha.iter().map(|a| a - 1.0).collect()
    }
}

impl ExpFamSpec for MultinomialProbs {
    fn tag(&self) -> &'static str {
        "multinomial_probs"
    }

    fn params(&self) -> Vec<(&'static str, String)> {
        vec![("trials", self.trials.to_string()), ("dim", self.dim.to_string())]
    }

    fn validate(&self) -> Result<(), FissionError> {
        if self.trials >= 1 && self.dim >= 2 {
            Ok(())
        } else {
            Err(FissionError::InvalidSpec(
                "multinomial needs >= 1 trial and >= 2 categories".into(),
            ))
        }
    }

    fn draw_len(&self) -> usize {
        self.dim
    }

    fn draw_in_support(&self, z: &[u64]) -> bool {
        z.len() == self.dim && z.iter().sum::<u64>() == self.trials
    }

    fn check_natural(&self, eta: &[f64]) -> Result<(), FissionError> {
        if eta.len() == self.dim && eta.iter().all(|&e| e > -1.0) {
            Ok(())
        } else {
            Err(FissionError::InvalidParameter(format!("dirichlet natural parameter {eta:?}")))
        }
    }

    fn log_normalizer(&self, eta: &[f64]) -> f64 {
        let total: f64 = eta.iter().map(|e| e + 1.0).sum();
        ln_gamma(total) - eta.iter().map(|e| ln_gamma(e + 1.0)).sum::<f64>()
    }

    fn suff_stat(&self, x: &Value) -> Result<Vec<f64>, FissionError> {
        match x {
            Value::Reals(v)
                if v.len() == self.dim
                    && v.iter().all(|&p| p > 0.0)
                    && (v.iter().sum::<f64>() - 1.0).abs() < 1e-9 =>
            {
                Ok(v.iter().map(|p| p.ln()).collect())
            }
            _ => Err(FissionError::OutOfSupport(format!("{x:?} is not on the open simplex"))),
        }
    }

    fn lik_stat(&self, z: &[u64]) -> Vec<f64> {
        z.iter().map(|&k| k as f64).collect()
    }

    fn shift(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn log_base(&self, z: &[u64]) -> f64 {
        ln_factorial(self.trials) - z.iter().map(|&k| ln_factorial(k)).sum::<f64>()
    }

    fn sample_z(&self, x: &Value, rng: &mut RngStream) -> Result<Vec<u64>, FissionError> {
        self.suff_stat(x)?;
        let probs = x.to_reals();
        let z = Dist::Multinomial {
            n: self.trials,
            probs,
        }
        .sample(rng)?;
        Ok(z.to_counts().unwrap_or_default())
    }

    fn law(&self, eta: &[f64]) -> Result<Dist, FissionError> {
        self.check_natural(eta)?;
        Ok(Dist::Dirichlet {
            alpha: eta.iter().map(|e| e + 1.0).collect(),
        })
    }
}

/// Splits a released `f` into its `draws` auxiliary draws.
pub(crate) fn split_draws(
    spec: &dyn ExpFamSpec,
    draws: usize,
    f: &Value,
) -> Result<Vec<Vec<u64>>, FissionError> {
    let counts = f
        .to_counts()
        .ok_or_else(|| FissionError::OutOfSupport(format!("{f:?} is not a count vector")))?;
    let len = spec.draw_len();
    if counts.len() != len * draws {
        return Err(FissionError::OutOfSupport(format!(
            "expected {} counts, found {}",
            len * draws,
            counts.len()
        )));
    }
    let draws: Vec<Vec<u64>> = counts.chunks(len).map(<[u64]>::to_vec).collect();
    match draws.iter().find(|z| !spec.draw_in_support(z)) {
        Some(z) => Err(FissionError::OutOfSupport(format!("draw {z:?} is outside the support"))),
        None => Ok(draws),
    }
}

/// Natural parameter of `X | f`: `η + Σ T(zᵢ) + B·θ₃`.
pub fn posterior_natural(spec: &dyn ExpFamSpec, eta: &[f64], draws: &[Vec<u64>]) -> Vec<f64> {
    let mut out = eta.to_vec();
    let shift = spec.shift();
    for z in draws {
        for ((o, t), s) in out.iter_mut().zip(spec.lik_stat(z)).zip(&shift) {
            *o += t + s;
        }
    }
    out
}

/// `ln p(f | η) = Σ ln h(zᵢ) + ln H(η) − ln H(η')`.
pub fn log_marginal(spec: &dyn ExpFamSpec, eta: &[f64], draws: &[Vec<u64>]) -> Result<f64, FissionError> {
    spec.check_natural(eta)?;
    let post = posterior_natural(spec, eta, draws);
    let base: f64 = draws.iter().map(|z| spec.log_base(z)).sum();
    Ok(base + spec.log_normalizer(eta) - spec.log_normalizer(&post))
}

/// Releases `B` auxiliary draws as `f` and keeps `g = x`.
pub fn conjugate_reversal(
    spec: &dyn ExpFamSpec,
    draws: usize,
    x: &Value,
    rng: &mut RngStream,
) -> Result<crate::FissionOutput, FissionError> {
    spec.validate()?;
    if draws == 0 {
        return Err(FissionError::InvalidTuning("number of draws must be >= 1".into()));
    }
    let mut counts = Vec::with_capacity(draws * spec.draw_len());
    for _ in 0..draws {
        counts.extend(spec.sample_z(x, rng)?);
    }
    let f = if counts.len() == 1 {
        Value::Int(counts[0])
    } else {
        Value::Ints(counts)
    };
    Ok(crate::FissionOutput {
        f: f.clone(),
        g: x.clone(),
        aux: f,
    })
}

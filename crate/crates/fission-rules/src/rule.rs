use std::sync::Arc;

use distkit::{Dist, RngStream, Value};

use crate::conjugate::{self, ExpFamSpec};
use crate::{Covariance, FissionError};

/// How conjugate-prior rules generate their Poisson auxiliary draws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CpMode {
    /// `B` i.i.d. draws `Zᵢ ~ Poi(X)`, released as a count vector.
    Draws(u64),
    /// A single draw `Z ~ Poi(τ·X)`, released as a count.
    Scale(f64),
}

/// Which tail of `X ∈ (0,1)` the binomial auxiliary draw counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaSide {
    /// `X ~ Beta(θ, 1)` and `Z ~ Bin(B, X)`.
    Left,
    /// `X ~ Beta(1, θ)` and `Z ~ Bin(B, 1 − X)`.
    Right,
}

/// A named decomposition together with its tuning parameters.
///
/// Model parameters `θ` are not part of the rule; they are passed to
/// [`crate::marginal_of_f`] and [`crate::ConditionalFamily::law`] as a slice
/// whose layout depends on the variant:
///
/// | variant | `θ` |
/// |---|---|
/// | Gaussian rules | mean vector `μ` |
/// | `PoissonP1`, `PoissonP2` | `[μ]` |
/// | `BernoulliP2`, `BinomialP2`, `NegBinomialP2` | `[success probability]` |
/// | `GammaCp` | `[shape α, rate β]` |
/// | `ExponentialCp` | `[rate]` |
/// | `BetaCp` | `[θ]` for `Beta(θ,1)` or `Beta(1,θ)` |
/// | `DirichletCp` | concentration vector |
/// | `CategoricalP2` | category probabilities |
/// | `ConjugateReversal` | natural parameter `η` of the spec |
#[derive(Clone, Debug)]
pub enum FissionRule {
    /// `f = X + τZ`, `g = X − Z/τ` with `Z ~ N(0, Σ)`; `f` and `g` independent.
    GaussP1 { tau: f64, cov: Covariance },
    /// `f = Z ~ N(X, τΣ)`, `g = X`.
    GaussP2Cp { tau: f64, cov: Covariance },
    /// `f = X − Z`, `g = X + Z` with `Z ~ N(0, Σ₀)`.
    GaussP2General { cov: Covariance, noise: Covariance },
    /// `f = Z ~ Bin(X, p)`, `g = X − Z`; independent Poisson parts.
    PoissonP1 { p: f64 },
    /// `f = X + Z` with `Z ~ Poi(p)`, `g = X`.
    PoissonP2 { p: f64 },
    /// `f = X xor Z` with `Z ~ Ber(p)`, `g = X`.
    BernoulliP2 { p: f64 },
    /// `X ~ Bin(n, θ)`, `f = Z ~ Bin(X, p)`, `g = X − Z`.
    BinomialP2 { n: u64, p: f64 },
    /// `X ~ NB(r, θ)`, `f = Z ~ Bin(X, p)`, `g = X − Z`.
    NegBinomialP2 { r: f64, p: f64 },
    /// `X ~ Gamma(α, β)` with Poisson auxiliary draws, `g = X`.
    GammaCp { mode: CpMode },
    /// `X ~ Exp(θ)` with Poisson auxiliary draws, `g = X`.
    ExponentialCp { mode: CpMode },
    /// Beta observation with a binomial auxiliary draw of `trials` trials.
    BetaCp { trials: u64, side: BetaSide },
    /// `X ~ Dir(θ)`, `f = Z ~ Multinom(trials, X)`, `g = X`.
    DirichletCp { trials: u64 },
    /// `X ~ Cat(θ)`; with probability `p` the category is replaced by a
    /// draw from `weights`, giving `f`; `g = X`.
    CategoricalP2 { p: f64, weights: Vec<f64> },
    /// Generic construction from an exponential family and a conjugate
    /// likelihood, releasing `draws` auxiliary draws.
    ConjugateReversal { spec: Arc<dyn ExpFamSpec>, draws: usize },
}

/// Result of applying a rule to one observation.
#[derive(Clone, Debug, PartialEq)]
pub struct FissionOutput {
    pub f: Value,
    pub g: Value,
    /// The realized auxiliary randomness.
    pub aux: Value,
}

fn open_unit(p: f64) -> bool {
    p > 0.0 && p < 1.0
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn tuning(ok: bool, msg: &str) -> Result<(), FissionError> {
    if ok {
        Ok(())
    } else {
        Err(FissionError::InvalidTuning(msg.into()))
    }
}

pub(crate) fn support(msg: impl Into<String>) -> FissionError {
    FissionError::OutOfSupport(msg.into())
}

impl FissionRule {
    /// Gaussian P1 rule for `N(μ, σ²I)` observations.
    pub fn gauss_p1(tau: f64, sigma2: f64) -> Self {
        FissionRule::GaussP1 {
            tau,
            cov: Covariance::Iso(sigma2),
        }
    }

    /// Categorical rule with uniform replacement weights over `d` categories.
    pub fn categorical_uniform(p: f64, d: usize) -> Self {
        FissionRule::CategoricalP2 {
            p,
            weights: vec![1.0 / d as f64; d],
        }
    }

    pub fn validate(&self) -> Result<(), FissionError> {
        match self {
            FissionRule::GaussP1 { tau, cov } | FissionRule::GaussP2Cp { tau, cov } => {
                tuning(positive(*tau), "tau must be positive")?;
                cov.validate()
            }
            FissionRule::GaussP2General { cov, noise } => {
                cov.validate()?;
                noise.validate()?;
                match (cov.fixed_dim(), noise.fixed_dim()) {
                    (Some(a), Some(b)) if a != b => Err(FissionError::InvalidTuning(format!(
                        "noise covariance has dimension {b}, observation covariance {a}"
                    ))),
                    _ => Ok(()),
                }
            }
            FissionRule::PoissonP1 { p }
            | FissionRule::PoissonP2 { p }
            | FissionRule::BernoulliP2 { p } => tuning(open_unit(*p), "p must lie in (0,1)"),
            FissionRule::BinomialP2 { p, .. } => tuning(open_unit(*p), "p must lie in (0,1)"),
            FissionRule::NegBinomialP2 { r, p } => {
                tuning(positive(*r), "r must be positive")?;
                tuning(open_unit(*p), "p must lie in (0,1)")
            }
            FissionRule::GammaCp { mode } | FissionRule::ExponentialCp { mode } => match mode {
                CpMode::Draws(b) => tuning(*b >= 1, "number of draws must be >= 1"),
                CpMode::Scale(t) => tuning(positive(*t), "tau must be positive"),
            },
            FissionRule::BetaCp { trials, .. } | FissionRule::DirichletCp { trials } => {
                tuning(*trials >= 1, "number of trials must be >= 1")
            }
            FissionRule::CategoricalP2 { p, weights } => {
                tuning(open_unit(*p), "p must lie in (0,1)")?;
                Dist::Categorical {
                    probs: weights.clone(),
                }
                .validate()
                .map_err(|e| FissionError::InvalidTuning(format!("weights: {e}")))?;
                tuning(weights.len() >= 2, "at least two categories are required")
            }
            FissionRule::ConjugateReversal { spec, draws } => {
                tuning(*draws >= 1, "number of draws must be >= 1")?;
                spec.validate()
            }
        }
    }

    /// True when the rule's observation is a count or category.
    pub fn is_discrete_observation(&self) -> bool {
        matches!(
            self,
            FissionRule::PoissonP1 { .. }
                | FissionRule::PoissonP2 { .. }
                | FissionRule::BernoulliP2 { .. }
                | FissionRule::BinomialP2 { .. }
                | FissionRule::NegBinomialP2 { .. }
                | FissionRule::CategoricalP2 { .. }
        )
    }
}

/// Splits `x` into `(f, g)` using fresh randomness from `rng`.
pub fn fission(x: &Value, rule: &FissionRule, rng: &mut RngStream) -> Result<FissionOutput, FissionError> {
    rule.validate()?;
    match rule {
        FissionRule::GaussP1 { tau, cov } => {
            let xs = reals(x)?;
            cov.check_dim(xs.len())?;
            let z = cov.sample_noise(xs.len(), 1.0, rng);
            let f = xs.iter().zip(&z).map(|(x, z)| x + tau * z).collect();
            let g = xs.iter().zip(&z).map(|(x, z)| x - z / tau).collect();
            Ok(FissionOutput {
                f: shaped(x, f),
                g: shaped(x, g),
                aux: shaped(x, z),
            })
        }
        FissionRule::GaussP2Cp { tau, cov } => {
            let xs = reals(x)?;
            cov.check_dim(xs.len())?;
            let noise = cov.sample_noise(xs.len(), *tau, rng);
            let f: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| x + e).collect();
            Ok(FissionOutput {
                f: shaped(x, f.clone()),
                g: x.clone(),
                aux: shaped(x, f),
            })
        }
        FissionRule::GaussP2General { cov, noise } => {
            let xs = reals(x)?;
            cov.check_dim(xs.len())?;
            noise.check_dim(xs.len())?;
            let z = noise.sample_noise(xs.len(), 1.0, rng);
            let f = xs.iter().zip(&z).map(|(x, z)| x - z).collect();
            let g = xs.iter().zip(&z).map(|(x, z)| x + z).collect();
            Ok(FissionOutput {
                f: shaped(x, f),
                g: shaped(x, g),
                aux: shaped(x, z),
            })
        }
        FissionRule::PoissonP1 { p } | FissionRule::NegBinomialP2 { p, .. } => {
            let k = count(x)?;
            thin(k, *p, rng)
        }
        FissionRule::BinomialP2 { n, p } => {
            let k = count(x)?;
            if k > *n {
                return Err(support(format!("{k} exceeds the {n} binomial trials")));
            }
            thin(k, *p, rng)
        }
        FissionRule::PoissonP2 { p } => {
            let k = count(x)?;
            let z = draw_count(&Dist::Poisson { mean: *p }, rng)?;
            Ok(FissionOutput {
                f: Value::Int(k + z),
                g: Value::Int(k),
                aux: Value::Int(z),
            })
        }
        FissionRule::BernoulliP2 { p } => {
            let k = binary(x)?;
            let z = draw_count(&Dist::Bernoulli { p: *p }, rng)?;
            Ok(FissionOutput {
                f: Value::Int(k ^ z),
                g: Value::Int(k),
                aux: Value::Int(z),
            })
        }
        FissionRule::GammaCp { mode } | FissionRule::ExponentialCp { mode } => {
            let v = positive_real(x)?;
            let f = match *mode {
                CpMode::Draws(b) => {
                    let law = Dist::Poisson { mean: v };
                    let z = (0..b).map(|_| draw_count(&law, rng)).collect::<Result<Vec<_>, _>>()?;
                    Value::Ints(z)
                }
                CpMode::Scale(tau) => Value::Int(draw_count(&Dist::Poisson { mean: tau * v }, rng)?),
            };
            Ok(FissionOutput {
                f: f.clone(),
                g: x.clone(),
                aux: f,
            })
        }
        FissionRule::BetaCp { trials, side } => {
            let v = unit_real(x)?;
            let p = match side {
                BetaSide::Left => v,
                BetaSide::Right => 1.0 - v,
            };
            let z = draw_count(&Dist::Binomial { n: *trials, p }, rng)?;
            Ok(FissionOutput {
                f: Value::Int(z),
                g: x.clone(),
                aux: Value::Int(z),
            })
        }
        FissionRule::DirichletCp { trials } => {
            let probs = simplex_point(x)?;
            let z = Dist::Multinomial { n: *trials, probs }.sample(rng)?;
            Ok(FissionOutput {
                f: z.clone(),
                g: x.clone(),
                aux: z,
            })
        }
        FissionRule::CategoricalP2 { p, weights } => {
            let k = category(x, weights.len())?;
            let z = draw_count(&Dist::Bernoulli { p: *p }, rng)?;
            let d = draw_count(
                &Dist::Categorical {
                    probs: weights.clone(),
                },
                rng,
            )?;
            let f = if z == 1 { d } else { k };
            Ok(FissionOutput {
                f: Value::Int(f),
                g: Value::Int(k),
                aux: Value::Ints(vec![z, d]),
            })
        }
        FissionRule::ConjugateReversal { spec, draws } => {
            conjugate::conjugate_reversal(spec.as_ref(), *draws, x, rng)
        }
    }
}

/// Recovers `X` from its two parts.
pub fn reconstruct(f: &Value, g: &Value, rule: &FissionRule) -> Result<Value, FissionError> {
    rule.validate()?;
    let inconsistent = |msg: String| FissionError::InconsistentParts(msg);
    match rule {
        FissionRule::GaussP1 { tau, .. } => {
            let (fs, gs) = paired_reals(f, g)?;
            let t2 = tau * tau;
            let x = fs.iter().zip(&gs).map(|(f, g)| (f + t2 * g) / (1.0 + t2)).collect();
            Ok(shaped(g, x))
        }
        FissionRule::GaussP2Cp { .. } => {
            paired_reals(f, g)?;
            Ok(g.clone())
        }
        FissionRule::GaussP2General { .. } => {
            let (fs, gs) = paired_reals(f, g)?;
            Ok(shaped(g, fs.iter().zip(&gs).map(|(f, g)| 0.5 * (f + g)).collect()))
        }
        FissionRule::PoissonP1 { .. } | FissionRule::NegBinomialP2 { .. } => {
            let (a, b) = (part_count(f)?, part_count(g)?);
            a.checked_add(b)
                .map(Value::Int)
                .ok_or_else(|| inconsistent("sum overflows".into()))
        }
        FissionRule::BinomialP2 { n, .. } => {
            let (a, b) = (part_count(f)?, part_count(g)?);
            match a.checked_add(b) {
                Some(x) if x <= *n => Ok(Value::Int(x)),
                _ => Err(inconsistent(format!("{a} + {b} exceeds {n} trials"))),
            }
        }
        FissionRule::PoissonP2 { .. } => {
            let (a, b) = (part_count(f)?, part_count(g)?);
            if b <= a {
                Ok(Value::Int(b))
            } else {
                Err(inconsistent(format!("g = {b} exceeds f = {a}")))
            }
        }
        FissionRule::BernoulliP2 { .. } => {
            let (a, b) = (part_count(f)?, part_count(g)?);
            if a <= 1 && b <= 1 {
                Ok(Value::Int(b))
            } else {
                Err(inconsistent(format!("parts ({a}, {b}) are not binary")))
            }
        }
        FissionRule::CategoricalP2 { weights, .. } => {
            let d = weights.len() as u64;
            let (a, b) = (part_count(f)?, part_count(g)?);
            if a >= d || b >= d || (a != b && weights[a as usize] == 0.0) {
                Err(inconsistent(format!("parts ({a}, {b}) are not attainable")))
            } else {
                Ok(Value::Int(b))
            }
        }
        FissionRule::GammaCp { mode } | FissionRule::ExponentialCp { mode } => {
            positive_real(g).map_err(|e| inconsistent(e.to_string()))?;
            cp_counts(f, *mode).map_err(|e| inconsistent(e.to_string()))?;
            Ok(g.clone())
        }
        FissionRule::BetaCp { trials, .. } => {
            unit_real(g).map_err(|e| inconsistent(e.to_string()))?;
            match f {
                Value::Int(k) if k <= trials => Ok(g.clone()),
                _ => Err(inconsistent(format!("{f:?} is not a count in 0..={trials}"))),
            }
        }
        FissionRule::DirichletCp { trials } => {
            let probs = simplex_point(g).map_err(|e| inconsistent(e.to_string()))?;
            match f {
                Value::Ints(z) if z.len() == probs.len() && z.iter().sum::<u64>() == *trials => Ok(g.clone()),
                _ => Err(inconsistent(format!("{f:?} is not a multinomial count vector"))),
            }
        }
        FissionRule::ConjugateReversal { spec, draws } => {
            spec.suff_stat(g).map_err(|e| inconsistent(e.to_string()))?;
            conjugate::split_draws(spec.as_ref(), *draws, f).map_err(|e| inconsistent(e.to_string()))?;
            Ok(g.clone())
        }
    }
}

fn thin(k: u64, p: f64, rng: &mut RngStream) -> Result<FissionOutput, FissionError> {
    let z = draw_count(&Dist::Binomial { n: k, p }, rng)?;
    Ok(FissionOutput {
        f: Value::Int(z),
        g: Value::Int(k - z),
        aux: Value::Int(z),
    })
}

fn draw_count(d: &Dist, rng: &mut RngStream) -> Result<u64, FissionError> {
    d.sample(rng)?
        .as_u64()
        .ok_or_else(|| FissionError::InvalidParameter(format!("{d:?} did not yield a count")))
}

/// Rebuilds a real vector with the same scalar/vector shape as `like`.
pub(crate) fn shaped(like: &Value, v: Vec<f64>) -> Value {
    if like.is_scalar() {
        Value::Real(v[0])
    } else {
        Value::Reals(v)
    }
}

pub(crate) fn reals(x: &Value) -> Result<Vec<f64>, FissionError> {
    match x {
        Value::Real(_) | Value::Reals(_) if !x.is_empty() => {
            let v = x.to_reals();
            if v.iter().all(|a| a.is_finite()) {
                Ok(v)
            } else {
                Err(support("observation has non-finite entries"))
            }
        }
        _ => Err(support(format!("{x:?} is not a real scalar or vector"))),
    }
}

fn paired_reals(f: &Value, g: &Value) -> Result<(Vec<f64>, Vec<f64>), FissionError> {
    let (a, b) = (reals(f)?, reals(g)?);
    if a.len() != b.len() || f.is_scalar() != g.is_scalar() {
        return Err(FissionError::InconsistentParts("parts differ in shape".into()));
    }
    Ok((a, b))
}

pub(crate) fn count(x: &Value) -> Result<u64, FissionError> {
    x.as_u64().ok_or_else(|| support(format!("{x:?} is not a count")))
}

fn part_count(x: &Value) -> Result<u64, FissionError> {
    x.as_u64()
        .ok_or_else(|| FissionError::InconsistentParts(format!("{x:?} is not a count")))
}

fn binary(x: &Value) -> Result<u64, FissionError> {
    match x {
        Value::Int(k) if *k <= 1 => Ok(*k),
        _ => Err(support(format!("{x:?} is not 0 or 1"))),
    }
}

pub(crate) fn category(x: &Value, d: usize) -> Result<u64, FissionError> {
    match x {
        Value::Int(k) if (*k as usize) < d => Ok(*k),
        _ => Err(support(format!("{x:?} is not a category in 0..{d}"))),
    }
}

pub(crate) fn positive_real(x: &Value) -> Result<f64, FissionError> {
    match x {
        Value::Real(v) if positive(*v) => Ok(*v),
        _ => Err(support(format!("{x:?} is not a positive real"))),
    }
}

pub(crate) fn unit_real(x: &Value) -> Result<f64, FissionError> {
    match x {
        Value::Real(v) if open_unit(*v) => Ok(*v),
        _ => Err(support(format!("{x:?} is not in (0,1)"))),
    }
}

pub(crate) fn simplex_point(x: &Value) -> Result<Vec<f64>, FissionError> {
    match x {
        Value::Reals(v)
            if v.len() >= 2
                && v.iter().all(|&p| p > 0.0)
                && (v.iter().sum::<f64>() - 1.0).abs() < 1e-9 =>
        {
            Ok(v.clone())
        }
        _ => Err(support(format!("{x:?} is not on the open simplex"))),
    }
}

/// Validates the shape of a released `f` for a conjugate-prior rule and
/// returns its counts.
pub(crate) fn cp_counts(f: &Value, mode: CpMode) -> Result<Vec<u64>, FissionError> {
    match (mode, f) {
        (CpMode::Draws(b), Value::Ints(z)) if z.len() as u64 == b => Ok(z.clone()),
        (CpMode::Scale(_), Value::Int(z)) => Ok(vec![*z]),
        (CpMode::Draws(b), _) => Err(support(format!("expected {b} counts, found {f:?}"))),
        (CpMode::Scale(_), _) => Err(support(format!("expected a single count, found {f:?}"))),
    }
}

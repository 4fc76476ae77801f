use distkit::{Dist, Value};
use numkit::{Cholesky, Matrix};

use crate::conjugate::{self, BinomialProb, PoissonRate};
use crate::rule::{self, BetaSide, CpMode, FissionRule};
use crate::{Covariance, FissionError};

fn bad_param(msg: impl Into<String>) -> FissionError {
    FissionError::InvalidParameter(msg.into())
}

fn arity(theta: &[f64], n: usize, what: &str) -> Result<(), FissionError> {
    if theta.len() == n && theta.iter().all(|t| t.is_finite()) {
        Ok(())
    } else {
        Err(bad_param(format!("{what} expects {n} finite parameter(s), got {theta:?}")))
    }
}

fn prob(theta: &[f64]) -> Result<f64, FissionError> {
    arity(theta, 1, "success probability")?;
    if (0.0..=1.0).contains(&theta[0]) {
        Ok(theta[0])
    } else {
        Err(bad_param(format!("{} is not a probability", theta[0])))
    }
}

fn positive(theta: &[f64], n: usize, what: &str) -> Result<(), FissionError> {
    arity(theta, n, what)?;
    if theta.iter().all(|&t| t > 0.0) {
        Ok(())
    } else {
        Err(bad_param(format!("{what} parameters must be positive, got {theta:?}")))
    }
}

fn checked(d: Dist) -> Result<Dist, FissionError> {
    d.validate()?;
    Ok(d)
}

/// `[α, β]` of the Gamma observation behind a conjugate-prior Poisson rule.
fn gamma_params(rule: &FissionRule, theta: &[f64]) -> Result<(f64, f64), FissionError> {
    match rule {
        FissionRule::ExponentialCp { .. } => {
            positive(theta, 1, "exponential rate")?;
            Ok((1.0, theta[0]))
        }
        _ => {
            positive(theta, 2, "gamma shape and rate")?;
            Ok((theta[0], theta[1]))
        }
    }
}

fn mode_rate(mode: CpMode) -> f64 {
    match mode {
        CpMode::Draws(_) => 1.0,
        CpMode::Scale(tau) => tau,
    }
}

fn mode_count(mode: CpMode) -> f64 {
    match mode {
        CpMode::Draws(b) => b as f64,
        CpMode::Scale(tau) => tau,
    }
}

/// `Σ₁ = Σ + Σ₀` and `Σ₂ = Σ − Σ₀` as dense matrices of dimension `n`.
fn general_blocks(cov: &Covariance, noise: &Covariance, n: usize) -> (Matrix, Matrix) {
    let (s, s0) = (cov.to_matrix(n), noise.to_matrix(n));
    (s.add(&s0), s.sub(&s0))
}

/// Law of `f(X)` when `X` has parameter `θ`.
///
/// For rules releasing several exchangeable draws the returned law is that
/// of a single element; [`ln_marginal_f`] gives the joint density.
pub fn marginal_of_f(rule: &FissionRule, theta: &[f64]) -> Result<Dist, FissionError> {
    rule.validate()?;
    match rule {
        FissionRule::GaussP1 { tau, cov } => gauss_law(cov, theta, 1.0 + tau * tau),
        FissionRule::GaussP2Cp { tau, cov } => gauss_law(cov, theta, 1.0 + tau),
        FissionRule::GaussP2General { cov, noise } => {
            arity(theta, theta.len().max(1), "mean")?;
            cov.check_dim(theta.len())?;
            let (s1, _) = general_blocks(cov, noise, theta.len());
            let c = Covariance::full(s1)?;
            c.normal_law(theta.to_vec(), 1.0, theta.len() == 1)
        }
        FissionRule::PoissonP1 { p } => {
            positive(theta, 1, "Poisson mean")?;
            checked(Dist::Poisson { mean: p * theta[0] })
        }
        FissionRule::PoissonP2 { p } => {
            positive(theta, 1, "Poisson mean")?;
            checked(Dist::Poisson { mean: theta[0] + p })
        }
        FissionRule::BernoulliP2 { p } => {
            let t = prob(theta)?;
            checked(Dist::Bernoulli {
                p: t + p - 2.0 * p * t,
            })
        }
        FissionRule::BinomialP2 { n, p } => checked(Dist::Binomial {
            n: *n,
            p: p * prob(theta)?,
        }),
        FissionRule::NegBinomialP2 { r, p } => {
            let t = prob(theta)?;
            checked(Dist::NegBinomial {
                r: *r,
                p: t / (t + p - p * t),
            })
        }
        FissionRule::GammaCp { mode } | FissionRule::ExponentialCp { mode } => {
            let (shape, rate) = gamma_params(rule, theta)?;
            let q = rate / (rate + mode_rate(*mode));
            if matches!(rule, FissionRule::ExponentialCp { .. }) {
                checked(Dist::Geometric { p: q })
            } else {
                checked(Dist::NegBinomial { r: shape, p: q })
            }
        }
        FissionRule::BetaCp { trials, .. } => {
            positive(theta, 1, "beta")?;
            if theta[0] == 1.0 {
                Ok(Dist::DiscreteUniform { lo: 0, hi: *trials })
            } else {
                checked(Dist::BetaBinomial {
                    n: *trials,
                    a: theta[0],
                    b: 1.0,
                })
            }
        }
        FissionRule::DirichletCp { trials } => {
            if theta.len() < 2 {
                return Err(bad_param("Dirichlet needs at least two components"));
            }
            positive(theta, theta.len(), "Dirichlet")?;
            checked(Dist::DirichletMultinomial {
                n: *trials,
                alpha: theta.to_vec(),
            })
        }
        FissionRule::CategoricalP2 { p, weights } => {
            let probs = category_probs(theta, weights.len())?;
            let phi = probs
                .iter()
                .zip(weights)
                .map(|(t, w)| (1.0 - p) * t + p * w)
                .collect();
            checked(Dist::Categorical { probs: phi })
        }
        FissionRule::ConjugateReversal { spec, .. } => Err(FissionError::NoClosedForm(format!(
            "the {} marginal is available through ln_marginal_f",
            spec.tag()
        ))),
    }
}

fn gauss_law(cov: &Covariance, theta: &[f64], scale: f64) -> Result<Dist, FissionError> {
    if theta.is_empty() {
        return Err(bad_param("mean vector is empty"));
    }
    arity(theta, theta.len(), "mean")?;
    cov.normal_law(theta.to_vec(), scale, theta.len() == 1)
}

fn category_probs(theta: &[f64], d: usize) -> Result<Vec<f64>, FissionError> {
    arity(theta, d, "category probabilities")?;
    Dist::Categorical {
        probs: theta.to_vec(),
    }
    .validate()?;
    Ok(theta.to_vec())
}

/// Joint log density of the whole released `f` under parameter `θ`.
pub fn ln_marginal_f(rule: &FissionRule, theta: &[f64], f: &Value) -> Result<f64, FissionError> {
    rule.validate()?;
    match rule {
        FissionRule::GammaCp { mode } | FissionRule::ExponentialCp { mode } => {
            let (shape, rate) = gamma_params(rule, theta)?;
            let spec = PoissonRate {
                scale: mode_rate(*mode),
            };
            let draws: Vec<Vec<u64>> = rule::cp_counts(f, *mode)?.into_iter().map(|z| vec![z]).collect();
            conjugate::log_marginal(&spec, &PoissonRate::natural(shape, rate), &draws)
        }
        FissionRule::BetaCp { trials, side } => {
            positive(theta, 1, "beta")?;
            let z = rule::count(f)?;
            if z > *trials {
                return Err(rule::support(format!("{z} exceeds {trials} trials")));
            }
            let spec = BinomialProb {
                trials: *trials,
                mirrored: *side == BetaSide::Right,
            };
            let eta = match side {
                BetaSide::Left => BinomialProb::natural(theta[0], 1.0),
                BetaSide::Right => BinomialProb::natural(1.0, theta[0]),
            };
            conjugate::log_marginal(&spec, &eta, &[vec![z]])
        }
        FissionRule::DirichletCp { trials } => {
            let d = marginal_of_f(rule, theta)?;
            dirichlet_counts(f, *trials, theta.len())?;
            Ok(d.log_density(f)?)
        }
        FissionRule::ConjugateReversal { spec, draws } => {
            let z = conjugate::split_draws(spec.as_ref(), *draws, f)?;
            conjugate::log_marginal(spec.as_ref(), theta, &z)
        }
        _ => Ok(marginal_of_f(rule, theta)?.log_density(f)?),
    }
}

fn dirichlet_counts(f: &Value, trials: u64, d: usize) -> Result<Vec<u64>, FissionError> {
    match f {
        Value::Ints(z) if z.len() == d && z.iter().sum::<u64>() == trials => Ok(z.clone()),
        _ => Err(rule::support(format!(
            "{f:?} is not a {d}-category count vector summing to {trials}"
        ))),
    }
}

/// The law of `g(X)` given an observed `f(X)`, as a function of `θ`.
#[derive(Clone, Debug)]
pub struct ConditionalFamily {
    rule: FissionRule,
    f: Value,
}

/// Binds an observed `f` to its rule after checking it is attainable.
pub fn conditional_of_g(rule: &FissionRule, f: &Value) -> Result<ConditionalFamily, FissionError> {
    rule.validate()?;
    match rule {
        FissionRule::GaussP1 { cov, .. }
        | FissionRule::GaussP2Cp { cov, .. }
        | FissionRule::GaussP2General { cov, .. } => {
            cov.check_dim(rule::reals(f)?.len())?;
        }
        FissionRule::PoissonP1 { .. }
        | FissionRule::PoissonP2 { .. }
        | FissionRule::NegBinomialP2 { .. } => {
            rule::count(f)?;
        }
        FissionRule::BernoulliP2 { .. } => {
            rule::category(f, 2)?;
        }
        FissionRule::BinomialP2 { n, .. } => {
            rule::category(f, *n as usize + 1)?;
        }
        FissionRule::GammaCp { mode } | FissionRule::ExponentialCp { mode } => {
            rule::cp_counts(f, *mode)?;
        }
        FissionRule::BetaCp { trials, .. } => {
            rule::category(f, *trials as usize + 1)?;
        }
        FissionRule::DirichletCp { trials } => match f {
            Value::Ints(z) if z.len() >= 2 && z.iter().sum::<u64>() == *trials => {}
            _ => return Err(rule::support(format!("{f:?} is not a multinomial count vector"))),
        },
        FissionRule::CategoricalP2 { weights, .. } => {
            rule::category(f, weights.len())?;
        }
        FissionRule::ConjugateReversal { spec, draws } => {
            conjugate::split_draws(spec.as_ref(), *draws, f)?;
        }
    }
    Ok(ConditionalFamily {
        rule: rule.clone(),
        f: f.clone(),
    })
}

impl ConditionalFamily {
    pub fn rule(&self) -> &FissionRule {
        &self.rule
    }

    pub fn observed_f(&self) -> &Value {
        &self.f
    }

    /// Law of `g | f` under parameter `θ`.
    pub fn law(&self, theta: &[f64]) -> Result<Dist, FissionError> {
        let f = &self.f;
        match &self.rule {
            FissionRule::GaussP1 { tau, cov } => {
                self.check_mean(theta)?;
                cov.normal_law(theta.to_vec(), 1.0 + 1.0 / (tau * tau), f.is_scalar())
            }
            FissionRule::GaussP2Cp { tau, cov } => {
                self.check_mean(theta)?;
                let fs = f.to_reals();
                let mean = theta.iter().zip(&fs).map(|(m, f)| (tau * m + f) / (tau + 1.0)).collect();
                cov.normal_law(mean, tau / (tau + 1.0), f.is_scalar())
            }
            FissionRule::GaussP2General { cov, noise } => {
                self.check_mean(theta)?;
                let fs = f.to_reals();
                let (s1, s2) = general_blocks(cov, noise, fs.len());
                let chol = Cholesky::new(&s1)
                    .map_err(|e| FissionError::InvalidTuning(format!("Σ + Σ₀: {e}")))?;
                let centered: Vec<f64> = fs.iter().zip(theta).map(|(f, m)| f - m).collect();
                let shift = s2.matvec(&chol.solve(&centered));
                let mean = theta.iter().zip(&shift).map(|(m, s)| m + s).collect();
                let gain = s2.matmul(&chol.inverse()).matmul(&s2);
                let c = Covariance::full(s1.sub(&gain).symmetrized())?;
                c.normal_law(mean, 1.0, f.is_scalar())
            }
            FissionRule::PoissonP1 { p } => {
                positive(theta, 1, "Poisson mean")?;
                checked(Dist::Poisson {
                    mean: (1.0 - p) * theta[0],
                })
            }
            FissionRule::PoissonP2 { p } => {
                positive(theta, 1, "Poisson mean")?;
                checked(Dist::Binomial {
                    n: rule::count(f)?,
                    p: theta[0] / (theta[0] + p),
                })
            }
            FissionRule::BernoulliP2 { p } => {
                let t = prob(theta)?;
                let odds = (p / (1.0 - p)).powi(2 * rule::count(f)? as i32 - 1);
                checked(Dist::Bernoulli {
                    p: t / (t + (1.0 - t) * odds),
                })
            }
            FissionRule::BinomialP2 { n, p } => {
                let t = prob(theta)?;
                checked(Dist::Binomial {
                    n: n - rule::count(f)?,
                    p: t * (1.0 - p) / (1.0 - p * t),
                })
            }
            FissionRule::NegBinomialP2 { r, p } => {
                let t = prob(theta)?;
                checked(Dist::NegBinomial {
                    r: r + rule::count(f)? as f64,
                    p: t + p - p * t,
                })
            }
            FissionRule::GammaCp { mode } | FissionRule::ExponentialCp { mode } => {
                let (shape, rate) = gamma_params(&self.rule, theta)?;
                let total: u64 = rule::cp_counts(f, *mode)?.iter().sum();
                checked(Dist::Gamma {
                    shape: shape + total as f64,
                    rate: rate + mode_count(*mode),
                })
            }
            FissionRule::BetaCp { trials, side } => {
                positive(theta, 1, "beta")?;
                let z = rule::count(f)? as f64;
                let (hit, miss) = (theta[0] + z, *trials as f64 - z + 1.0);
                let (a, b) = match side {
                    BetaSide::Left => (hit, miss),
                    BetaSide::Right => (miss, hit),
                };
                checked(Dist::Beta { a, b })
            }
            FissionRule::DirichletCp { trials } => {
                let z = dirichlet_counts(f, *trials, theta.len())?;
                positive(theta, theta.len(), "Dirichlet")?;
                checked(Dist::Dirichlet {
                    alpha: theta.iter().zip(&z).map(|(t, &k)| t + k as f64).collect(),
                })
            }
            FissionRule::CategoricalP2 { p, weights } => {
                let probs = category_probs(theta, weights.len())?;
                let t = rule::count(f)? as usize;
                let mut post: Vec<f64> = probs
                    .iter()
                    .enumerate()
                    .map(|(s, th)| {
                        let same = if s == t { 1.0 - p } else { 0.0 };
                        th * (same + p * weights[t])
                    })
                    .collect();
                let total: f64 = post.iter().sum();
                if total <= 0.0 {
                    return Err(rule::support(format!("f = {t} has zero probability")));
                }
                post.iter_mut().for_each(|q| *q /= total);
                checked(Dist::Categorical { probs: post })
            }
            FissionRule::ConjugateReversal { spec, draws } => {
                spec.check_natural(theta)?;
                let z = conjugate::split_draws(spec.as_ref(), *draws, f)?;
                spec.law(&conjugate::posterior_natural(spec.as_ref(), theta, &z))
            }
        }
    }

    /// `ln p(g | f; θ)`.
    pub fn log_likelihood(&self, theta: &[f64], g: &Value) -> Result<f64, FissionError> {
        Ok(self.law(theta)?.log_density(g)?)
    }

    fn check_mean(&self, theta: &[f64]) -> Result<(), FissionError> {
        arity(theta, self.f.len(), "mean")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_half_flip_leaves_prior() {
        let rule = FissionRule::BernoulliP2 { p: 0.5 };
        for f in 0..2 {
            let c = conditional_of_g(&rule, &Value::Int(f)).unwrap();
            assert!((c.law(&[0.3]).unwrap().pmf(1) - 0.3).abs() < 1e-15);
        }
        for p in [0.1, 0.4, 0.9] {
            let m = marginal_of_f(&FissionRule::BernoulliP2 { p }, &[0.5]).unwrap();
            assert!((m.pmf(1) - 0.5).abs() < 1e-15, "{m:?}");
        }
    }

    #[test]
    fn bernoulli_conditional_matches_hand_bayes() {
        let c = conditional_of_g(&FissionRule::BernoulliP2 { p: 0.2 }, &Value::Int(1)).unwrap();
        let got = c.law(&[0.3]).unwrap().pmf(1);
        assert!((got - 0.24 / 0.38).abs() < 1e-14, "{got}");
        assert!((got - 0.63158).abs() < 1e-5);
    }

    #[test]
    fn poisson_thinning_marginal() {
        let m = marginal_of_f(&FissionRule::PoissonP1 { p: 0.3 }, &[2.0]).unwrap();
        match m {
            Dist::Poisson { mean } => assert!((mean - 0.6).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn beta_unit_theta_is_discrete_uniform() {
        let rule = FissionRule::BetaCp {
            trials: 5,
            side: BetaSide::Left,
        };
        assert_eq!(marginal_of_f(&rule, &[1.0]).unwrap(), Dist::DiscreteUniform { lo: 0, hi: 5 });
    }

    #[test]
    fn generic_rule_has_no_closed_marginal() {
        let rule = FissionRule::ConjugateReversal {
            spec: std::sync::Arc::new(PoissonRate { scale: 1.0 }),
            draws: 1,
        };
        assert!(matches!(marginal_of_f(&rule, &[0.0, 1.0]), Err(FissionError::NoClosedForm(_))));
    }

    #[test]
    fn unattainable_f_is_rejected() {
        let rule = FissionRule::BinomialP2 { n: 3, p: 0.5 };
        assert!(conditional_of_g(&rule, &Value::Int(4)).is_err());
        let rule = FissionRule::GammaCp { mode: CpMode::Draws(2) };
        assert!(conditional_of_g(&rule, &Value::Ints(vec![1])).is_err());
    }
}

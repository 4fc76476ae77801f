//! Fisher-information accounting for fission.
//!
//! Splitting a sample gives a fraction `a` of the observations to
//! selection. Fission instead gives every observation's `f` part to
//! selection; the tuning value that hands selection the same share of
//! Fisher information is `a = 1/(1+τ²)` for the Gaussian P1 rule and
//! `a = p` for Poisson thinning.

use distkit::{Dist, RngStream, Value};
use fission_rules::{conditional_of_g, fission, Covariance, FissionRule};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InfoError {
    #[error("argument outside its domain: {0}")]
    Domain(String),
    #[error("information accounting is not available for rule `{0}`")]
    UnsupportedRule(&'static str),
    #[error(transparent)]
    Fission(#[from] fission_rules::FissionError),
}

fn domain(msg: impl Into<String>) -> InfoError {
    InfoError::Domain(msg.into())
}

/// Gaussian tuning `τ` giving selection a fraction `a` of the information.
pub fn tau_for_fraction(a: f64) -> Result<f64, InfoError> {
    if a > 0.0 && a < 1.0 {
        Ok((1.0 / a - 1.0).sqrt())
    } else {
        Err(domain(format!("fraction {a} is not in (0,1)")))
    }
}

/// Share of information `1/(1+τ²)` that Gaussian fission gives to `f`.
pub fn fraction_for_tau(tau: f64) -> Result<f64, InfoError> {
    if tau > 0.0 && !tau.is_nan() {
        Ok(1.0 / (1.0 + tau * tau))
    } else {
        Err(domain(format!("tau {tau} is not positive")))
    }
}

/// Share of information that Poisson thinning with probability `p` gives to `f`.
pub fn poisson_fraction(p: f64) -> Result<f64, InfoError> {
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(domain(format!("thinning probability {p} is not in (0,1)")))
    }
}

/// A selection fraction with its equivalent fission tuning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InfoBudget {
    Gaussian { fraction: f64, tau: f64 },
    Poisson { fraction: f64, p: f64 },
}

impl InfoBudget {
    pub fn gaussian(fraction: f64) -> Result<Self, InfoError> {
        Ok(InfoBudget::Gaussian {
            fraction,
            tau: tau_for_fraction(fraction)?,
        })
    }

    pub fn poisson(fraction: f64) -> Result<Self, InfoError> {
        Ok(InfoBudget::Poisson {
            fraction,
            p: poisson_fraction(fraction)?,
        })
    }

    pub fn fraction(&self) -> f64 {
        match self {
            InfoBudget::Gaussian { fraction, .. } | InfoBudget::Poisson { fraction, .. } => *fraction,
        }
    }

    /// The fission rule realizing this budget; `sigma2` is the Gaussian
    /// noise variance and is ignored for Poisson.
    pub fn rule(&self, sigma2: f64) -> FissionRule {
        match *self {
            InfoBudget::Gaussian { tau, .. } => FissionRule::gauss_p1(tau, sigma2),
            InfoBudget::Poisson { p, .. } => FissionRule::PoissonP1 { p },
        }
    }
}

/// Information about the mean parameter carried by `X`, by `f(X)`, and on
/// average by `g(X) | f(X)`, for `n` observations.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoReport {
    pub info_x: f64,
    pub info_f: f64,
    /// Monte Carlo mean of the observed information of `g | f`.
    pub info_g_given_f: f64,
    /// Monte Carlo standard error of `info_g_given_f`.
    pub mc_se: f64,
    /// `info_x − info_f − info_g_given_f`.
    pub residual: f64,
}

impl InfoReport {
    /// Whether the residual lies within `k` Monte Carlo standard errors,
    /// with a floor for finite-difference error.
    pub fn within(&self, k: f64) -> bool {
        self.residual.abs() <= k * self.mc_se + 1e-6 * self.info_x
    }
}

/// Second derivative of `ℓ` at `theta` by central differences.
fn observed_information(ell: impl Fn(f64) -> f64, theta: f64) -> f64 {
    let h = 1e-3 * theta.abs().max(1.0);
    -(ell(theta + h) - 2.0 * ell(theta) + ell(theta - h)) / (h * h)
}

/// Checks `I_X = I_f + E[I_{g|f}]` for the mean of `n` observations.
///
/// `I_X` and `I_f` come from closed forms; the conditional term is the
/// Monte Carlo average over `n_mc` fissioned draws of the observed
/// information of the conditional likelihood of `g` given `f`.
pub fn info_additivity_check(
    rule: &FissionRule,
    theta: f64,
    n: usize,
    n_mc: usize,
    rng: &mut RngStream,
) -> Result<InfoReport, InfoError> {
    if n == 0 || n_mc < 2 {
        return Err(domain("need n >= 1 and at least two Monte Carlo draws"));
    }
    let (info_x, info_f, law) = match rule {
        FissionRule::GaussP1 {
            tau,
            cov: Covariance::Iso(s2),
        } => (
            1.0 / s2,
            1.0 / (s2 * (1.0 + tau * tau)),
            Dist::Normal {
                mean: theta,
                sd: s2.sqrt(),
            },
        ),
        FissionRule::PoissonP1 { p } => {
            if theta <= 0.0 {
                return Err(domain(format!("Poisson mean {theta} is not positive")));
            }
            (1.0 / theta, p / theta, Dist::Poisson { mean: theta })
        }
        other => return Err(InfoError::UnsupportedRule(other.tag())),
    };
    let mut draws = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        let x = law.sample(rng).map_err(fission_rules::FissionError::from)?;
        let out = fission(&x, rule, rng)?;
        let cond = conditional_of_g(rule, &out.f)?;
        let g: Value = out.g;
        let ell = |t: f64| cond.log_likelihood(&[t], &g).unwrap_or(f64::NAN);
        draws.push(observed_information(ell, theta));
    }
    let m = n_mc as f64;
    let mean = draws.iter().sum::<f64>() / m;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let scale = n as f64;
    Ok(InfoReport {
        info_x: scale * info_x,
        info_f: scale * info_f,
        info_g_given_f: scale * mean,
        mc_se: scale * (var / m).sqrt(),
        residual: scale * (info_x - info_f - mean),
    })
}

/// Outcome of comparing the estimator of the mean built from all `f` parts
/// with the estimator built from an `a`-fraction subsample.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceComparison {
    /// Mean over replications of the estimated MLE variance from `f`.
    pub fission_var: f64,
    /// Mean over replications of the estimated MLE variance from the subsample.
    pub split_var: f64,
    /// Across-replication variance of the fission estimator.
    pub fission_empirical: f64,
    /// Across-replication variance of the split estimator.
    pub split_empirical: f64,
}

impl VarianceComparison {
    pub fn ratio(&self) -> f64 {
        self.fission_var / self.split_var
    }

    pub fn empirical_ratio(&self) -> f64 {
        self.fission_empirical / self.split_empirical
    }
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Simulates `reps` datasets of `n` observations with mean `mean` (and
/// variance `sigma2` in the Gaussian case) and compares the two ways of
/// spending the budget's selection fraction.
///
/// Each replication records the MLE of the mean and its estimated
/// variance, the inverse observed information at the MLE: `σ̂²/m` for
/// Gaussian data and `μ̂/(m·rate)` for Poisson counts with known thinning
/// rate, where `m` is the number of observations used.
pub fn compare_mle_variance(
    budget: InfoBudget,
    mean: f64,
    sigma2: f64,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<VarianceComparison, InfoError> {
    let a = budget.fraction();
    let kept = (a * n as f64).round() as usize;
    if kept < 2 || reps < 2 {
        return Err(domain("need at least two retained observations and two replications"));
    }
    let rule = budget.rule(sigma2);
    let law = match budget {
        InfoBudget::Gaussian { .. } => Dist::Normal {
            mean,
            sd: sigma2.sqrt(),
        },
        InfoBudget::Poisson { .. } => Dist::Poisson { mean },
    };
    let (mut fis_est, mut split_est) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
    let (mut fis_var, mut split_var) = (0.0, 0.0);
    for r in 0..reps {
        let mut rng = RngStream::new(seed, r as u64);
        let mut xs = Vec::with_capacity(n);
        let mut fs = Vec::with_capacity(n);
        for _ in 0..n {
            let x = law.sample(&mut rng).map_err(fission_rules::FissionError::from)?;
            let out = fission(&x, &rule, &mut rng)?;
            xs.push(x.as_f64().unwrap_or_default());
            fs.push(out.f.as_f64().unwrap_or_default());
        }
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let sub: Vec<f64> = order[..kept].iter().map(|&i| xs[i]).collect();
        let (nf, ns) = (n as f64, kept as f64);
        let f_mean = fs.iter().sum::<f64>() / nf;
        let s_mean = sub.iter().sum::<f64>() / ns;
        match budget {
            InfoBudget::Gaussian { .. } => {
                fis_est.push(f_mean);
                split_est.push(s_mean);
                fis_var += sample_variance(&fs) * (nf - 1.0) / nf / nf;
                split_var += sample_variance(&sub) * (ns - 1.0) / ns / ns;
            }
            InfoBudget::Poisson { p, .. } => {
                let mu_f = f_mean / p;
                fis_est.push(mu_f);
                split_est.push(s_mean);
                fis_var += mu_f / (nf * p);
                split_var += s_mean / ns;
            }
        }
    }
    let r = reps as f64;
    Ok(VarianceComparison {
        fission_var: fis_var / r,
        split_var: split_var / r,
        fission_empirical: sample_variance(&fis_est),
        split_empirical: sample_variance(&split_est),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_tau_examples() {
        assert_eq!(tau_for_fraction(0.5).unwrap(), 1.0);
        assert!((tau_for_fraction(0.2).unwrap() - 2.0).abs() < 1e-15);
        assert!(fraction_for_tau(1e8).unwrap() < 1e-15);
        assert_eq!(poisson_fraction(0.3).unwrap(), 0.3);
        assert!(tau_for_fraction(1.0).is_err());
        assert!(fraction_for_tau(0.0).is_err());
        assert!(poisson_fraction(0.0).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        for i in 1..1000 {
            let a = i as f64 / 1000.0;
            let back = fraction_for_tau(tau_for_fraction(a).unwrap()).unwrap();
            assert!((back - a).abs() < 1e-14, "{a} -> {back}");
        }
    }

    #[test]
    fn unsupported_rules_are_reported() {
        let mut rng = RngStream::new(0, 0);
        let rule = FissionRule::BernoulliP2 { p: 0.3 };
        assert_eq!(
            info_additivity_check(&rule, 0.4, 1, 10, &mut rng),
            Err(InfoError::UnsupportedRule("bernoulli_p2"))
        );
    }
}

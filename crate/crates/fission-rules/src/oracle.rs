//! Brute-force reference computations for checking the closed-form laws.
//!
//! Everything here works from the sampling construction alone: the kernel
//! `P(f | X = x)` is read off the auxiliary draw, and marginals and
//! posteriors follow from summing or integrating it against the law of `X`.

use distkit::{Dist, Value, TRUNCATION_MASS};

use crate::rule::{self, BetaSide, CpMode, FissionRule};
use crate::FissionError;

/// Density or mass of `f` given `X = x` under the rule's construction.
pub fn kernel(rule: &FissionRule, x: &Value, f: &Value) -> Result<f64, FissionError> {
    rule.validate()?;
    let k = match rule {
        FissionRule::GaussP1 { tau, cov } => cov.normal_law(x.to_reals(), tau * tau, x.is_scalar())?.log_density(f)?.exp(),
        FissionRule::GaussP2Cp { tau, cov } => cov.normal_law(x.to_reals(), *tau, x.is_scalar())?.log_density(f)?.exp(),
        FissionRule::GaussP2General { noise, .. } => {
            noise.normal_law(x.to_reals(), 1.0, x.is_scalar())?.log_density(f)?.exp()
        }
        FissionRule::PoissonP1 { p } | FissionRule::NegBinomialP2 { p, .. } | FissionRule::BinomialP2 { p, .. } => {
            Dist::Binomial { n: rule::count(x)?, p: *p }.pmf(rule::count(f)?)
        }
        FissionRule::PoissonP2 { p } => {
            let (x, f) = (rule::count(x)?, rule::count(f)?);
            if f >= x {
                Dist::Poisson { mean: *p }.pmf(f - x)
            } else {
                0.0
            }
        }
        FissionRule::BernoulliP2 { p } => match (rule::count(x)?, rule::count(f)?) {
            (_, f) if f > 1 => 0.0,
            (x, f) if x == f => 1.0 - p,
            _ => *p,
        },
        FissionRule::CategoricalP2 { p, weights } => {
            let (x, f) = (rule::count(x)?, rule::count(f)? as usize);
            match weights.get(f) {
                Some(w) if x as usize == f => 1.0 - p + p * w,
                Some(w) => p * w,
                None => 0.0,
            }
        }
        FissionRule::GammaCp { mode } | FissionRule::ExponentialCp { mode } => {
            let v = rule::positive_real(x)?;
            let rate = match mode {
                CpMode::Draws(_) => v,
                CpMode::Scale(t) => t * v,
            };
            let law = Dist::Poisson { mean: rate };
            rule::cp_counts(f, *mode)?.iter().map(|&z| law.pmf(z)).product()
        }
        FissionRule::BetaCp { trials, side } => {
            let v = rule::unit_real(x)?;
            let p = match side {
                BetaSide::Left => v,
                BetaSide::Right => 1.0 - v,
            };
            Dist::Binomial { n: *trials, p }.pmf(rule::count(f)?)
        }
        FissionRule::DirichletCp { trials } => Dist::Multinomial {
            n: *trials,
            probs: rule::simplex_point(x)?,
        }
        .log_density(f)
        .map(f64::exp)
        .unwrap_or(0.0),
        FissionRule::ConjugateReversal { spec, draws } => {
            let s = spec.suff_stat(x)?;
            let shift = spec.shift();
            let counts = f
                .to_counts()
                .ok_or_else(|| FissionError::OutOfSupport(format!("{f:?} is not a count vector")))?;
            if counts.len() != draws * spec.draw_len() {
                return Ok(0.0);
            }
            counts
                .chunks(spec.draw_len())
                .map(|z| {
                    let t = spec.lik_stat(z);
                    let lin: f64 = t.iter().zip(&shift).zip(&s).map(|((t, c), s)| (t + c) * s).sum();
                    (spec.log_base(z) + lin).exp()
                })
                .product()
        }
    };
    Ok(k)
}

/// The value of `g` produced when the observation is `x` and `f` was released.
fn g_for(rule: &FissionRule, x: u64, f: u64) -> Option<u64> {
    match rule {
        FissionRule::PoissonP1 { .. } | FissionRule::BinomialP2 { .. } | FissionRule::NegBinomialP2 { .. } => {
            x.checked_sub(f)
        }
        _ => Some(x),
    }
}

/// Largest support point of a bounded discrete law.
fn support_max(prior: &Dist) -> Option<u64> {
    match prior {
        Dist::Bernoulli { .. } => Some(1),
        Dist::Binomial { n, .. } | Dist::BetaBinomial { n, .. } => Some(*n),
        Dist::Categorical { probs } => Some(probs.len() as u64 - 1),
        Dist::DiscreteUniform { hi, .. } => Some(*hi),
        _ => None,
    }
}

/// Joint weights `P(X = x) P(f | X = x)` over the support of a discrete
/// prior. Unbounded supports are walked past the joint mode until the
/// weights fall below `1e-20` of the largest one.
fn joint_weights(rule: &FissionRule, prior: &Dist, f: &Value) -> Result<Vec<(u64, f64)>, FissionError> {
    prior.validate()?;
    if !prior.is_discrete() || !prior.is_univariate() {
        return Err(FissionError::InvalidParameter(format!("{prior:?} is not a univariate count law")));
    }
    let bound = support_max(prior);
    let mut out = Vec::new();
    let mut peak = 0.0f64;
    let mut x = 0u64;
    loop {
        let w = prior.pmf(x) * kernel(rule, &Value::Int(x), f)?;
        peak = peak.max(w);
        out.push((x, w));
        let past_mode = w < 1e-20 * peak && prior.sf(x as f64).unwrap_or(0.0) < TRUNCATION_MASS;
        if bound.is_some_and(|b| x >= b) || past_mode || x >= 10_000_000 {
            break;
        }
        x += 1;
    }
    Ok(out)
}

/// Posterior pmf of `g` given `f` by Bayes' rule over the support of a
/// discrete prior on `X`.
///
/// Returns `(g, probability)` pairs with positive mass, sorted by `g`.
pub fn bayes_posterior(rule: &FissionRule, prior: &Dist, f: &Value) -> Result<Vec<(u64, f64)>, FissionError> {
    let f_count = rule::count(f)?;
    let mut post: Vec<(u64, f64)> = joint_weights(rule, prior, f)?
        .into_iter()
        .filter(|(_, w)| *w > 0.0)
        .filter_map(|(x, w)| g_for(rule, x, f_count).map(|g| (g, w)))
        .collect();
    let total: f64 = post.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return Err(FissionError::OutOfSupport(format!("{f:?} has zero marginal probability")));
    }
    post.iter_mut().for_each(|(_, w)| *w /= total);
    post.sort_by_key(|(g, _)| *g);
    Ok(post)
}

/// Marginal pmf of a discrete `f` by summing the kernel over the prior.
pub fn marginal_by_enumeration(rule: &FissionRule, prior: &Dist, f: &Value) -> Result<f64, FissionError> {
    Ok(joint_weights(rule, prior, f)?.iter().map(|(_, w)| w).sum())
}

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order as f64;
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if order == 1 { x } else { p1 };
            let pm = if order == 1 { 1.0 } else { p0 };
            dp = n * (x * pn - pm) / (x * x - 1.0);
            let step = pn / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[order - 1 - i] = -x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre quadrature of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for j in 0..panels {
        let mid = a + (j as f64 + 0.5) * h;
        for (x, w) in nodes.iter().zip(&weights) {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * total
}

/// Marginal pmf of a discrete `f` when `X` has a continuous univariate law
/// with density supported in `[lo, hi]`.
pub fn marginal_by_quadrature(rule: &FissionRule, prior: &Dist, f: &Value, lo: f64, hi: f64) -> Result<f64, FissionError> {
    kernel(rule, &Value::Real(0.5 * (lo + hi)), f)?;
    let integrand = |x: f64| {
        let v = Value::Real(x);
        match (prior.log_density(&v), kernel(rule, &v, f)) {
            (Ok(lp), Ok(k)) => lp.exp() * k,
            _ => 0.0,
        }
    };
    Ok(integrate(integrand, lo, hi, 2000, 20))
}

/// Upper integration limit for a Gamma law beyond which the remaining mass
/// is below the enumeration truncation threshold.
pub fn gamma_upper(shape: f64, rate: f64) -> f64 {
    let mut hi = (shape + 10.0 * shape.sqrt() + 10.0) / rate;
    let law = Dist::Gamma { shape, rate };
    while law.sf(hi).unwrap_or(0.0) > TRUNCATION_MASS * 1e-4 {
        hi *= 1.5;
    }
    hi
}

/// Probability of a multinomial count vector under sequential Pólya-urn
/// draws with initial weights `alpha`.
pub fn polya_urn_pmf(alpha: &[f64], counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let mass: f64 = alpha.iter().sum();
    let mut log_p = numkit::special::ln_factorial(total);
    for (&a, &k) in alpha.iter().zip(counts) {
        log_p -= numkit::special::ln_factorial(k);
        for j in 0..k {
            log_p += (a + j as f64).ln();
        }
    }
    for t in 0..total {
        log_p -= (mass + t as f64).ln();
    }
    log_p.exp()
}

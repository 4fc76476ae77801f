use distkit::{Dist, Value};
use fission_rules::oracle::{bayes_posterior, marginal_by_enumeration};
use fission_rules::{conditional_of_g, marginal_of_f, FissionRule};
use numkit::special::ln_factorial;

/// Rules with a count-valued observation, the prior on `X`, and `θ`.
fn cases() -> Vec<(FissionRule, Dist, Vec<f64>)> {
    let mut out = Vec::new();
    for p in [0.2, 0.5, 0.8] {
        for mu in [0.7, 3.0, 8.0] {
            out.push((FissionRule::PoissonP1 { p }, Dist::Poisson { mean: mu }, vec![mu]));
            out.push((FissionRule::PoissonP2 { p }, Dist::Poisson { mean: mu }, vec![mu]));
        }
        for theta in [0.1, 0.5, 0.85] {
            out.push((FissionRule::BernoulliP2 { p }, Dist::Bernoulli { p: theta }, vec![theta]));
            out.push((FissionRule::BinomialP2 { n: 20, p }, Dist::Binomial { n: 20, p: theta }, vec![theta]));
            out.push((FissionRule::BinomialP2 { n: 3, p }, Dist::Binomial { n: 3, p: theta }, vec![theta]));
            for r in [1.0, 3.5] {
                out.push((
                    FissionRule::NegBinomialP2 { r, p },
                    Dist::NegBinomial { r, p: theta.max(0.3) },
                    vec![theta.max(0.3)],
                ));
            }
        }
        let theta = vec![0.05, 0.5, 0.15, 0.3];
        out.push((
            FissionRule::CategoricalP2 { p, weights: vec![0.4, 0.1, 0.3, 0.2] },
            Dist::Categorical { probs: theta.clone() },
            theta.clone(),
        ));
        out.push((FissionRule::categorical_uniform(p, 4), Dist::Categorical { probs: theta.clone() }, theta));
    }
    out
}

#[test]
fn conditional_matches_bayes_posterior_by_enumeration() {
    for (rule, prior, theta) in cases() {
        for f in 0..=20u64 {
            let fv = Value::Int(f);
            if marginal_by_enumeration(&rule, &prior, &fv).unwrap() < 1e-200 {
                continue;
            }
            let Ok(cond) = conditional_of_g(&rule, &fv) else { continue };
            let law = cond.law(&theta).unwrap();
            let post = bayes_posterior(&rule, &prior, &fv).unwrap();
            let covered: f64 = post.iter().map(|(g, _)| law.pmf(*g)).sum();
            assert!((covered - 1.0).abs() < 1e-12, "{rule:?} f={f}: law mass off posterior support");
            for (g, q) in post {
                let got = law.pmf(g);
                assert!((got - q).abs() < 1e-12, "{rule:?} θ={theta:?} f={f} g={g}: {got} vs {q}");
            }
        }
    }
}

#[test]
fn marginal_matches_enumeration_in_total_variation() {
    for (rule, prior, theta) in cases() {
        let law = marginal_of_f(&rule, &theta).unwrap();
        let mut tv = 0.0;
        let mut mass = 0.0;
        for f in 0..400u64 {
            let fv = Value::Int(f);
            let oracle = marginal_by_enumeration(&rule, &prior, &fv).unwrap();
            mass += oracle;
            tv += (law.pmf(f) - oracle).abs();
            if mass > 1.0 - 1e-15 && f > 60 {
                break;
            }
        }
        assert!(0.5 * tv < 1e-10, "{rule:?} θ={theta:?}: TV {tv}");
    }
}

#[test]
fn binomial_conditional_equals_stated_pmf() {
    let (n, theta, p, z) = (3u64, 0.4f64, 0.5f64, 1u64);
    let rule = FissionRule::BinomialP2 { n, p };
    let law = conditional_of_g(&rule, &Value::Int(z)).unwrap().law(&[theta]).unwrap();
    let post = bayes_posterior(&rule, &Dist::Binomial { n, p: theta }, &Value::Int(z)).unwrap();
    assert_eq!(post.iter().map(|(g, _)| *g).collect::<Vec<_>>(), vec![0, 1, 2]);
    for (y, q) in post {
        let stated = (ln_factorial(n - z) - ln_factorial(y) - ln_factorial(n - z - y)).exp()
            * ((1.0 - p) * theta / (1.0 - theta)).powi(y as i32)
            * ((1.0 - theta) / (1.0 - p * theta)).powi((n - z) as i32);
        assert!((stated - q).abs() < 1e-12, "y={y}: {stated} vs {q}");
        assert!((law.pmf(y) - q).abs() < 1e-12);
    }
}

#[test]
fn categorical_conditional_equals_stated_two_case_pmf() {
    let (p, theta) = (0.3, [0.2, 0.5, 0.3]);
    let d = theta.len() as f64;
    let rule = FissionRule::categorical_uniform(p, 3);
    for t in 0..3usize {
        let law = conditional_of_g(&rule, &Value::Int(t as u64)).unwrap().law(&theta).unwrap();
        for s in 0..3usize {
            let stated = if s == t {
                (1.0 - p + p / d) * theta[s] / ((1.0 - p) * theta[s] + p / d)
            } else {
                theta[s] * p / d / ((1.0 - p) * theta[t] + p / d)
            };
            assert!((law.pmf(s as u64) - stated).abs() < 1e-14, "s={s} t={t}");
        }
    }
}

#[test]
fn geometric_is_negative_binomial_with_unit_size() {
    let rule = FissionRule::NegBinomialP2 { r: 1.0, p: 0.4 };
    let law = marginal_of_f(&rule, &[0.35]).unwrap();
    let q = 0.35 / (0.35 + 0.4 - 0.4 * 0.35);
    let geo = Dist::Geometric { p: q };
    for k in 0..50 {
        assert!((law.pmf(k) - geo.pmf(k)).abs() < 1e-15);
        assert!((geo.pmf(k) - q * (1.0 - q).powi(k as i32)).abs() < 1e-15);
    }
}

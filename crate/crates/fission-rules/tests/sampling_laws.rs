mod common;

use distkit::gof::{chisq_independence, ks_critical, ks_statistic, quantile_table};
use distkit::{Dist, RngStream, Value};
use fission_rules::{conditional_of_g, fission, marginal_of_f, Covariance, FissionRule};
use numkit::{cholesky, Matrix};

const N: usize = 100_000;
const ALPHA: f64 = 0.001;

fn split(rule: &FissionRule, law: &Dist, seed: u64) -> Vec<(Value, Value)> {
    let mut rng = RngStream::new(seed, 0);
    (0..N)
        .map(|_| {
            let x = law.sample(&mut rng).unwrap();
            let out = fission(&x, rule, &mut rng).unwrap();
            (out.f, out.g)
        })
        .collect()
}

fn scalars(parts: &[(Value, Value)]) -> (Vec<f64>, Vec<f64>) {
    parts.iter().map(|(f, g)| (f.as_f64().unwrap(), g.as_f64().unwrap())).unzip()
}

fn ks_ok(xs: &[f64], law: &Dist) -> bool {
    ks_statistic(xs, |x| law.cdf(x).unwrap()) < ks_critical(xs.len(), ALPHA)
}

#[test]
fn gaussian_p1_moments() {
    let rule = FissionRule::gauss_p1(0.5, 1.0);
    let (f, g) = scalars(&split(&rule, &Dist::Normal { mean: 0.0, sd: 1.0 }, 1));
    let (_, vf) = common::mean_var(&f);
    let (_, vg) = common::mean_var(&g);
    let n = N as f64;
    assert!((vf - 1.25).abs() < 4.0 * 1.25 * (2.0 / n).sqrt(), "{vf}");
    assert!((vg - 5.0).abs() < 4.0 * 5.0 * (2.0 / n).sqrt(), "{vg}");
    assert!(common::correlation(&f, &g).abs() < 4.0 / n.sqrt());
}

#[test]
fn gaussian_p1_marginals_and_independence() {
    let (mu, tau, s2) = (1.5, 0.8, 2.0);
    let rule = FissionRule::gauss_p1(tau, s2);
    let (f, g) = scalars(&split(&rule, &Dist::Normal { mean: mu, sd: s2.sqrt() }, 2));
    assert!(ks_ok(&f, &marginal_of_f(&rule, &[mu]).unwrap()));
    let g_law = conditional_of_g(&rule, &Value::Real(f[0])).unwrap().law(&[mu]).unwrap();
    assert!(ks_ok(&g, &g_law));
    assert!(chisq_independence(&quantile_table(&f, &g, 10)).p_value > ALPHA);
}

#[test]
fn poisson_p1_parts_are_independent() {
    let (mu, p) = (50.0, 0.4);
    let rule = FissionRule::PoissonP1 { p };
    let (f, g) = scalars(&split(&rule, &Dist::Poisson { mean: mu }, 3));
    let test = chisq_independence(&quantile_table(&f, &g, 10));
    assert!(test.df >= 64.0);
    assert!(test.p_value > ALPHA, "{test:?}");
}

#[test]
fn dependent_rules_fail_the_independence_test() {
    let rule = FissionRule::GaussP2Cp { tau: 1.0, cov: Covariance::Iso(1.0) };
    let (f, g) = scalars(&split(&rule, &Dist::Normal { mean: 0.0, sd: 1.0 }, 4));
    assert!(chisq_independence(&quantile_table(&f, &g, 10)).p_value < 1e-10);
}

#[test]
fn gaussian_p2_conditional_residuals_are_standard_normal() {
    let (mu, tau, s2) = (-2.0, 0.6, 3.0);
    let rule = FissionRule::GaussP2Cp { tau, cov: Covariance::Iso(s2) };
    let parts = split(&rule, &Dist::Normal { mean: mu, sd: s2.sqrt() }, 5);
    let (f, _) = scalars(&parts);
    assert!(ks_ok(&f, &marginal_of_f(&rule, &[mu]).unwrap()));
    let z: Vec<f64> = parts
        .iter()
        .map(|(f, g)| match conditional_of_g(&rule, f).unwrap().law(&[mu]).unwrap() {
            Dist::Normal { mean, sd } => (g.as_f64().unwrap() - mean) / sd,
            other => panic!("{other:?}"),
        })
        .collect();
    assert!(ks_ok(&z, &Dist::Normal { mean: 0.0, sd: 1.0 }));
    assert!(common::correlation(&z, &f).abs() < 4.0 / (N as f64).sqrt());
}

fn lower_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; b.len()];
    for i in 0..b.len() {
        let s: f64 = (0..i).map(|j| l[(i, j)] * y[j]).sum();
        y[i] = (b[i] - s) / l[(i, i)];
    }
    y
}

#[test]
fn gaussian_general_marginal_and_conditional() {
    let sigma = Matrix::from_rows(&[[2.0, 0.6], [0.6, 1.0]]).unwrap();
    let sigma0 = Matrix::from_rows(&[[0.5, -0.1], [-0.1, 0.3]]).unwrap();
    let mu = vec![1.0, -0.5];
    let rule = FissionRule::GaussP2General {
        cov: Covariance::full(sigma.clone()).unwrap(),
        noise: Covariance::full(sigma0.clone()).unwrap(),
    };
    let law = Dist::MvNormalChol { mean: mu.clone(), chol: cholesky(&sigma).unwrap() };
    let parts = split(&rule, &law, 6);

    let s1 = sigma.add(&sigma0);
    for u in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
        let proj: Vec<f64> = parts.iter().map(|(f, _)| numkit::dot(&u, &f.to_reals())).collect();
        let var = numkit::dot(&u, &s1.matvec(&u));
        let target = Dist::Normal { mean: numkit::dot(&u, &mu), sd: var.sqrt() };
        assert!(ks_ok(&proj, &target), "direction {u:?}");
    }

    let mut z0 = Vec::with_capacity(N);
    let mut z1 = Vec::with_capacity(N);
    for (f, g) in &parts {
        let Dist::MvNormalChol { mean, chol } = conditional_of_g(&rule, f).unwrap().law(&mu).unwrap() else {
            panic!("expected a full-covariance normal");
        };
        let centered: Vec<f64> = g.to_reals().iter().zip(&mean).map(|(g, m)| g - m).collect();
        let z = lower_solve(&chol, &centered);
        z0.push(z[0]);
        z1.push(z[1]);
    }
    let std = Dist::Normal { mean: 0.0, sd: 1.0 };
    assert!(ks_ok(&z0, &std));
    assert!(ks_ok(&z1, &std));
    assert!(common::correlation(&z0, &z1).abs() < 4.0 / (N as f64).sqrt());
}

#[test]
fn multivariate_p1_projections() {
    let rule = FissionRule::GaussP1 { tau: 1.3, cov: Covariance::Diag(vec![1.0, 4.0]) };
    let mu = vec![0.0, 5.0];
    let parts = split(&rule, &Dist::MvNormalDiag { mean: mu.clone(), var: vec![1.0, 4.0] }, 7);
    let Dist::MvNormalDiag { var, .. } = marginal_of_f(&rule, &mu).unwrap() else { panic!() };
    for j in 0..2 {
        let xs: Vec<f64> = parts.iter().map(|(f, _)| f.to_reals()[j]).collect();
        assert!(ks_ok(&xs, &Dist::Normal { mean: mu[j], sd: var[j].sqrt() }));
    }
}

/// Empirical frequencies of a count-valued `f` against its marginal pmf.
#[test]
fn sampled_count_marginals_match_stated_laws() {
    let cases: Vec<(FissionRule, Dist, Vec<f64>)> = vec![
        (FissionRule::PoissonP2 { p: 0.6 }, Dist::Poisson { mean: 2.5 }, vec![2.5]),
        (FissionRule::BernoulliP2 { p: 0.2 }, Dist::Bernoulli { p: 0.3 }, vec![0.3]),
        (FissionRule::BinomialP2 { n: 12, p: 0.45 }, Dist::Binomial { n: 12, p: 0.6 }, vec![0.6]),
        (FissionRule::NegBinomialP2 { r: 2.5, p: 0.3 }, Dist::NegBinomial { r: 2.5, p: 0.4 }, vec![0.4]),
        (
            FissionRule::GammaCp { mode: fission_rules::CpMode::Scale(1.7) },
            Dist::Gamma { shape: 3.0, rate: 1.5 },
            vec![3.0, 1.5],
        ),
        (
            FissionRule::BetaCp { trials: 6, side: fission_rules::BetaSide::Left },
            Dist::Beta { a: 2.0, b: 1.0 },
            vec![2.0],
        ),
        (
            FissionRule::categorical_uniform(0.4, 4),
            Dist::Categorical { probs: vec![0.5, 0.1, 0.3, 0.1] },
            vec![0.5, 0.1, 0.3, 0.1],
        ),
    ];
    for (i, (rule, law, theta)) in cases.into_iter().enumerate() {
        let (f, _) = scalars(&split(&rule, &law, 100 + i as u64));
        let target = marginal_of_f(&rule, &theta).unwrap();
        for k in 0..15u64 {
            let p = target.pmf(k);
            let hat = f.iter().filter(|&&v| v == k as f64).count() as f64 / N as f64;
            let se = (p * (1.0 - p) / N as f64).sqrt();
            assert!((hat - p).abs() <= 5.0 * se + 1e-12, "{rule:?} k={k}: {hat} vs {p}");
        }
    }
}

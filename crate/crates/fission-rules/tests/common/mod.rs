#![allow(dead_code)]

use std::sync::Arc;

use distkit::{Dist, RngStream, Value};
use fission_rules::{BetaSide, BinomialProb, Covariance, CpMode, FissionRule, MultinomialProbs, PoissonRate};
use numkit::Matrix;

/// One rule of every variant paired with a law to draw observations from.
pub fn catalog() -> Vec<(FissionRule, Dist)> {
    let sigma = Matrix::from_rows(&[[2.0, 0.6], [0.6, 1.0]]).unwrap();
    let sigma0 = Matrix::from_rows(&[[0.5, -0.1], [-0.1, 0.3]]).unwrap();
    vec![
        (FissionRule::gauss_p1(0.7, 2.0), Dist::Normal { mean: 1.0, sd: 2f64.sqrt() }),
        (
            FissionRule::GaussP1 { tau: 1.3, cov: Covariance::Diag(vec![1.0, 4.0]) },
            Dist::MvNormalDiag { mean: vec![0.0, 5.0], var: vec![1.0, 4.0] },
        ),
        (
            FissionRule::GaussP2Cp { tau: 0.4, cov: Covariance::Iso(1.5) },
            Dist::Normal { mean: -3.0, sd: 1.5f64.sqrt() },
        ),
        (
            FissionRule::GaussP2General {
                cov: Covariance::full(sigma.clone()).unwrap(),
                noise: Covariance::full(sigma0).unwrap(),
            },
            Dist::MvNormalChol { mean: vec![1.0, 2.0], chol: numkit::cholesky(&sigma).unwrap() },
        ),
        (FissionRule::PoissonP1 { p: 0.35 }, Dist::Poisson { mean: 6.0 }),
        (FissionRule::PoissonP2 { p: 0.6 }, Dist::Poisson { mean: 2.5 }),
        (FissionRule::BernoulliP2 { p: 0.2 }, Dist::Bernoulli { p: 0.3 }),
        (FissionRule::BinomialP2 { n: 12, p: 0.45 }, Dist::Binomial { n: 12, p: 0.6 }),
        (FissionRule::NegBinomialP2 { r: 2.5, p: 0.3 }, Dist::NegBinomial { r: 2.5, p: 0.4 }),
        (FissionRule::GammaCp { mode: CpMode::Draws(3) }, Dist::Gamma { shape: 2.0, rate: 0.8 }),
        (FissionRule::GammaCp { mode: CpMode::Scale(1.7) }, Dist::Gamma { shape: 3.0, rate: 1.5 }),
        (FissionRule::ExponentialCp { mode: CpMode::Draws(2) }, Dist::Exponential { rate: 0.5 }),
        (FissionRule::ExponentialCp { mode: CpMode::Scale(0.6) }, Dist::Exponential { rate: 2.0 }),
        (FissionRule::BetaCp { trials: 6, side: BetaSide::Left }, Dist::Beta { a: 2.0, b: 1.0 }),
        (FissionRule::BetaCp { trials: 4, side: BetaSide::Right }, Dist::Beta { a: 1.0, b: 3.0 }),
        (FissionRule::DirichletCp { trials: 5 }, Dist::Dirichlet { alpha: vec![1.5, 1.0, 0.7] }),
        (
            FissionRule::CategoricalP2 { p: 0.4, weights: vec![0.1, 0.2, 0.3, 0.4] },
            Dist::Categorical { probs: vec![0.5, 0.1, 0.3, 0.1] },
        ),
        (
            FissionRule::ConjugateReversal { spec: Arc::new(PoissonRate { scale: 2.0 }), draws: 2 },
            Dist::Gamma { shape: 1.5, rate: 1.0 },
        ),
        (
            FissionRule::ConjugateReversal {
                spec: Arc::new(BinomialProb { trials: 3, mirrored: true }),
                draws: 2,
            },
            Dist::Beta { a: 2.0, b: 2.0 },
        ),
        (
            FissionRule::ConjugateReversal { spec: Arc::new(MultinomialProbs { trials: 4, dim: 3 }), draws: 1 },
            Dist::Dirichlet { alpha: vec![1.0, 2.0, 3.0] },
        ),
    ]
}

/// Draws an observation, rejecting boundary values that lie outside the
/// open support of the continuous families.
pub fn draw_observation(law: &Dist, rng: &mut RngStream) -> Value {
    loop {
        let x = law.sample(rng).unwrap();
        let interior = match &x {
            Value::Real(v) => match law {
                Dist::Beta { .. } => *v > 0.0 && *v < 1.0,
                Dist::Gamma { .. } | Dist::Exponential { .. } => *v > 0.0,
                _ => true,
            },
            Value::Reals(v) if matches!(law, Dist::Dirichlet { .. }) => v.iter().all(|&p| p > 0.0),
            _ => true,
        };
        if interior {
            return x;
        }
    }
}

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let n = a.len() as f64;
    let c: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0);
    c / (va * vb).sqrt()
}

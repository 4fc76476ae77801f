use distkit::{Dist, RngStream, Value};
use numkit::Matrix;

fn all_families() -> Vec<Dist> {
    vec![
        Dist::Normal { mean: -1.5, sd: 2.0 },
        Dist::MvNormalDiag { mean: vec![0.0, 3.0], var: vec![1.0, 0.25] },
        Dist::MvNormalChol {
            mean: vec![1.0, -1.0],
            chol: Matrix::from_rows(&[[1.0, 0.0], [0.5, 0.8]]).unwrap(),
        },
        Dist::Poisson { mean: 3.7 },
        Dist::Binomial { n: 12, p: 0.3 },
        Dist::Bernoulli { p: 0.2 },
        Dist::NegBinomial { r: 2.5, p: 0.4 },
        Dist::Gamma { shape: 0.6, rate: 2.0 },
        Dist::Gamma { shape: 4.0, rate: 0.5 },
        Dist::Exponential { rate: 1.7 },
        Dist::Beta { a: 2.0, b: 0.7 },
        Dist::Dirichlet { alpha: vec![1.0, 2.5, 0.5] },
        Dist::Categorical { probs: vec![0.1, 0.6, 0.3] },
        Dist::Multinomial { n: 9, probs: vec![0.2, 0.5, 0.3] },
        Dist::Geometric { p: 0.25 },
        Dist::BetaBinomial { n: 7, a: 1.5, b: 2.0 },
        Dist::DiscreteUniform { lo: 2, hi: 9 },
        Dist::DirichletMultinomial { n: 6, alpha: vec![0.5, 1.0, 2.0] },
    ]
}

#[test]
fn moments_match_within_clt_bands() {
    let n = 100_000;
    for (fam, d) in all_families().into_iter().enumerate() {
        let mut rng = RngStream::new(2024, fam as u64);
        let draws: Vec<Vec<f64>> = (0..n).map(|_| d.sample(&mut rng).unwrap().to_reals()).collect();
        let mean = d.mean().unwrap();
        let var = d.variance().unwrap();
        for j in 0..mean.len() {
            let xs: Vec<f64> = draws.iter().map(|v| v[j]).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let s2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
            let se_mean = (var[j] / n as f64).sqrt();
            let se_var = ((m4 - s2 * s2).max(0.0) / n as f64).sqrt();
            assert!((m - mean[j]).abs() <= 4.0 * se_mean + 1e-12, "{d:?} comp {j}: mean {m} vs {}", mean[j]);
            assert!((s2 - var[j]).abs() <= 4.0 * se_var + 1e-12, "{d:?} comp {j}: var {s2} vs {}", var[j]);
        }
    }
}

#[test]
fn discrete_pmfs_sum_to_one() {
    for d in all_families().into_iter().filter(|d| d.is_discrete() && d.is_univariate()) {
        let total: f64 = d.enumerate_pmf().unwrap().iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-10, "{d:?}: {total}");
    }
}

#[test]
fn multivariate_discrete_pmfs_sum_to_one() {
    for d in [
        Dist::Multinomial { n: 5, probs: vec![0.2, 0.5, 0.3] },
        Dist::DirichletMultinomial { n: 5, alpha: vec![0.5, 1.0, 2.0] },
    ] {
        let mut total = 0.0;
        for a in 0..=5u64 {
            for b in 0..=(5 - a) {
                total += d.log_density(&Value::Ints(vec![a, b, 5 - a - b])).unwrap().exp();
            }
        }
        assert!((total - 1.0).abs() < 1e-12, "{d:?}");
    }
}

#[test]
fn cdf_jumps_equal_pmf() {
    for d in all_families().into_iter().filter(|d| d.is_discrete() && d.is_univariate()) {
        let mut prev = 0.0;
        for (k, p) in d.enumerate_pmf().unwrap().into_iter().take(40) {
            let c = d.cdf(k as f64).unwrap();
            let l = d.cdf_left(k as f64).unwrap();
            assert!(c >= prev - 1e-15, "{d:?} not monotone at {k}");
            assert!((c - l - p).abs() < 1e-12, "{d:?} at {k}: {c} - {l} != {p}");
            prev = c;
        }
    }
}

#[test]
fn same_stream_reproduces_bit_identical_draws() {
    for d in all_families() {
        let mut a = RngStream::new(99, 5);
        let mut b = RngStream::new(99, 5);
        for _ in 0..200 {
            assert_eq!(d.sample(&mut a).unwrap(), d.sample(&mut b).unwrap());
        }
    }
}

#[test]
fn densities_integrate_to_one_on_a_grid() {
    let cases = [
        (Dist::Normal { mean: 0.5, sd: 1.3 }, -15.0, 15.0),
        (Dist::Gamma { shape: 2.5, rate: 1.5 }, 0.0, 60.0),
        (Dist::Exponential { rate: 0.8 }, 0.0, 80.0),
        (Dist::Beta { a: 2.0, b: 3.0 }, 0.0, 1.0),
    ];
    for (d, lo, hi) in cases {
        let m = 200_000;
        let h = (hi - lo) / m as f64;
        let mut s = 0.0;
        for i in 0..m {
            let x = lo + (i as f64 + 0.5) * h;
            s += d.log_density(&Value::Real(x)).map(f64::exp).unwrap_or(0.0) * h;
        }
        assert!((s - 1.0).abs() < 1e-6, "{d:?}: {s}");
    }
}

use distkit::{Dist, RngStream, Value};
use fission_rules::{fission, FissionRule};
use modelfit::{glm_irls, ols, score, Design, Family, ModelError};
use numkit::Matrix;

fn random_design(n: usize, p: usize, rng: &mut RngStream) -> Matrix {
    Matrix::from_fn(n, p, |_, _| rng.standard_normal())
}

fn count(d: &Dist, rng: &mut RngStream) -> f64 {
    d.sample(rng).unwrap().as_f64().unwrap()
}

#[test]
fn irls_reproduces_ols_for_gaussian() {
    let mut rng = RngStream::new(11, 0);
    let x = random_design(60, 4, &mut rng);
    let y: Vec<f64> = (0..60).map(|i| x[(i, 0)] - 0.5 * x[(i, 2)] + rng.standard_normal()).collect();
    let d = Design::new(x, y, Family::Gaussian).unwrap().with_intercept(true);
    let a = ols(&d).unwrap();
    let b = glm_irls(&d).unwrap();
    for (u, v) in a.full_coefficients().iter().zip(b.full_coefficients()) {
        assert!((u - v).abs() < 1e-10);
    }
}

#[test]
fn ols_solves_normal_equations() {
    let mut rng = RngStream::new(12, 0);
    let x = random_design(40, 6, &mut rng);
    let y: Vec<f64> = (0..40).map(|_| 3.0 * rng.standard_normal()).collect();
    let d = Design::new(x.clone(), y.clone(), Family::Gaussian).unwrap();
    let fit = ols(&d).unwrap();
    let lhs = x.gram().matvec(&fit.coefficients);
    let rhs = x.tr_matvec(&y);
    for (l, r) in lhs.iter().zip(&rhs) {
        assert!((l - r).abs() < 1e-8);
    }
}

#[test]
fn glm_scores_vanish_at_the_fit() {
    let mut rng = RngStream::new(13, 0);
    for family in [Family::Poisson, Family::Binomial] {
        for rep in 0..10 {
            let n = 80;
            let x = random_design(n, 3, &mut rng);
            let offset: Vec<f64> = (0..n).map(|_| 0.3 * rng.standard_normal()).collect();
            let y: Vec<f64> = (0..n)
                .map(|i| {
                    let eta = 0.2 + 0.5 * x[(i, 0)] - 0.4 * x[(i, 1)] + offset[i];
                    let d = match family {
                        Family::Poisson => Dist::Poisson { mean: eta.exp() },
                        _ => Dist::Bernoulli { p: family.mean(eta) },
                    };
                    count(&d, &mut rng)
                })
                .collect();
            let d = Design::new(x, y, family)
                .unwrap()
                .with_offset(offset)
                .unwrap()
                .with_intercept(true);
            let fit = glm_irls(&d).unwrap_or_else(|e| panic!("{family:?} rep {rep}: {e}"));
            let s = score(&d, &fit.full_coefficients()).unwrap();
            assert!(numkit::norm2(&s) < 1e-6, "{family:?} rep {rep}: {s:?}");
            for (m, e) in fit.fitted.iter().zip(&fit.linear_predictor) {
                assert!((family.mean(*e) - m).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn offset_recovers_the_unthinned_mean() {
    let (mu, p, n) = (3.0, 0.5, 20_000);
    let mut rng = RngStream::new(14, 0);
    let rule = FissionRule::PoissonP1 { p };
    let law = Dist::Poisson { mean: mu };
    let g: Vec<f64> = (0..n)
        .map(|_| {
            let x = law.sample(&mut rng).unwrap();
            match fission(&x, &rule, &mut rng).unwrap().g {
                Value::Int(v) => v as f64,
                other => panic!("{other:?}"),
            }
        })
        .collect();
    let x = Matrix::new(n, 1, vec![1.0; n]).unwrap();
    let d = Design::new(x, g, Family::Poisson)
        .unwrap()
        .with_offset(vec![(1.0 - p).ln(); n])
        .unwrap();
    let b = glm_irls(&d).unwrap().coefficients[0];
    let se = 1.0 / ((1.0 - p) * mu * n as f64).sqrt();
    assert!((b - mu.ln()).abs() < 4.0 * se, "{b} vs {}", mu.ln());
    assert!((b - ((1.0 - p) * mu).ln()).abs() > 20.0 * se);
}

#[test]
fn weights_act_as_replication() {
    let x = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]]).unwrap();
    let y = vec![1.0, 0.0, 4.0];
    let weighted = Design::new(x.clone(), y.clone(), Family::Poisson)
        .unwrap()
        .with_weights(vec![1.0, 2.0, 1.0])
        .unwrap();
    let xr = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [1.0, 1.0], [1.0, 2.0]]).unwrap();
    let replicated = Design::new(xr, vec![1.0, 0.0, 0.0, 4.0], Family::Poisson).unwrap();
    let a = glm_irls(&weighted).unwrap();
    let b = glm_irls(&replicated).unwrap();
    for (u, v) in a.coefficients.iter().zip(&b.coefficients) {
        assert!((u - v).abs() < 1e-10);
    }
}

#[test]
fn all_zero_poisson_response_drives_means_to_zero() {
    let x = Matrix::new(3, 1, vec![1.0; 3]).unwrap();
    let d = Design::new(x, vec![0.0; 3], Family::Poisson).unwrap();
    let fit = glm_irls(&d).unwrap();
    assert!(fit.fitted.iter().all(|m| *m < 1e-8));
}

#[test]
fn wrong_family_for_ols_is_rejected() {
    let x = Matrix::new(3, 1, vec![1.0; 3]).unwrap();
    let d = Design::new(x, vec![0.0, 1.0, 2.0], Family::Poisson).unwrap();
    assert!(matches!(ols(&d), Err(ModelError::InvalidArgument(_))));
}

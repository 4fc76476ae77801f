use distkit::RngStream;
use fission_rules::FissionRule;
use infosplit::{compare_mle_variance, info_additivity_check, InfoBudget};

#[test]
fn gaussian_unit_example() {
    let mut rng = RngStream::new(1, 0);
    let r = info_additivity_check(&FissionRule::gauss_p1(1.0, 1.0), 0.0, 1, 1000, &mut rng).unwrap();
    assert_eq!(r.info_x, 1.0);
    assert!((r.info_f - 0.5).abs() < 1e-15);
    assert!((r.info_g_given_f - 0.5).abs() < 1e-6);
}

#[test]
fn poisson_example_information_of_f() {
    let mut rng = RngStream::new(2, 0);
    let r = info_additivity_check(&FissionRule::PoissonP1 { p: 0.3 }, 2.0, 1, 1000, &mut rng).unwrap();
    assert!((r.info_f - 0.15).abs() < 1e-15);
    assert!((r.info_x - 0.5).abs() < 1e-15);
}

#[test]
fn small_tau_moves_all_information_to_f() {
    let mut rng = RngStream::new(3, 0);
    let r = info_additivity_check(&FissionRule::gauss_p1(1e-3, 2.0), 1.0, 1, 100, &mut rng).unwrap();
    assert!((r.info_f - r.info_x).abs() < 1e-6 * r.info_x);
    assert!(r.info_g_given_f < 1e-5);
}

#[test]
fn additivity_holds_within_monte_carlo_band() {
    let cases = [
        (FissionRule::gauss_p1(0.5, 1.0), 0.3),
        (FissionRule::gauss_p1(2.0, 3.0), -1.0),
        (FissionRule::PoissonP1 { p: 0.3 }, 2.0),
        (FissionRule::PoissonP1 { p: 0.7 }, 9.0),
    ];
    for (i, (rule, theta)) in cases.iter().enumerate() {
        let mut rng = RngStream::new(40, i as u64);
        let r = info_additivity_check(rule, *theta, 5, 100_000, &mut rng).unwrap();
        assert!(r.within(4.0), "{rule:?}: {r:?}");
    }
}

#[test]
fn mle_variance_ratio_is_near_one() {
    let g = compare_mle_variance(InfoBudget::gaussian(0.3).unwrap(), 1.0, 2.0, 2000, 50, 7).unwrap();
    assert!((g.ratio() - 1.0).abs() < 0.05, "{g:?}");
    let p = compare_mle_variance(InfoBudget::poisson(0.5).unwrap(), 4.0, 0.0, 2000, 50, 8).unwrap();
    assert!((p.ratio() - 1.0).abs() < 0.05, "{p:?}");
}

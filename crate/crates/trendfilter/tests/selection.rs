use distkit::RngStream;
use trendfilter::{
    estimate_sigma_differences, falling_factorial_basis, knot_position, knot_select, solve_multiplier, sure_score, uniform_multiplier,
    KnotRule, LambdaGrid, SureDf, TrendFilter,
};

fn unit(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64).collect()
}

#[test]
fn noiseless_kink_is_recovered_somewhere_on_the_path() {
    let t = unit(60);
    let y: Vec<f64> = t.iter().map(|&s| 0.2 * s - 0.7 * (s - 23.0).max(0.0)).collect();
    let filter = TrendFilter::new(&t, 1).unwrap();
    let lambdas = LambdaGrid::default().values(filter.lambda_max(&y).unwrap()).unwrap();
    let path = filter.fit_path(&y, &lambdas).unwrap();
    assert!(path.iter().any(|fit| fit.knots.contains(&23.0)));
    let last = path.last().unwrap();
    let jumps = filter.diff().apply(&last.fitted);
    let strongest = (0..jumps.len()).max_by(|&a, &b| jumps[a].abs().total_cmp(&jumps[b].abs())).unwrap();
    assert_eq!(knot_position(&t, 1, strongest), 23.0);
    let err = last.fitted.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 0.01, "{err}");
}

#[test]
fn no_knots_at_or_above_lambda_max() {
    let mut rng = RngStream::new(400, 0);
    let t = unit(200);
    let y: Vec<f64> = t.iter().map(|s| (s / 30.0).sin() + 0.1 * rng.standard_normal()).collect();
    let filter = TrendFilter::new(&t, 1).unwrap();
    let lmax = filter.lambda_max(&y).unwrap();
    for scale in [1.0, 1.5, 10.0] {
        assert_eq!(filter.fit(&y, scale * lmax).unwrap().num_knots(), 0);
    }
    assert!(filter.fit(&y, 0.5 * lmax).unwrap().num_knots() > 0);
}

#[test]
fn sure_penalty_is_saturated_at_zero_lambda() {
    let mut rng = RngStream::new(401, 0);
    let n = 80;
    let k = 1;
    let t = unit(n);
    let y: Vec<f64> = t.iter().map(|s| 0.1 * s + 0.05 * rng.standard_normal()).collect();
    let fit = TrendFilter::new(&t, k).unwrap().fit(&y, 0.0).unwrap();
    assert_eq!(fit.num_knots(), n - k - 1);
    let s2 = 0.0025;
    let expected = 2.0 * s2 * (n - k - 1) as f64 / n as f64;
    assert!((sure_score(&y, &fit, s2, SureDf::Knots) - expected).abs() < 1e-15);
}

#[test]
fn sure_prefers_true_knots_over_saturated_fit() {
    let mut rng = RngStream::new(402, 0);
    let t = unit(100);
    let sigma = 0.05;
    let truth: Vec<f64> = t.iter().map(|&s| 0.3 * s - 0.5 * (s - 40.0).max(0.0) + 0.4 * (s - 70.0).max(0.0)).collect();
    let y: Vec<f64> = truth.iter().map(|m| m + sigma * rng.standard_normal()).collect();
    let filter = TrendFilter::new(&t, 1).unwrap();
    let saturated = filter.fit(&y, 0.0).unwrap();
    let lambdas = LambdaGrid::default().values(filter.lambda_max(&y).unwrap()).unwrap();
    let path = filter.fit_path(&y, &lambdas).unwrap();
    let s2 = sigma * sigma;
    let best = path
        .iter()
        .map(|fit| sure_score(&y, fit, s2, SureDf::Knots))
        .fold(f64::INFINITY, f64::min);
    assert!(best < sure_score(&y, &saturated, s2, SureDf::Knots));
    let chosen = knot_select(&t, &y, 1, KnotRule::Sure { sigma2: Some(s2), df: SureDf::Knots }, LambdaGrid::default()).unwrap();
    let diag = chosen.selection.as_ref().unwrap();
    assert_eq!(diag.scores[diag.chosen], best);
    assert!(chosen.knots.iter().any(|&s| (s - 40.0).abs() <= 2.0));
    assert!(chosen.knots.iter().any(|&s| (s - 70.0).abs() <= 2.0));
}

#[test]
fn cv_rules_choose_on_the_grid() {
    let mut rng = RngStream::new(403, 0);
    let t = unit(120);
    let y: Vec<f64> = t.iter().map(|&s| 0.05 * s - 0.1 * (s - 60.0).max(0.0) + 0.1 * rng.standard_normal()).collect();
    let min = knot_select(&t, &y, 1, KnotRule::CvMin, LambdaGrid::default()).unwrap();
    let one_se = knot_select(&t, &y, 1, KnotRule::Cv1se, LambdaGrid::default()).unwrap();
    let (dm, ds) = (min.selection.unwrap(), one_se.selection.unwrap());
    assert!(ds.chosen <= dm.chosen);
    assert!(one_se.lambda >= min.lambda);
    let se = ds.score_se.as_ref().unwrap();
    assert!(ds.scores[ds.chosen] <= dm.scores[dm.chosen] + se[dm.chosen]);
    assert!(dm.scores.iter().all(|&s| s >= dm.scores[dm.chosen]));
}

#[test]
fn difference_variance_estimate() {
    let mut rng = RngStream::new(404, 0);
    let noise: Vec<f64> = (0..10_000).map(|_| rng.standard_normal()).collect();
    let s2 = estimate_sigma_differences(&noise).unwrap();
    assert!((s2 - 1.0).abs() <= 0.05, "{s2}");
    let mut slope = 0.3;
    let mut level = 0.0;
    let trending: Vec<f64> = (0..2000)
        .map(|_| {
            if rng.uniform() < 0.1 {
                slope = rng.uniform() - 0.5;
            }
            level += slope;
            level + 0.1 * rng.standard_normal()
        })
        .collect();
    assert!(estimate_sigma_differences(&trending).unwrap() > 0.01 * 1.5);
}

#[test]
fn saturated_basis_blows_up_t_multiplier() {
    let n = 30;
    let t = unit(n);
    let knots: Vec<f64> = (2..n).map(|i| i as f64).collect();
    assert_eq!(knots.len(), n - 2);
    let a = falling_factorial_basis(&t, &knots, 1).unwrap();
    let df = (n - knots.len() - 1) as f64;
    assert_eq!(df, 1.0);
    let m = uniform_multiplier(&a, 0.05, Some(df)).unwrap();
    assert!(m.c.is_finite());
    let sparse = uniform_multiplier(&falling_factorial_basis(&t, &[15.0], 1).unwrap(), 0.05, Some((n - 2) as f64)).unwrap();
    assert!(m.c > 10.0 * sparse.c, "{} vs {}", m.c, sparse.c);
    let normal = solve_multiplier(m.curve_length, 0.05, None).unwrap();
    assert!(m.c > normal.c);
}

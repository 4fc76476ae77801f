use distkit::RngStream;
use trendfilter::{diff_matrix, objective, trendfilter_admm, DiffMatrix, TrendFilter};

struct Oracle {
    /// Best primal objective found.
    primal: f64,
    /// Dual objective of the final feasible dual point, a lower bound on the optimum.
    lower: f64,
}

/// Exact minimizer for a fixed active set: rows with `|uᵢ| = λ` carry the
/// penalty with sign `sign(uᵢ)`, the remaining rows are constrained to
/// `(Dx)ᵢ = 0`.
fn polish(d: &DiffMatrix, y: &[f64], u: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let dense = d.to_matrix();
    let on_boundary: Vec<bool> = u.iter().map(|v| v.abs() >= lambda * (1.0 - 1e-9)).collect();
    let mut shifted = y.to_vec();
    for (i, &b) in on_boundary.iter().enumerate() {
        if b {
            for (c, v) in d.row(i).iter().enumerate() {
                shifted[i + c] -= lambda * u[i].signum() * v;
            }
        }
    }
    let free: Vec<usize> = (0..u.len()).filter(|&i| !on_boundary[i]).collect();
    if free.is_empty() {
        return Some(shifted);
    }
    let sub = dense.select_rows(&free);
    let w = numkit::solve_spd(&sub.matmul(&sub.transpose()), &sub.matvec(&shifted)).ok()?;
    let back = sub.tr_matvec(&w);
    Some(shifted.iter().zip(&back).map(|(a, b)| a - b).collect())
}

/// Accelerated projected gradient with adaptive restart on the dual
/// `max ½‖y‖² − ½‖y − Dᵀu‖²` over `‖u‖∞ ≤ λ`, followed by an exact solve
/// on the active set read off the final dual point.
fn dual_oracle(d: &DiffMatrix, y: &[f64], lambda: f64, iterations: usize) -> Oracle {
    let step = 1.0 / 4f64.powi(d.order() as i32);
    let primal = |u: &[f64]| -> Vec<f64> { y.iter().zip(d.apply_transpose(u)).map(|(a, b)| a - b).collect() };
    let loss = |u: &[f64]| -> f64 { 0.5 * primal(u).iter().map(|v| v * v).sum::<f64>() };
    let mut u = vec![0.0; d.rows()];
    let mut v = u.clone();
    let mut momentum = 1.0f64;
    let mut last = loss(&u);
    let mut best = f64::INFINITY;
    for it in 0..iterations {
        let grad = d.apply(&primal(&v));
        let next: Vec<f64> = v
            .iter()
            .zip(&grad)
            .map(|(vi, gi)| (vi + step * gi).clamp(-lambda, lambda))
            .collect();
        let value = loss(&next);
        if value > last {
            momentum = 1.0;
            v = u.clone();
            continue;
        }
        let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / m_next;
        v = next.iter().zip(&u).map(|(a, b)| a + beta * (a - b)).collect();
        u = next;
        momentum = m_next;
        last = value;
        if it % 1000 == 0 {
            best = best.min(objective(d, y, &primal(&u), lambda));
        }
    }
    best = best.min(objective(d, y, &primal(&u), lambda));
    if let Some(x) = polish(d, y, &u, lambda) {
        best = best.min(objective(d, y, &x, lambda));
    }
    let norm_y: f64 = y.iter().map(|v| v * v).sum();
    Oracle {
        primal: best,
        lower: 0.5 * norm_y - loss(&u),
    }
}

#[test]
fn admm_matches_dual_oracle_on_random_instances() {
    let mut rng = RngStream::new(300, 0);
    for case in 0..20 {
        let n = 10 + rng.index(41);
        let k = case % 3;
        let y: Vec<f64> = (0..n)
            .map(|i| (i as f64 / 4.0).sin() + 0.3 * rng.standard_normal())
            .collect();
        let filter = TrendFilter::unit(n, k).unwrap();
        let lambda = filter.lambda_max(&y).unwrap() * (0.01 + 0.5 * rng.uniform());
        let oracle = dual_oracle(filter.diff(), &y, lambda, 1_000_000);
        let scale = 1.0 + oracle.primal.abs();
        let admm = trendfilter_admm(&y, k, lambda).unwrap();
        let ipm = filter.fit(&y, lambda).unwrap();
        for (name, fit) in [("admm", &admm), ("interior point", &ipm)] {
            assert!(oracle.lower <= fit.objective + 1e-12 * scale, "case {case}: dual bound above {name}");
            assert!(
                (fit.objective - oracle.primal).abs() <= 1e-6 * scale,
                "case {case} (n={n}, k={k}): {name} {} oracle {} lower bound {}",
                fit.objective,
                oracle.primal,
                oracle.lower
            );
        }
    }
}

#[test]
fn difference_operator_annihilates_polynomials_exactly() {
    for k in 0..5 {
        let n = k + 12;
        let d = diff_matrix(n, k).unwrap();
        for deg in 0..=k as u32 {
            for i in 0..d.rows() {
                let s: i128 = d
                    .row(i)
                    .iter()
                    .enumerate()
                    .map(|(c, &v)| {
                        assert_eq!(v.fract(), 0.0);
                        (v as i128) * ((i + c + 1) as i128).pow(deg)
                    })
                    .sum();
                assert_eq!(s, 0, "k={k} degree={deg} row={i}");
            }
        }
        let t: Vec<i128> = (1..=n as i128).collect();
        let top: i128 = d
            .row(0)
            .iter()
            .enumerate()
            .map(|(c, &v)| (v as i128) * t[c].pow(k as u32 + 1))
            .sum();
        assert_ne!(top, 0);
    }
}

#[test]
fn objective_decreases_as_iterations_grow() {
    let mut rng = RngStream::new(301, 0);
    let n = 40;
    let y: Vec<f64> = (0..n).map(|i| (i as f64 / 6.0).cos() + 0.2 * rng.standard_normal()).collect();
    let t: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let reference = trendfilter_admm(&y, 1, 0.5).unwrap();
    let mut prev = f64::INFINITY;
    for cap in [20, 80, 320, 1280] {
        let opts = trendfilter::AdmmOptions {
            max_iterations: cap,
            abs_tol: 0.0,
            rel_tol: 0.0,
            adaptive_rho: false,
            ..Default::default()
        };
        let filter = TrendFilter::with_solver(&t, 1, trendfilter::Solver::Admm(opts)).unwrap();
        let value = filter.fit_partial(&y, 0.5).unwrap().objective;
        assert!(value <= prev + 1e-6 * (1.0 + prev.abs()), "cap {cap}: {value} after {prev}");
        assert!(value >= reference.objective - 1e-6 * (1.0 + reference.objective));
        prev = value;
    }
    assert!((prev - reference.objective).abs() < 1e-3 * reference.objective);
}

use numkit::BandedCholesky;

use crate::diff::DiffMatrix;
use crate::TrendError;

/// Settings of the primal-dual interior-point solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteriorPointOptions {
    pub max_iterations: usize,
    /// Stop once the duality gap is below `gap_tol · max(1, |objective|)`.
    pub gap_tol: f64,
}

impl Default for InteriorPointOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gap_tol: 1e-8,
        }
    }
}

pub(crate) struct DualSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Exact minimizer for the active set read off a near-optimal dual point.
///
/// Rows whose dual slack `λ − |νᵢ|` is below `1e-4 λ` carry the penalty
/// with sign `sign(νᵢ)`; the others are constrained to `(Dx)ᵢ = 0`. The
/// candidate is returned only if it satisfies the optimality conditions.
fn polish(diff: &DiffMatrix, outer: &[Vec<f64>], y: &[f64], lambda: f64, nu: &[f64]) -> Option<Vec<f64>> {
    let bw = diff.width() - 1;
    let active: Vec<bool> = nu.iter().map(|v| lambda - v.abs() < 1e-4 * lambda).collect();
    let signs: Vec<f64> = nu
        .iter()
        .zip(&active)
        .map(|(v, &a)| if a { lambda * v.signum() } else { 0.0 })
        .collect();
    let shift = diff.apply_transpose(&signs);
    let shifted: Vec<f64> = y.iter().zip(&shift).map(|(a, b)| a - b).collect();
    let free: Vec<usize> = (0..nu.len()).filter(|&i| !active[i]).collect();
    let mut w_full = vec![0.0; nu.len()];
    if !free.is_empty() {
        let band: Vec<Vec<f64>> = (0..free.len())
            .map(|a| {
                (0..=bw)
                    .map(|d| match a.checked_sub(d) {
                        Some(c) if free[a] - free[c] <= bw => outer[free[a]][free[a] - free[c]],
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        let rhs_full = diff.apply(&shifted);
        let mut w: Vec<f64> = free.iter().map(|&i| rhs_full[i]).collect();
        BandedCholesky::new(&band, bw).ok()?.solve_in_place(&mut w);
        for (&i, wi) in free.iter().zip(&w) {
            if wi.abs() > lambda * (1.0 + 1e-9) {
                return None;
            }
            w_full[i] = *wi;
        }
    }
    let back = diff.apply_transpose(&w_full);
    let x: Vec<f64> = shifted.iter().zip(&back).map(|(a, b)| a - b).collect();
    let dx = diff.apply(&x);
    let scale = 1e-9 * x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let consistent = (0..nu.len()).all(|i| !active[i] || dx[i] * signs[i].signum() >= -scale);
    consistent.then_some(x)
}

/// Norm of the perturbed KKT residual at `ν + αΔν`, `μ + αΔμ`, given
/// `qn = DDᵀν` and `qd = DDᵀΔν`.
#[allow(clippy::too_many_arguments)]
fn residual_norm(
    lambda: f64,
    b: &[f64],
    nu: &[f64],
    qn: &[f64],
    mu: (&[f64], &[f64]),
    dir: (&[f64], &[f64], &[f64], &[f64]),
    alpha: f64,
    inv_t: f64,
) -> f64 {
    let (mu1, mu2) = mu;
    let (dnu, qd, dmu1, dmu2) = dir;
    let mut r = 0.0;
    for i in 0..nu.len() {
        let v = nu[i] + alpha * dnu[i];
        let (m1, m2) = (mu1[i] + alpha * dmu1[i], mu2[i] + alpha * dmu2[i]);
        let rd = qn[i] + alpha * qd[i] - b[i] + m1 - m2;
        let (c1, c2) = (m1 * (lambda - v) - inv_t, m2 * (lambda + v) - inv_t);
        r += rd * rd + c1 * c1 + c2 * c2;
    }
    r.sqrt()
}

/// Solves the dual `max −½νᵀDDᵀν + νᵀDy` over `‖ν‖∞ ≤ λ` by a primal-dual
/// interior-point method with banded Newton systems, returning the primal
/// solution `x = y − Dᵀν`.
pub(crate) fn solve(
    diff: &DiffMatrix,
    outer: &[Vec<f64>],
    y: &[f64],
    lambda: f64,
    opts: &InteriorPointOptions,
) -> Result<DualSolution, TrendError> {
    let m = diff.rows();
    let bw = diff.width() - 1;
    let b = diff.apply(y);
    let q_mul = |v: &[f64]| diff.apply(&diff.apply_transpose(v));
    let primal_of = |nu: &[f64]| -> Vec<f64> { y.iter().zip(diff.apply_transpose(nu)).map(|(a, c)| a - c).collect() };
    let mut nu = vec![0.0; m];
    let mut qn = vec![0.0; m];
    let mut mu1 = vec![1.0; m];
    let mut mu2 = vec![1.0; m];
    let mut dmu1 = vec![0.0; m];
    let mut dmu2 = vec![0.0; m];
    let mut band: Vec<Vec<f64>> = outer.to_vec();
    let mut t = 1e-10;
    let mut step = f64::INFINITY;
    let stalled = |x: Vec<f64>, it: usize| DualSolution {
        x,
        iterations: it,
        converged: false,
    };
    for it in 1..=opts.max_iterations {
        let x = primal_of(&nu);
        let fit: f64 = y.iter().zip(&x).map(|(a, c)| (a - c).powi(2)).sum();
        let primal = 0.5 * fit + lambda * diff.apply(&x).iter().map(|v| v.abs()).sum::<f64>();
        let nqn: f64 = nu.iter().zip(&qn).map(|(a, c)| a * c).sum();
        let nb: f64 = nu.iter().zip(&b).map(|(a, c)| a * c).sum();
        if primal - (nb - 0.5 * nqn) <= opts.gap_tol * primal.abs().max(1.0) {
            return Ok(DualSolution {
                x: polish(diff, outer, y, lambda, &nu).unwrap_or(x),
                iterations: it,
                converged: true,
            });
        }
        let surrogate: f64 = (0..m).map(|i| mu1[i] * (lambda - nu[i]) + mu2[i] * (lambda + nu[i])).sum();
        if step >= 0.2 {
            t = (20.0 * m as f64 / surrogate).max(1.2 * t);
        }
        let inv_t = 1.0 / t;
        let mut dnu = vec![0.0; m];
        for i in 0..m {
            let (s1, s2) = (lambda - nu[i], lambda + nu[i]);
            band[i].copy_from_slice(&outer[i]);
            band[i][0] += mu1[i] / s1 + mu2[i] / s2;
            dnu[i] = -(qn[i] - b[i]) - inv_t * (1.0 / s1 - 1.0 / s2);
        }
        match BandedCholesky::new(&band, bw) {
            Ok(chol) => chol.solve_in_place(&mut dnu),
            Err(_) => return Ok(stalled(x, it)),
        }
        let qd = q_mul(&dnu);
        let mut alpha: f64 = 1.0;
        for i in 0..m {
            let (s1, s2) = (lambda - nu[i], lambda + nu[i]);
            dmu1[i] = inv_t / s1 - mu1[i] + mu1[i] / s1 * dnu[i];
            dmu2[i] = inv_t / s2 - mu2[i] - mu2[i] / s2 * dnu[i];
            if dmu1[i] < 0.0 {
                alpha = alpha.min(-mu1[i] / dmu1[i]);
            }
            if dmu2[i] < 0.0 {
                alpha = alpha.min(-mu2[i] / dmu2[i]);
            }
            if dnu[i] > 0.0 {
                alpha = alpha.min(s1 / dnu[i]);
            }
            if dnu[i] < 0.0 {
                alpha = alpha.min(-s2 / dnu[i]);
            }
        }
        alpha = (0.99 * alpha).min(1.0);
        let dir = (&dnu[..], &qd[..], &dmu1[..], &dmu2[..]);
        let r0 = residual_norm(lambda, &b, &nu, &qn, (&mu1, &mu2), dir, 0.0, inv_t);
        let mut accepted = false;
        for _ in 0..60 {
            if residual_norm(lambda, &b, &nu, &qn, (&mu1, &mu2), dir, alpha, inv_t) <= (1.0 - 0.01 * alpha) * r0 {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Ok(stalled(x, it));
        }
        for i in 0..m {
            nu[i] += alpha * dnu[i];
            qn[i] += alpha * qd[i];
            mu1[i] += alpha * dmu1[i];
            mu2[i] += alpha * dmu2[i];
        }
        step = alpha;
    }
    Ok(stalled(primal_of(&nu), opts.max_iterations))
}

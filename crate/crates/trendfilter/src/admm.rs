use numkit::BandedCholesky;

use crate::diff::DiffMatrix;
use crate::ipm::{self, InteriorPointOptions};
use crate::select::SelectionDiagnostics;
use crate::TrendError;

/// Iteration cap of the ADMM solver.
pub const MAX_ITERATIONS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmmOptions {
    pub max_iterations: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Initial penalty parameter; `None` starts at `λ`.
    pub rho: Option<f64>,
    /// Rebalance `ρ` when primal and dual residuals drift apart.
    pub adaptive_rho: bool,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self {
            max_iterations: MAX_ITERATIONS,
            abs_tol: 1e-9,
            rel_tol: 1e-8,
            rho: None,
            adaptive_rho: true,
        }
    }
}

/// Algorithm used to minimize the trend filtering objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Solver {
    /// Primal-dual interior point on the dual box-constrained problem.
    InteriorPoint(InteriorPointOptions),
    /// ADMM on the split `z = Dx` with a banded `x` update.
    Admm(AdmmOptions),
}

impl Default for Solver {
    fn default() -> Self {
        Solver::InteriorPoint(InteriorPointOptions::default())
    }
}

/// A trend filtering fit at a single `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrendFit {
    pub fitted: Vec<f64>,
    pub lambda: f64,
    pub degree: usize,
    /// Rows of `D^(k+1)` where the fitted differences exceed the knot threshold.
    pub knot_rows: Vec<usize>,
    /// Positions of those knots on the time axis.
    pub knots: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Tuning-parameter search record when the fit came from a selection rule.
    pub selection: Option<SelectionDiagnostics>,
}

impl TrendFit {
    pub fn num_knots(&self) -> usize {
        self.knot_rows.len()
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Threshold above which a fitted difference counts as a knot.
pub fn knot_threshold(x: &[f64]) -> f64 {
    1e-6 * x.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// Position on the time axis of the knot carried by row `i` of `D^(k+1)`:
/// the middle of the `k + 2` positions the row spans.
pub fn knot_position(t: &[f64], k: usize, i: usize) -> f64 {
    let half = k + 1;
    0.5 * (t[i + half / 2] + t[i + half.div_ceil(2)])
}

/// `½‖y − x‖² + λ‖D x‖₁`.
pub fn objective(diff: &DiffMatrix, y: &[f64], x: &[f64], lambda: f64) -> f64 {
    let fit: f64 = y.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
    let pen: f64 = diff.apply(x).iter().map(|v| v.abs()).sum();
    0.5 * fit + lambda * pen
}

/// Scaled ADMM state carried between solves along a `λ` path.
#[derive(Clone, Debug, Default)]
pub struct WarmStart {
    z: Vec<f64>,
    u: Vec<f64>,
    rho: f64,
}

/// Trend filter of fixed degree over fixed positions.
#[derive(Clone, Debug)]
pub struct TrendFilter {
    positions: Vec<f64>,
    diff: DiffMatrix,
    gram: Vec<Vec<f64>>,
    outer: Vec<Vec<f64>>,
    solver: Solver,
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl TrendFilter {
    pub fn new(positions: &[f64], degree: usize) -> Result<Self, TrendError> {
        Self::with_solver(positions, degree, Solver::default())
    }

    /// Unit-spaced positions `1, …, n`.
    pub fn unit(n: usize, degree: usize) -> Result<Self, TrendError> {
        let t: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        Self::new(&t, degree)
    }

    pub fn with_solver(positions: &[f64], degree: usize, solver: Solver) -> Result<Self, TrendError> {
        let diff = DiffMatrix::with_positions(positions, degree)?;
        let gram = diff.gram_band();
        let outer = diff.outer_band();
        Ok(Self {
            positions: positions.to_vec(),
            diff,
            gram,
            outer,
            solver,
        })
    }

    pub fn solver(&self) -> Solver {
        self.solver
    }

    pub fn diff(&self) -> &DiffMatrix {
        &self.diff
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn degree(&self) -> usize {
        self.diff.degree()
    }

    /// Smallest `λ` at which the fit is the least-squares polynomial of
    /// degree `k`: `‖(DDᵀ)⁻¹ D y‖∞`.
    pub fn lambda_max(&self, y: &[f64]) -> Result<f64, TrendError> {
        self.check_len(y)?;
        Ok(sup_norm(&self.free_dual(y)?))
    }

    /// Unconstrained dual optimum `(DDᵀ)⁻¹ D y`.
    fn free_dual(&self, y: &[f64]) -> Result<Vec<f64>, TrendError> {
        let chol = BandedCholesky::new(&self.outer, self.diff.width() - 1)?;
        let mut u = self.diff.apply(y);
        chol.solve_in_place(&mut u);
        Ok(u)
    }

    fn check_len(&self, y: &[f64]) -> Result<(), TrendError> {
        if y.len() != self.positions.len() {
            return Err(TrendError::InvalidArgument(format!(
                "series has {} values for {} positions",
                y.len(),
                self.positions.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(TrendError::InvalidArgument("series contains non-finite values".into()));
        }
        Ok(())
    }

    fn factor(&self, rho: f64) -> Result<BandedCholesky, TrendError> {
        let mut band = self.gram.clone();
        for row in &mut band {
            row.iter_mut().for_each(|v| *v *= rho);
            row[0] += 1.0;
        }
        Ok(BandedCholesky::new(&band, self.diff.width() - 1)?)
    }

    pub fn fit(&self, y: &[f64], lambda: f64) -> Result<TrendFit, TrendError> {
        self.fit_warm(y, lambda, &mut WarmStart::default())
    }

    /// Fits a decreasing sequence of `λ` values, warm-starting each solve.
    pub fn fit_path(&self, y: &[f64], lambdas: &[f64]) -> Result<Vec<TrendFit>, TrendError> {
        let mut warm = WarmStart::default();
        lambdas.iter().map(|&l| self.fit_warm(y, l, &mut warm)).collect()
    }

    pub fn fit_warm(&self, y: &[f64], lambda: f64, warm: &mut WarmStart) -> Result<TrendFit, TrendError> {
        let (fit, converged) = self.run(y, lambda, warm)?;
        if converged {
            Ok(fit)
        } else {
            Err(TrendError::NoConvergence {
                iterations: fit.iterations,
            })
        }
    }

    /// Runs at most the solver's iteration cap from a cold start and
    /// returns the last iterate whether or not the stopping rule was met.
    pub fn fit_partial(&self, y: &[f64], lambda: f64) -> Result<TrendFit, TrendError> {
        Ok(self.run(y, lambda, &mut WarmStart::default())?.0)
    }

    fn run(&self, y: &[f64], lambda: f64, warm: &mut WarmStart) -> Result<(TrendFit, bool), TrendError> {
        self.check_len(y)?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(TrendError::InvalidArgument(format!("lambda {lambda} must be finite and nonnegative")));
        }
        if lambda == 0.0 {
            return Ok((self.finish(y, y.to_vec(), 0.0, 0), true));
        }
        let free = self.free_dual(y)?;
        if sup_norm(&free) <= lambda {
            let back = self.diff.apply_transpose(&free);
            let x = y.iter().zip(&back).map(|(a, b)| a - b).collect();
            return Ok((self.finish(y, x, lambda, 0), true));
        }
        match &self.solver {
            Solver::Admm(opts) => self.run_admm(y, lambda, warm, opts),
            Solver::InteriorPoint(opts) => {
                let sol = ipm::solve(&self.diff, &self.outer, y, lambda, opts)?;
                Ok((self.finish(y, sol.x, lambda, sol.iterations), sol.converged))
            }
        }
    }

    fn run_admm(
        &self,
        y: &[f64],
        lambda: f64,
        warm: &mut WarmStart,
        opts: &AdmmOptions,
    ) -> Result<(TrendFit, bool), TrendError> {
        let m = self.diff.rows();
        let mut rho = opts.rho.unwrap_or(lambda);
        let (mut z, mut u) = if warm.z.len() == m && warm.rho > 0.0 {
            let s = warm.rho / rho;
            (warm.z.clone(), warm.u.iter().map(|v| v * s).collect())
        } else {
            (self.diff.apply(y), vec![0.0; m])
        };
        let mut chol = self.factor(rho)?;
        let (sqrt_m, sqrt_n) = ((m as f64).sqrt(), (y.len() as f64).sqrt());
        let mut x = y.to_vec();
        for it in 1..=opts.max_iterations {
            let zu: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a - b).collect();
            let back = self.diff.apply_transpose(&zu);
            x.iter_mut()
                .zip(y.iter().zip(&back))
                .for_each(|(xi, (yi, bi))| *xi = yi + rho * bi);
            chol.solve_in_place(&mut x);
            let dx = self.diff.apply(&x);
            let z_old = std::mem::take(&mut z);
            z = dx.iter().zip(&u).map(|(d, ui)| soft(d + ui, lambda / rho)).collect();
            for ((ui, d), zi) in u.iter_mut().zip(&dx).zip(&z) {
                *ui += d - zi;
            }
            let primal = norm(&dx.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>());
            let dz: Vec<f64> = z.iter().zip(&z_old).map(|(a, b)| a - b).collect();
            let dual = rho * norm(&self.diff.apply_transpose(&dz));
            let eps_pri = sqrt_m * opts.abs_tol + opts.rel_tol * norm(&dx).max(norm(&z));
            let eps_dual = sqrt_n * opts.abs_tol + opts.rel_tol * rho * norm(&self.diff.apply_transpose(&u));
            if primal <= eps_pri && dual <= eps_dual {
                *warm = WarmStart { z, u, rho };
                return Ok((self.finish(y, x, lambda, it), true));
            }
            if opts.adaptive_rho && it % 10 == 0 {
                let scale = if primal > 10.0 * dual {
                    2.0
                } else if dual > 10.0 * primal {
                    0.5
                } else {
                    1.0
                };
                if scale != 1.0 {
                    rho *= scale;
                    u.iter_mut().for_each(|v| *v /= scale);
                    chol = self.factor(rho)?;
                }
            }
        }
        Ok((self.finish(y, x, lambda, opts.max_iterations), false))
    }

    fn finish(&self, y: &[f64], fitted: Vec<f64>, lambda: f64, iterations: usize) -> TrendFit {
        let k = self.degree();
        let thr = knot_threshold(&fitted);
        let knot_rows: Vec<usize> = self
            .diff
            .apply(&fitted)
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > thr)
            .map(|(i, _)| i)
            .collect();
        let knots = knot_rows.iter().map(|&i| knot_position(&self.positions, k, i)).collect();
        TrendFit {
            objective: objective(&self.diff, y, &fitted, lambda),
            fitted,
            lambda,
            degree: k,
            knot_rows,
            knots,
            iterations,
            selection: None,
        }
    }
}

/// Degree-`k` trend filter of `y` at unit-spaced positions, solved by ADMM.
pub fn trendfilter_admm(y: &[f64], k: usize, lambda: f64) -> Result<TrendFit, TrendError> {
    let t: Vec<f64> = (1..=y.len()).map(|i| i as f64).collect();
    TrendFilter::with_solver(&t, k, Solver::Admm(AdmmOptions::default()))?.fit(y, lambda)
}

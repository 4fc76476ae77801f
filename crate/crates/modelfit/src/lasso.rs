use numkit::{solve_spd, sym_eigen, Matrix};

use crate::{Design, Family, ModelError};

/// Sweep cap for one coordinate-descent solve.
const MAX_SWEEPS: usize = 100_000;
/// Stopping threshold on the largest weighted squared coordinate update,
/// relative to the weighted spread of the working response.
const SWEEP_TOLERANCE: f64 = 1e-20;
/// Sweeps between attempts to solve the KKT system on the current support.
const REFINE_EVERY: usize = 100;
/// Relative eigenvalue below which a support Gram matrix counts as singular.
const RANK_TOLERANCE: f64 = 1e-10;
/// Outer proximal-Newton iterations per λ for non-Gaussian families.
const MAX_OUTER: usize = 200;
/// The path stops once this fraction of the null deviance is explained.
const MAX_DEVIANCE_RATIO: f64 = 0.999;
/// The path also stops once one step gains less than this relative share
/// of explained deviance.
const MIN_DEVIANCE_GAIN: f64 = 1e-5;

/// Lasso coefficient path over a descending λ grid.
///
/// The objective at each λ is `½ Σ w̃ᵢ dᵢ + λ Σⱼ |bⱼ|` where `w̃` are the
/// prior weights normalized to sum to one, `dᵢ` is the unit deviance and
/// `bⱼ` the coefficient of the standardized covariate `j`. Coefficients are
/// reported on the original covariate scale.
#[derive(Clone, Debug)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    /// One row of original-scale coefficients per fitted λ.
    pub coefficients: Matrix,
    pub intercepts: Vec<f64>,
    /// Weighted deviance at each fitted λ.
    pub deviance: Vec<f64>,
    pub null_deviance: f64,
    family: Family,
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl LassoPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn coefficients_at(&self, k: usize) -> &[f64] {
        self.coefficients.row(k)
    }

    /// Indices of the nonzero coefficients at grid point `k`.
    pub fn support(&self, k: usize) -> Vec<usize> {
        self.coefficients_at(k)
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    /// Linear predictor at grid point `k` for new covariate rows.
    pub fn predict_link(&self, x: &Matrix, offset: &[f64], k: usize) -> Vec<f64> {
        x.matvec(self.coefficients_at(k))
            .iter()
            .zip(offset)
            .map(|(e, o)| e + o + self.intercepts[k])
            .collect()
    }

    /// Largest violation of the optimality conditions at grid point `k`,
    /// measured on the standardized scale.
    pub fn kkt_violation(&self, design: &Design, k: usize) -> f64 {
        let lambda = self.lambdas[k];
        let w = normalized(design.weights());
        let eta = self.predict_link(design.x(), design.offset(), k);
        let resid: Vec<f64> = design
            .y()
            .iter()
            .zip(&eta)
            .zip(&w)
            .map(|((y, e), w)| w * (y - self.family.mean(*e)))
            .collect();
        let mut worst = resid.iter().sum::<f64>().abs();
        for (j, &b) in self.coefficients_at(k).iter().enumerate() {
            if self.scales[j] == 0.0 {
                continue;
            }
            let grad: f64 = (0..design.n())
                .map(|i| (design.x()[(i, j)] - self.means[j]) / self.scales[j] * resid[i])
                .sum();
            let v = if b == 0.0 {
                (grad.abs() - lambda).max(0.0)
            } else {
                (grad - lambda * b.signum()).abs()
            };
            worst = worst.max(v);
        }
        worst
    }
}

fn normalized(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Covariates centered and scaled by their weighted population standard
/// deviation, stored by column. Constant columns have scale zero and are
/// never updated.
struct Standardized {
    cols: Vec<Vec<f64>>,
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl Standardized {
    fn new(x: &Matrix, w: &[f64]) -> Self {
        let (n, p) = (x.rows(), x.cols());
        let mut cols = Vec::with_capacity(p);
        let mut means = Vec::with_capacity(p);
        let mut scales = Vec::with_capacity(p);
        for j in 0..p {
            let c = x.col(j);
            let m: f64 = c.iter().zip(w).map(|(x, w)| x * w).sum();
            let var: f64 = c.iter().zip(w).map(|(x, w)| w * (x - m).powi(2)).sum();
            let s = var.sqrt();
            let s = if s > 1e-12 * (1.0 + m.abs()) { s } else { 0.0 };
            cols.push(if s > 0.0 {
                c.iter().map(|x| (x - m) / s).collect()
            } else {
                vec![0.0; n]
            });
            means.push(m);
            scales.push(s);
        }
        Self { cols, means, scales }
    }

    fn linear(&self, b0: f64, b: &[f64], offset: &[f64]) -> Vec<f64> {
        let mut eta: Vec<f64> = offset.iter().map(|o| o + b0).collect();
        for (c, &bj) in self.cols.iter().zip(b) {
            if bj != 0.0 {
                for (e, x) in eta.iter_mut().zip(c) {
                    *e += bj * x;
                }
            }
        }
        eta
    }
}

/// Minimizes `½ Σ vᵢ (zᵢ − b₀ − x̃ᵢᵀb)² + λ‖b‖₁` by cyclic coordinate
/// descent starting from `(b0, b)`.
fn penalized_wls(
    xs: &Standardized,
    z: &[f64],
    v: &[f64],
    lambda: f64,
    b0: &mut f64,
    b: &mut [f64],
) -> Result<(), ModelError> {
    let zero = vec![0.0; z.len()];
    let eta = xs.linear(*b0, b, &zero);
    let mut r: Vec<f64> = z.iter().zip(&eta).map(|(z, e)| z - e).collect();
    let vsum: f64 = v.iter().sum();
    let zbar = z.iter().zip(v).map(|(z, v)| z * v).sum::<f64>() / vsum;
    let spread: f64 = z.iter().zip(v).map(|(z, v)| v * (z - zbar).powi(2)).sum();
    let tolerance = SWEEP_TOLERANCE * spread.max(f64::MIN_POSITIVE);
    let curv: Vec<f64> = xs
        .cols
        .iter()
        .map(|c| c.iter().zip(v).map(|(x, v)| v * x * x).sum())
        .collect();
    for sweep in 1..=MAX_SWEEPS {
        if sweep % REFINE_EVERY == 0 {
            if refine_on_support(xs, z, v, lambda, b0, b) {
                return Ok(());
            }
            let eta = xs.linear(*b0, b, &zero);
            r.iter_mut().zip(z.iter().zip(&eta)).for_each(|(r, (z, e))| *r = z - e);
        }
        let mut max_change = 0.0f64;
        let shift = r.iter().zip(v).map(|(r, v)| r * v).sum::<f64>() / vsum;
        if shift != 0.0 {
            *b0 += shift;
            r.iter_mut().for_each(|r| *r -= shift);
            max_change = max_change.max(vsum * shift * shift);
        }
        for (j, c) in xs.cols.iter().enumerate() {
            let h = curv[j];
            if xs.scales[j] == 0.0 || h <= 0.0 {
                continue;
            }
            let g: f64 = c.iter().zip(&r).zip(v).map(|((x, r), v)| x * r * v).sum();
            let new = soft_threshold(h * b[j] + g, lambda) / h;
            let delta = new - b[j];
            if delta != 0.0 {
                for (ri, x) in r.iter_mut().zip(c) {
                    *ri -= delta * x;
                }
                b[j] = new;
                max_change = max_change.max(h * delta * delta);
            }
        }
        if max_change < tolerance {
            return Ok(());
        }
    }
    Err(ModelError::NoConvergence { iterations: MAX_SWEEPS })
}

/// Moves `(b0, b)` along `direction`, a null vector of the Gram matrix of
/// the intercept and `support`, in the sense that does not increase the ℓ1
/// norm, until the first support coefficient reaches zero. The fitted values
/// are unchanged by the move.
fn drop_along_null_direction(direction: &[f64], support: &[usize], b0: &mut f64, b: &mut [f64]) -> bool {
    let slope: f64 = support.iter().zip(&direction[1..]).map(|(&j, d)| b[j].signum() * d).sum();
    let sense = if slope > 0.0 { -1.0 } else { 1.0 };
    let Some((drop, step)) = support
        .iter()
        .zip(&direction[1..])
        .filter(|(&j, d)| b[j] * sense * *d < 0.0)
        .map(|(&j, d)| (j, -b[j] / (sense * d)))
        .min_by(|a, c| a.1.total_cmp(&c.1))
    else {
        return false;
    };
    *b0 += step * sense * direction[0];
    for (&j, d) in support.iter().zip(&direction[1..]) {
        b[j] += step * sense * d;
    }
    b[drop] = 0.0;
    true
}

/// Active-set refinement: solves the stationarity equations of the
/// weighted lasso with the support and signs of `b` held fixed. When that
/// solution would flip a sign, `b` moves along the segment towards it until
/// the first coefficient reaches zero, which then leaves the support. Returns
/// `true` once a sign-consistent solution also satisfies the subgradient
/// bound off the support; `b0` and `b` then hold the exact minimizer.
fn refine_on_support(xs: &Standardized, z: &[f64], v: &[f64], lambda: f64, b0: &mut f64, b: &mut [f64]) -> bool {
    let dot = |a: Option<&[f64]>, c: Option<&[f64]>, r: &[f64]| -> f64 {
        (0..r.len()).map(|i| v[i] * a.map_or(1.0, |a| a[i]) * c.map_or(1.0, |c| c[i]) * r[i]).sum()
    };
    let ones = vec![1.0; z.len()];
    loop {
        let support: Vec<usize> = (0..b.len()).filter(|&j| b[j] != 0.0).collect();
        let k = support.len() + 1;
        let column = |i: usize| -> Option<&[f64]> { (i > 0).then(|| xs.cols[support[i - 1]].as_slice()) };
        let mut gram = vec![0.0; k * k];
        let mut rhs = vec![0.0; k];
        for a in 0..k {
            for c in a..k {
                let g = dot(column(a), column(c), &ones);
                gram[a * k + c] = g;
                gram[c * k + a] = g;
            }
            rhs[a] = dot(column(a), None, z) - if a > 0 { lambda * b[support[a - 1]].signum() } else { 0.0 };
        }
        let Ok(gram) = Matrix::new(k, k, gram) else { return false };
        let Ok(eigen) = sym_eigen(&gram) else { return false };
        if eigen.values[k - 1] <= RANK_TOLERANCE * eigen.values[0] {
            if !drop_along_null_direction(&eigen.vectors.col(k - 1), &support, b0, b) {
                return false;
            }
            continue;
        }
        let Ok(sol) = solve_spd(&gram, &rhs) else { return false };
        let blocking = support
            .iter()
            .zip(&sol[1..])
            .filter(|(&j, s)| *s * b[j].signum() <= 0.0)
            .map(|(&j, s)| (j, b[j] / (b[j] - s)))
            .min_by(|a, c| a.1.total_cmp(&c.1));
        if let Some((drop, step)) = blocking {
            *b0 += step * (sol[0] - *b0);
            for (&j, s) in support.iter().zip(&sol[1..]) {
                b[j] += step * (s - b[j]);
            }
            b[drop] = 0.0;
            continue;
        }
        let mut r: Vec<f64> = z.iter().map(|z| z - sol[0]).collect();
        for (&j, s) in support.iter().zip(&sol[1..]) {
            for (ri, x) in r.iter_mut().zip(&xs.cols[j]) {
                *ri -= s * x;
            }
        }
        *b0 = sol[0];
        for (&j, s) in support.iter().zip(&sol[1..]) {
            b[j] = *s;
        }
        let bound = lambda * (1.0 + 1e-9);
        return (0..b.len())
            .filter(|j| b[*j] == 0.0 && xs.scales[*j] > 0.0)
            .all(|j| dot(Some(&xs.cols[j]), None, &r).abs() <= bound);
    }
}

struct Problem<'a> {
    design: &'a Design,
    xs: Standardized,
    w: Vec<f64>,
}

impl Problem<'_> {
    fn half_deviance(&self, eta: &[f64]) -> f64 {
        let fam = self.design.family();
        0.5 * self
            .design
            .y()
            .iter()
            .zip(eta)
            .zip(&self.w)
            .map(|((y, e), w)| w * fam.unit_deviance(*y, fam.mean(*e)))
            .sum::<f64>()
    }

    fn objective(&self, b0: f64, b: &[f64], lambda: f64) -> f64 {
        let eta = self.xs.linear(b0, b, self.design.offset());
        self.half_deviance(&eta) + lambda * b.iter().map(|x| x.abs()).sum::<f64>()
    }

    /// Intercept-only maximum-likelihood fit.
    fn null_intercept(&self) -> Result<f64, ModelError> {
        let fam = self.design.family();
        let (y, off) = (self.design.y(), self.design.offset());
        let ybar: f64 = y.iter().zip(&self.w).map(|(y, w)| y * w).sum();
        if fam == Family::Gaussian {
            return Ok(ybar - off.iter().zip(&self.w).map(|(o, w)| o * w).sum::<f64>());
        }
        let degenerate = match fam {
            Family::Poisson => ybar <= 0.0,
            _ => ybar <= 0.0 || ybar >= 1.0,
        };
        if degenerate {
            return Err(ModelError::InvalidResponse(format!(
                "{} response has no variation to fit",
                fam.name()
            )));
        }
        let obar: f64 = off.iter().zip(&self.w).map(|(o, w)| o * w).sum();
        let mut b0 = fam.link(ybar) - obar;
        for _ in 0..200 {
            let (mut grad, mut hess) = (0.0, 0.0);
            for i in 0..y.len() {
                let mu = fam.mean(off[i] + b0);
                grad += self.w[i] * (y[i] - mu);
                hess += self.w[i] * fam.mean_derivative(mu);
            }
            let step = grad / hess;
            b0 += step;
            if step.abs() < 1e-14 * (1.0 + b0.abs()) {
                return Ok(b0);
            }
        }
        Err(ModelError::NoConvergence { iterations: 200 })
    }

    fn gradient_at_null(&self, b0: f64) -> f64 {
        let fam = self.design.family();
        let eta: Vec<f64> = self.design.offset().iter().map(|o| o + b0).collect();
        let resid: Vec<f64> = self
            .design
            .y()
            .iter()
            .zip(&eta)
            .zip(&self.w)
            .map(|((y, e), w)| w * (y - fam.mean(*e)))
            .collect();
        self.xs
            .cols
            .iter()
            .map(|c| c.iter().zip(&resid).map(|(x, r)| x * r).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    fn solve(&self, lambda: f64, b0: &mut f64, b: &mut [f64]) -> Result<(), ModelError> {
        let fam = self.design.family();
        let (y, off) = (self.design.y(), self.design.offset());
        if fam == Family::Gaussian {
            let z: Vec<f64> = y.iter().zip(off).map(|(y, o)| y - o).collect();
            return penalized_wls(&self.xs, &z, &self.w, lambda, b0, b);
        }
        let mut obj = self.objective(*b0, b, lambda);
        for _ in 0..MAX_OUTER {
            let eta = self.xs.linear(*b0, b, off);
            let mut v = vec![0.0; y.len()];
            let mut z = vec![0.0; y.len()];
            for i in 0..y.len() {
                let mu = fam.mean(eta[i]);
                let d = fam.mean_derivative(mu).max(1e-10);
                v[i] = self.w[i] * d;
                z[i] = eta[i] - off[i] + (y[i] - mu) / d;
            }
            let (mut nb0, mut nb) = (*b0, b.to_vec());
            penalized_wls(&self.xs, &z, &v, lambda, &mut nb0, &mut nb)?;
            let mut t = 1.0;
            let mut cand_obj;
            let (mut cb0, mut cb) = (nb0, nb.clone());
            loop {
                cand_obj = self.objective(cb0, &cb, lambda);
                if cand_obj.is_finite() && cand_obj <= obj + 1e-13 * obj.abs().max(1.0) {
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    return Err(ModelError::NoConvergence { iterations: MAX_OUTER });
                }
                cb0 = *b0 + t * (nb0 - *b0);
                for j in 0..b.len() {
                    cb[j] = b[j] + t * (nb[j] - b[j]);
                }
            }
            let change = (cb0 - *b0).abs().max(
                cb.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
            );
            *b0 = cb0;
            b.copy_from_slice(&cb);
            let stalled = obj - cand_obj <= 1e-15 * obj.abs().max(1.0);
            obj = cand_obj;
            if change < 1e-12 || (stalled && change < 1e-8) {
                return Ok(());
            }
        }
        Err(ModelError::NoConvergence { iterations: MAX_OUTER })
    }
}

fn problem(design: &Design) -> Result<Problem<'_>, ModelError> {
    if design.n() < 2 {
        return Err(ModelError::InvalidArgument("lasso needs at least two observations".into()));
    }
    let w = normalized(design.weights());
    let xs = Standardized::new(design.x(), &w);
    Ok(Problem { design, xs, w })
}

/// Smallest λ at which every penalized coefficient is zero:
/// `max_j |Σ w̃ᵢ x̃ᵢⱼ (yᵢ − μ̂₀ᵢ)|`, with `μ̂₀` the intercept-only fit.
pub fn lambda_max(design: &Design) -> Result<f64, ModelError> {
    let prob = problem(design)?;
    let b0 = prob.null_intercept()?;
    Ok(prob.gradient_at_null(b0))
}

/// `count` log-spaced values from `max` down to `ratio · max`.
pub fn lambda_grid(max: f64, count: usize, ratio: f64) -> Result<Vec<f64>, ModelError> {
    if !(max > 0.0 && max.is_finite()) || count == 0 || !(ratio > 0.0 && ratio < 1.0) {
        return Err(ModelError::InvalidArgument(format!(
            "cannot build a λ grid from max {max}, count {count}, ratio {ratio}"
        )));
    }
    if count == 1 {
        return Ok(vec![max]);
    }
    let step = ratio.ln() / (count - 1) as f64;
    Ok((0..count).map(|k| max * (step * k as f64).exp()).collect())
}

/// Fits the lasso along `lambdas`, or along 100 log-spaced values from
/// `lambda_max` down to `1e-3 · lambda_max` when no grid is given.
///
/// The path stops early once the fit explains 99.9% of the null deviance
/// or a step adds less than a 10⁻⁵ relative share of explained deviance;
/// `LassoPath::lambdas` lists the values actually fitted.
pub fn lasso_path(design: &Design, lambdas: Option<&[f64]>) -> Result<LassoPath, ModelError> {
    let prob = problem(design)?;
    let null_b0 = prob.null_intercept()?;
    let grid = match lambdas {
        Some(g) => {
            if g.is_empty() || g.iter().any(|l| !(*l >= 0.0)) || g.windows(2).any(|w| w[1] > w[0]) {
                return Err(ModelError::InvalidArgument("λ grid must be nonnegative and descending".into()));
            }
            g.to_vec()
        }
        None => lambda_grid(prob.gradient_at_null(null_b0), 100, 1e-3)?,
    };
    let null_eta: Vec<f64> = design.offset().iter().map(|o| o + null_b0).collect();
    let null_dev = 2.0 * prob.half_deviance(&null_eta);
    let total_w: f64 = design.weights().iter().sum();
    let p = design.p();

    let (mut b0, mut b) = (null_b0, vec![0.0; p]);
    let mut fitted = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut intercepts = Vec::new();
    let mut deviance = Vec::new();
    let mut previous_explained = 0.0;
    for &lambda in &grid {
        prob.solve(lambda, &mut b0, &mut b)?;
        let beta: Vec<f64> = b
            .iter()
            .zip(&prob.xs.scales)
            .map(|(bj, s)| if *s > 0.0 { bj / s } else { 0.0 })
            .collect();
        let intercept = b0 - beta.iter().zip(&prob.xs.means).map(|(b, m)| b * m).sum::<f64>();
        let eta = prob.xs.linear(b0, &b, design.offset());
        let dev = 2.0 * prob.half_deviance(&eta);
        fitted.push(lambda);
        rows.extend_from_slice(&beta);
        intercepts.push(intercept);
        deviance.push(dev * total_w);
        if null_dev > 0.0 {
            let explained = 1.0 - dev / null_dev;
            let gain = explained - previous_explained;
            if explained > MAX_DEVIANCE_RATIO || (fitted.len() > 1 && gain < MIN_DEVIANCE_GAIN * explained) {
                break;
            }
            previous_explained = explained;
        }
    }
    let k = fitted.len();
    Ok(LassoPath {
        lambdas: fitted,
        coefficients: Matrix::new(k, p, rows).expect("row-major path has k·p entries"),
        intercepts,
        deviance,
        null_deviance: null_dev * total_w,
        family: design.family(),
        means: prob.xs.means,
        scales: prob.xs.scales,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_log_spaced() {
        let g = lambda_grid(2.0, 5, 1e-4).unwrap();
        assert_eq!(g[0], 2.0);
        assert!((g[4] - 2e-4).abs() < 1e-16);
        assert!((g[1] / g[0] - g[3] / g[2]).abs() < 1e-12);
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn rejects_ascending_grid() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let d = Design::new(x, vec![1.0, 0.0, 2.0], Family::Gaussian).unwrap();
        assert!(lasso_path(&d, Some(&[0.1, 0.2])).is_err());
    }
}

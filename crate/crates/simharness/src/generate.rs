//! Data generators for each experiment family.

use distkit::RngStream;
use numkit::Matrix;

/// Columns per block of the block-Toeplitz covariance.
pub const TOEPLITZ_BLOCK: usize = 20;

/// Rows `0..n-1` drawn independently (the first `binary_cols` columns
/// Bernoulli(1/2), the rest standard normal); the last row is
/// `gamma · (max_i |X_i1|, …, max_i |X_ip|)` over those rows.
pub fn leverage_design(n: usize, p: usize, gamma: f64, binary_cols: usize, rng: &mut RngStream) -> Matrix {
    let mut x = Matrix::zeros(n, p);
    for i in 0..n - 1 {
        for j in 0..p {
            x[(i, j)] = if j < binary_cols {
                f64::from(u8::from(rng.uniform() < 0.5))
            } else {
                rng.standard_normal()
            };
        }
    }
    for j in 0..p {
        let m = (0..n - 1).map(|i| x[(i, j)].abs()).fold(0.0, f64::max);
        x[(n - 1, j)] = gamma * m;
    }
    x
}

/// The `d × d` Toeplitz correlation matrix with entries `rho^|i−j|`.
pub fn toeplitz_block(d: usize, rho: f64) -> Matrix {
    Matrix::from_fn(d, d, |i, j| rho.powi(i.abs_diff(j) as i32))
}

/// Independent rows whose Gaussian columns have block-diagonal covariance
/// with `TOEPLITZ_BLOCK`-wide Toeplitz blocks; the first `binary_cols`
/// columns are then replaced by Bernoulli(1/2) draws.
///
/// Within a block the columns follow the stationary AR(1) recursion
/// `x₁ = z₁`, `x_k = ρ x_{k−1} + √(1 − ρ²) z_k`, whose covariance is
/// exactly `toeplitz_block(TOEPLITZ_BLOCK, rho)`.
pub fn toeplitz_design(n: usize, p: usize, rho: f64, binary_cols: usize, rng: &mut RngStream) -> Matrix {
    let innovation = (1.0 - rho * rho).sqrt();
    let mut x = Matrix::zeros(n, p);
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z = rng.standard_normal();
            prev = if j % TOEPLITZ_BLOCK == 0 { z } else { rho * prev + innovation * z };
            x[(i, j)] = prev;
        }
        for j in 0..binary_cols.min(p) {
            x[(i, j)] = f64::from(u8::from(rng.uniform() < 0.5));
        }
    }
    x
}

/// Coefficients of the leverage setups: `s · (1, 1, −1, 1)` on covariates
/// 1, 16, 17 and 18 (one-based).
pub fn leverage_beta(p: usize, s: f64) -> Vec<f64> {
    let mut beta = vec![0.0; p];
    for (j, sign) in [(0, 1.0), (15, 1.0), (16, -1.0), (17, 1.0)] {
        beta[j] = s * sign;
    }
    beta
}

/// Coefficients of the large-sample setups: `s` on covariates 1 and 3–22
/// (one-based) and `s · tail_value` on the last `tail_len` covariates.
pub fn sparse_beta(p: usize, s: f64, tail_len: usize, tail_value: f64) -> Vec<f64> {
    let mut beta = vec![0.0; p];
    beta[0] = s;
    beta[2..22].iter_mut().for_each(|b| *b = s);
    beta[p - tail_len..].iter_mut().for_each(|b| *b = s * tail_value);
    beta
}

/// Means on a `side × side` grid spanning `[-100, 100]²`: `inside` on the
/// centred disc of the given radius and `outside` elsewhere, row-major.
pub fn circle_means(side: usize, radius: f64, inside: f64, outside: f64) -> Vec<f64> {
    let coord = |k: usize| -100.0 + 200.0 * k as f64 / (side - 1) as f64;
    (0..side * side)
        .map(|i| {
            let (a, b) = (coord(i / side), coord(i % side));
            if a * a + b * b <= radius * radius {
                inside
            } else {
                outside
            }
        })
        .collect()
}

/// Piecewise-linear trend `f₀(1), …, f₀(n)` with `f₀(0) = 0`. The slope
/// starts uniform on `[−range, range]` and before each later step is redrawn
/// from the same law with probability `p_knot`.
pub fn random_trend(n: usize, p_knot: f64, range: f64, rng: &mut RngStream) -> Vec<f64> {
    let draw = |rng: &mut RngStream| range * (2.0 * rng.uniform() - 1.0);
    let mut slope = draw(rng);
    let mut level = 0.0;
    (0..n)
        .map(|t| {
            if t > 0 && rng.uniform() < p_knot {
                slope = draw(rng);
            }
            level += slope;
            level
        })
        .collect()
}

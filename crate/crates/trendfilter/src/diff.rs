use crate::TrendError;

/// The difference operator `D^(k+1)` over a set of increasing positions.
///
/// Row `i` has nonzero entries only in columns `i..=i+k+1`; they are stored
/// contiguously. For unit-spaced positions the operator is the integer
/// matrix `D^(k+1) = D^(1) D^(k)`. For general positions each recursion step
/// rescales by `j / (t_{i+j} − t_i)`, so the operator still annihilates
/// polynomials of degree `k` evaluated at the positions.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffMatrix {
    n: usize,
    degree: usize,
    coef: Vec<f64>,
}

/// `D^(k+1)` for `n` unit-spaced points.
pub fn diff_matrix(n: usize, k: usize) -> Result<DiffMatrix, TrendError> {
    let t: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    DiffMatrix::with_positions(&t, k)
}

impl DiffMatrix {
    pub fn with_positions(t: &[f64], k: usize) -> Result<Self, TrendError> {
        let n = t.len();
        if n < k + 2 {
            return Err(TrendError::TooShort { n, needed: k + 2 });
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(TrendError::InvalidArgument("positions must be strictly increasing".into()));
        }
        let mut width = 2;
        let mut coef: Vec<f64> = (0..n - 1).flat_map(|_| [-1.0, 1.0]).collect();
        for j in 1..=k {
            let rows = n - j - 1;
            let mut next = vec![0.0; rows * (width + 1)];
            for i in 0..rows {
                let w_lo = j as f64 / (t[i + j] - t[i]);
                let w_hi = j as f64 / (t[i + 1 + j] - t[i + 1]);
                let out = &mut next[i * (width + 1)..(i + 1) * (width + 1)];
                for c in 0..width {
                    out[c] -= w_lo * coef[i * width + c];
                    out[c + 1] += w_hi * coef[(i + 1) * width + c];
                }
            }
            coef = next;
            width += 1;
        }
        Ok(Self { n, degree: k, coef })
    }

    /// Number of columns.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Polynomial degree `k` annihilated by the operator.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Difference order `k + 1`.
    pub fn order(&self) -> usize {
        self.degree + 1
    }

    pub fn rows(&self) -> usize {
        self.n - self.degree - 1
    }

    /// Nonzero entries per row.
    pub fn width(&self) -> usize {
        self.degree + 2
    }

    /// Nonzero entries of row `i`, which start at column `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.coef[i * w..(i + 1) * w]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "vector length mismatch");
        (0..self.rows())
            .map(|i| self.row(i).iter().zip(&x[i..]).map(|(c, v)| c * v).sum())
            .collect()
    }

    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows(), "vector length mismatch");
        let mut out = vec![0.0; self.n];
        for (i, &vi) in v.iter().enumerate() {
            for (c, o) in self.row(i).iter().zip(&mut out[i..]) {
                *o += c * vi;
            }
        }
        out
    }

    /// Lower band of `DᵀD` in the layout used by `numkit::BandedCholesky`.
    pub fn gram_band(&self) -> Vec<Vec<f64>> {
        let w = self.width();
        let mut band = vec![vec![0.0; w]; self.n];
        for i in 0..self.rows() {
            let r = self.row(i);
            for a in 0..w {
                for b in 0..=a {
                    band[i + a][a - b] += r[a] * r[b];
                }
            }
        }
        band
    }

    /// Lower band of `DDᵀ`, of dimension `rows()` and bandwidth `k + 1`.
    pub fn outer_band(&self) -> Vec<Vec<f64>> {
        let w = self.width();
        let m = self.rows();
        let mut band = vec![vec![0.0; w]; m];
        for (i, row) in band.iter_mut().enumerate() {
            for (d, slot) in row.iter_mut().enumerate().take(i + 1) {
                let j = i - d;
                let (ri, rj) = (self.row(i), self.row(j));
                *slot = (0..w - d).map(|c| ri[c] * rj[c + d]).sum();
            }
        }
        band
    }

    pub fn to_matrix(&self) -> numkit::Matrix {
        let mut m = numkit::Matrix::zeros(self.rows(), self.n);
        for i in 0..self.rows() {
            for (c, v) in self.row(i).iter().enumerate() {
                m[(i, i + c)] = *v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_and_second_differences() {
        let d1 = diff_matrix(4, 0).unwrap().to_matrix();
        let expected = [[-1.0, 1.0, 0.0, 0.0], [0.0, -1.0, 1.0, 0.0], [0.0, 0.0, -1.0, 1.0]];
        for (i, row) in expected.iter().enumerate() {
            assert_eq!(d1.row(i), row);
        }
        let d2 = diff_matrix(4, 1).unwrap().to_matrix();
        assert_eq!(d2.row(0), &[1.0, -2.0, 1.0, 0.0]);
        assert_eq!(d2.row(1), &[0.0, 1.0, -2.0, 1.0]);
        assert_eq!(diff_matrix(4, 1).unwrap().apply(&[1.0, 2.0, 3.0, 4.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn recursion_matches_product() {
        for k in 1..4 {
            let n = 9;
            let d1 = diff_matrix(n - k, 0).unwrap().to_matrix();
            let dk = diff_matrix(n, k - 1).unwrap().to_matrix();
            assert_eq!(diff_matrix(n, k).unwrap().to_matrix(), d1.matmul(&dk));
        }
    }

    #[test]
    fn too_short_is_an_error() {
        assert_eq!(diff_matrix(2, 1), Err(TrendError::TooShort { n: 2, needed: 3 }));
    }

    #[test]
    fn bands_match_dense_products() {
        let t = [0.0, 1.0, 2.5, 3.0, 5.0, 5.5, 7.0];
        let d = DiffMatrix::with_positions(&t, 2).unwrap();
        let m = d.to_matrix();
        let dtd = m.transpose().matmul(&m);
        let ddt = m.matmul(&m.transpose());
        for (i, row) in d.gram_band().iter().enumerate() {
            for (k, v) in row.iter().enumerate().take(i + 1) {
                assert!((v - dtd[(i, i - k)]).abs() < 1e-12);
            }
        }
        for (i, row) in d.outer_band().iter().enumerate() {
            for (k, v) in row.iter().enumerate().take(i + 1) {
                assert!((v - ddt[(i, i - k)]).abs() < 1e-12);
            }
        }
        let x: Vec<f64> = t.iter().map(|s| 1.0 - 2.0 * s + 0.3 * s * s).collect();
        assert!(d.apply(&x).iter().all(|v| v.abs() < 1e-12));
    }
}

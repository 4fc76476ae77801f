use numkit::{Cholesky, Matrix};

use crate::TrendError;

/// Regression basis of degree `k` with the given knots, evaluated at `t`.
///
/// Columns are the polynomial part `1, t, …, t^k` followed by one truncated
/// power term `((t − τ)₊)^k` per knot (a step `1{t > τ}` when `k = 0`).
/// Duplicate knots are dropped. For `k ≤ 1` this is exactly the falling
/// factorial basis; for larger `k` the truncated power terms are used in its
/// place.
pub fn falling_factorial_basis(t: &[f64], knots: &[f64], k: usize) -> Result<Matrix, TrendError> {
    let (lo, hi) = match (t.first(), t.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(TrendError::TooShort { n: 0, needed: 1 }),
    };
    let mut knots: Vec<f64> = knots.to_vec();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    if let Some(bad) = knots.iter().find(|&&s| !(s > lo && s < hi)) {
        return Err(TrendError::InvalidArgument(format!("knot {bad} is not strictly inside ({lo}, {hi})")));
    }
    let poly = k + 1;
    let basis = Matrix::from_fn(t.len(), poly + knots.len(), |i, j| {
        let ti = t[i];
        if j < poly {
            ti.powi(j as i32)
        } else {
            let d = ti - knots[j - poly];
            match (d > 0.0, k) {
                (false, _) => 0.0,
                (true, 0) => 1.0,
                (true, _) => d.powi(k as i32),
            }
        }
    });
    Ok(basis)
}

/// Least-squares projection onto the column span of a basis.
#[derive(Clone, Debug)]
pub struct Projection {
    basis: Matrix,
    chol: Cholesky,
}

impl Projection {
    /// Factors `AᵀA`, rejecting bases whose columns are numerically
    /// dependent or whose rows do not outnumber columns.
    pub fn new(basis: Matrix) -> Result<Self, TrendError> {
        if basis.cols() == 0 || basis.rows() < basis.cols() {
            return Err(TrendError::RankDeficientBasis);
        }
        let gram = basis.gram();
        let chol = Cholesky::new(&gram).map_err(|_| TrendError::RankDeficientBasis)?;
        let l = chol.factor();
        let degenerate = (0..gram.rows()).any(|j| l[(j, j)].powi(2) <= 1e-12 * gram[(j, j)]);
        if degenerate {
            return Err(TrendError::RankDeficientBasis);
        }
        Ok(Self { basis, chol })
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    fn check(&self, v: &[f64]) -> Result<(), TrendError> {
        if v.len() == self.len() {
            Ok(())
        } else {
            Err(TrendError::InvalidArgument(format!(
                "vector has length {}, basis has {} rows",
                v.len(),
                self.len()
            )))
        }
    }

    /// `(AᵀA)⁻¹Aᵀv`.
    pub fn coefficients(&self, v: &[f64]) -> Result<Vec<f64>, TrendError> {
        self.check(v)?;
        Ok(self.chol.solve(&self.basis.tr_matvec(v)))
    }

    /// `A(AᵀA)⁻¹Aᵀv`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>, TrendError> {
        Ok(self.basis.matvec(&self.coefficients(v)?))
    }

    /// Rows of `A(AᵀA)⁻¹`.
    pub fn hat_rows(&self) -> Matrix {
        let inv = self.chol.inverse();
        self.basis.matmul(&inv)
    }

    /// Diagonal of the hat matrix, `a(xᵢ)ᵀ(AᵀA)⁻¹a(xᵢ)`.
    pub fn leverages(&self) -> Vec<f64> {
        let b = self.hat_rows();
        (0..self.len())
            .map(|i| numkit::dot(b.row(i), self.basis.row(i)))
            .collect()
    }

    /// Inverse Gram matrix `(AᵀA)⁻¹`.
    pub fn gram_inverse(&self) -> Matrix {
        self.chol.inverse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Vec<f64> {
        (1..=n).map(|i| i as f64).collect()
    }

    #[test]
    fn polynomial_part_without_knots() {
        let a = falling_factorial_basis(&unit(4), &[], 1).unwrap();
        assert_eq!(a.cols(), 2);
        assert_eq!(a.col(0), vec![1.0; 4]);
        assert_eq!(a.col(1), unit(4));
    }

    #[test]
    fn single_knot_hinge_column() {
        let a = falling_factorial_basis(&unit(6), &[3.0], 1).unwrap();
        assert_eq!(a.col(2), vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0]);
        let step = falling_factorial_basis(&unit(4), &[2.5], 0).unwrap();
        assert_eq!(step.col(1), vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn duplicate_and_boundary_knots() {
        let a = falling_factorial_basis(&unit(6), &[3.0, 3.0, 4.0], 1).unwrap();
        assert_eq!(a.cols(), 4);
        assert!(falling_factorial_basis(&unit(6), &[6.0], 1).is_err());
        assert!(falling_factorial_basis(&unit(6), &[1.0], 1).is_err());
    }

    #[test]
    fn projection_reproduces_piecewise_linear_signal() {
        let t = unit(30);
        let f: Vec<f64> = t.iter().map(|&s| 2.0 - 0.3 * s + 0.8 * (s - 11.0).max(0.0)).collect();
        let p = Projection::new(falling_factorial_basis(&t, &[11.0], 1).unwrap()).unwrap();
        let proj = p.project(&f).unwrap();
        for (a, b) in proj.iter().zip(&f) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let a = Matrix::from_fn(5, 2, |i, _| i as f64);
        assert!(matches!(Projection::new(a), Err(TrendError::RankDeficientBasis)));
    }
}

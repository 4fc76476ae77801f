use crate::matrix::Matrix;
use crate::NumError;

/// Relative tolerance used to accept a matrix as symmetric before
/// symmetrizing it.
pub const SYMMETRY_TOL: f64 = 1e-10;

fn checked_symmetric(m: &Matrix) -> Result<Matrix, NumError> {
    if !m.is_square() {
        return Err(NumError::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(NumError::NotSymmetric);
    }
    Ok(m.symmetrized())
}

/// Lower Cholesky factor `L` with `L·Lᵀ = m`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn new(m: &Matrix) -> Result<Self, NumError> {
        let a = checked_symmetric(m)?;
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(NumError::NotPositiveDefinite { pivot: j });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    pub fn into_factor(self) -> Matrix {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `L·y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut y = b.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            let s: f64 = row[..i].iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / row[i];
        }
        y
    }

    /// Solves `Lᵀ·x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(y.len(), n, "rhs length mismatch");
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrized()
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diag().iter().map(|d| d.ln()).sum::<f64>()
    }
}

pub fn cholesky(m: &Matrix) -> Result<Matrix, NumError> {
    Cholesky::new(m).map(Cholesky::into_factor)
}

pub fn solve_spd(m: &Matrix, rhs: &[f64]) -> Result<Vec<f64>, NumError> {
    if rhs.len() != m.rows() {
        return Err(NumError::DimensionMismatch {
            expected: m.rows(),
            found: rhs.len(),
        });
    }
    Ok(Cholesky::new(m)?.solve(rhs))
}

pub fn spd_inverse(m: &Matrix) -> Result<Matrix, NumError> {
    Ok(Cholesky::new(m)?.inverse())
}

/// Symmetric eigendecomposition with eigenvalues in descending order and
/// orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigen solver.
pub fn sym_eigen(m: &Matrix) -> Result<SymEigen, NumError> {
    let mut a = checked_symmetric(m)?;
    let n = a.rows();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    let tol = 1e-12 * scale;

    let off_norm = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&a) > tol {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(NumError::NoConvergence {
                iterations: JACOBI_MAX_SWEEPS,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = v.select_columns(&order);
    Ok(SymEigen { values, vectors })
}

/// `m^{-1/2}` for symmetric positive-definite `m`.
pub fn spd_inverse_sqrt(m: &Matrix) -> Result<Matrix, NumError> {
    // Cholesky doubles as the positive-definiteness check.
    Cholesky::new(m)?;
    let eig = sym_eigen(m)?;
    if let Some(pos) = eig.values.iter().position(|&l| l <= 0.0) {
        return Err(NumError::NotPositiveDefinite { pivot: pos });
    }
    let n = m.rows();
    let v = &eig.vectors;
    let inv_sqrt: Vec<f64> = eig.values.iter().map(|l| 1.0 / l.sqrt()).collect();
    let out = Matrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * inv_sqrt[k] * v[(j, k)]).sum()
    });
    Ok(out.symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize, seed: u64) -> Matrix {
        // deterministic pseudo-random fill via an LCG; no RNG dependency here
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let b = Matrix::from_fn(n, n, |_, _| next());
        b.gram().add(&Matrix::identity(n).scale(0.1))
    }

    #[test]
    fn cholesky_identity_and_hand_example() {
        let l = cholesky(&Matrix::identity(3)).unwrap();
        assert_eq!(l, Matrix::identity(3));

        let m = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let l = cholesky(&m).unwrap();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((l[(1, 0)] - 1.0).abs() < 1e-15);
        assert!(l[(0, 1)] == 0.0);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        let back = l.matmul(&l.transpose());
        assert!(back.sub(&m).frobenius_norm() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&m),
            Err(NumError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn cholesky_round_trip_random() {
        for seed in 0..20 {
            let m = spd(6, seed);
            let l = cholesky(&m).unwrap();
            let rel = l.matmul(&l.transpose()).sub(&m).frobenius_norm() / m.frobenius_norm();
            assert!(rel < 1e-10, "seed {seed}: {rel}");
        }
    }

    #[test]
    fn solve_spd_examples() {
        let v = [1.0, -2.0, 3.0];
        assert_eq!(solve_spd(&Matrix::identity(3), &v).unwrap(), v.to_vec());
        let d = Matrix::from_diag(&[2.0, 4.0]);
        let x = solve_spd(&d, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);

        let m = spd(5, 7);
        let rhs = [0.3, -1.0, 2.0, 0.0, 5.0];
        let x = solve_spd(&m, &rhs).unwrap();
        let r: Vec<f64> = m.matvec(&x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        assert!(crate::norm2(&r) / crate::norm2(&rhs) < 1e-8);
    }

    #[test]
    fn solve_spd_agrees_with_explicit_inverse() {
        let m = Matrix::from_rows(&[[3.0, 1.0], [1.0, 2.0]]).unwrap();
        let det = 5.0;
        let rhs = [1.0, 4.0];
        let explicit = [(2.0 * rhs[0] - rhs[1]) / det, (-rhs[0] + 3.0 * rhs[1]) / det];
        let x = solve_spd(&m, &rhs).unwrap();
        assert!((x[0] - explicit[0]).abs() < 1e-10 && (x[1] - explicit[1]).abs() < 1e-10);
    }

    #[test]
    fn eigen_examples() {
        let e = sym_eigen(&Matrix::identity(4)).unwrap();
        assert!(e.values.iter().all(|&l| (l - 1.0).abs() < 1e-14));

        let m = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = sym_eigen(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12 && (e.values[1] - 1.0).abs() < 1e-12);

        let e = sym_eigen(&Matrix::from_diag(&[2.0, 5.0, -1.0])).unwrap();
        assert_eq!(e.values, vec![5.0, 2.0, -1.0]);
    }

    #[test]
    fn eigen_reconstructs_random_symmetric() {
        let m = spd(8, 3).sub(&Matrix::identity(8).scale(0.7));
        let e = sym_eigen(&m).unwrap();
        let v = &e.vectors;
        let mv = m.matmul(v);
        let vl = v.matmul(&Matrix::from_diag(&e.values));
        assert!(mv.sub(&vl).max_abs() < 1e-8);
        assert!(v.gram().sub(&Matrix::identity(8)).max_abs() < 1e-8);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eigen_rejects_non_square() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(sym_eigen(&m), Err(NumError::NonSquare { .. })));
    }

    #[test]
    fn inverse_sqrt_examples() {
        assert!(spd_inverse_sqrt(&Matrix::identity(3))
            .unwrap()
            .sub(&Matrix::identity(3))
            .max_abs()
            < 1e-14);
        let r = spd_inverse_sqrt(&Matrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!(r.sub(&Matrix::from_diag(&[0.5, 1.0 / 3.0])).max_abs() < 1e-14);

        let m = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let r = spd_inverse_sqrt(&m).unwrap();
        let check = r.matmul(&m).matmul(&r);
        assert!(check.sub(&Matrix::identity(2)).max_abs() < 1e-7);
        let sq = r.matmul(&r).matmul(&m);
        assert!(sq.sub(&Matrix::identity(2)).max_abs() < 1e-7);
    }
}

use crate::NumError;

/// Cholesky factorization of a symmetric positive-definite band matrix.
///
/// The matrix is given by its lower band: `lower[i][d] = m[i][i - d]` for
/// `d = 0..=bandwidth` (entries with `i < d` are ignored).
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    // l[i * (bw + 1) + d] = L[i][i - d]
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn new(lower: &[Vec<f64>], bandwidth: usize) -> Result<Self, NumError> {
        let n = lower.len();
        let bw = bandwidth;
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            if lower[i].len() != w {
                return Err(NumError::DimensionMismatch {
                    expected: w,
                    found: lower[i].len(),
                });
            }
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = lower[i][i - j];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    s -= l[i * w + i - k] * l[j * w + j - k];
                }
                if j == i {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(NumError::NotPositiveDefinite { pivot: i });
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + i - j] = s / l[j * w];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        let w = self.bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut s = b[i];
            for k in lo..i {
                s -= self.l[i * w + i - k] * b[k];
            }
            b[i] = s / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let hi = (i + self.bw).min(self.n - 1);
            let mut s = b[i];
            for k in (i + 1)..=hi {
                s -= self.l[k * w + k - i] * b[k];
            }
            b[i] = s / self.l[i * w];
        }
    }
}

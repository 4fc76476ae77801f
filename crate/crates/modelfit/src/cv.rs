use distkit::RngStream;

use crate::{lasso_path, Design, LassoPath, ModelError};

/// Cross-validated choice of λ along a lasso path.
#[derive(Clone, Debug)]
pub struct CvSelection {
    /// Path fitted on all observations.
    pub path: LassoPath,
    /// Mean held-out deviance per observation at each λ.
    pub cv_mean: Vec<f64>,
    /// Standard error of `cv_mean` across folds.
    pub cv_se: Vec<f64>,
    pub index_min: usize,
    pub index_1se: usize,
    pub lambda_min: f64,
    pub lambda_1se: f64,
    /// Support of the full-data fit at `lambda_1se`.
    pub selected: Vec<usize>,
}

/// Assigns each of `n` observations to one of `k` folds of nearly equal size
/// using a shuffle drawn from `rng`.
pub(crate) fn fold_ids(n: usize, k: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut ids = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        ids[i] = pos % k;
    }
    ids
}

/// K-fold cross-validation of the lasso with deviance loss. The selected
/// model is the support at the largest λ whose mean error is within one
/// standard error of the minimum.
pub fn cv_select(
    design: &Design,
    lambdas: Option<&[f64]>,
    folds: usize,
    rng: &mut RngStream,
) -> Result<CvSelection, ModelError> {
    let n = design.n();
    if folds < 2 || folds > n {
        return Err(ModelError::InvalidArgument(format!("{folds} folds for {n} observations")));
    }
    let path = lasso_path(design, lambdas)?;
    let grid = path.lambdas.clone();
    let ids = fold_ids(n, folds, rng);
    let family = design.family();

    let mut raw = vec![vec![0.0; grid.len()]; folds];
    let mut fold_weight = vec![0.0; folds];
    for (f, (losses, fw)) in raw.iter_mut().zip(fold_weight.iter_mut()).enumerate() {
        let train: Vec<usize> = (0..n).filter(|&i| ids[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| ids[i] == f).collect();
        let fit = lasso_path(&design.subset(&train), Some(&grid))?;
        let held = design.subset(&test);
        *fw = held.weights().iter().sum();
        for (k, loss) in losses.iter_mut().enumerate() {
            let kk = k.min(fit.len() - 1);
            let eta = fit.predict_link(held.x(), held.offset(), kk);
            let total: f64 = held
                .y()
                .iter()
                .zip(&eta)
                .zip(held.weights())
                .map(|((y, e), w)| w * family.unit_deviance(*y, family.mean(*e)))
                .sum();
            *loss = total / *fw;
        }
    }
    let wsum: f64 = fold_weight.iter().sum();
    let mut cv_mean = vec![0.0; grid.len()];
    let mut cv_se = vec![0.0; grid.len()];
    for k in 0..grid.len() {
        let m: f64 = raw.iter().zip(&fold_weight).map(|(r, w)| r[k] * w).sum::<f64>() / wsum;
        let v: f64 = raw.iter().zip(&fold_weight).map(|(r, w)| w * (r[k] - m).powi(2)).sum::<f64>() / wsum;
        cv_mean[k] = m;
        cv_se[k] = (v / (folds as f64 - 1.0)).sqrt();
    }
    let index_min = (0..grid.len())
        .min_by(|&a, &b| cv_mean[a].total_cmp(&cv_mean[b]))
        .expect("grid is nonempty");
    let bound = cv_mean[index_min] + cv_se[index_min];
    let index_1se = (0..=index_min).find(|&k| cv_mean[k] <= bound).unwrap_or(index_min);
    let selected = path.support(index_1se);
    Ok(CvSelection {
        lambda_min: grid[index_min],
        lambda_1se: grid[index_1se],
        path,
        cv_mean,
        cv_se,
        index_min,
        index_1se,
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_balanced_and_reproducible() {
        let a = fold_ids(23, 5, &mut RngStream::new(3, 0));
        let b = fold_ids(23, 5, &mut RngStream::new(3, 0));
        assert_eq!(a, b);
        for f in 0..5 {
            let size = a.iter().filter(|&&i| i == f).count();
            assert!(size == 4 || size == 5);
        }
    }
}

use crate::TrendError;

/// Difference-based noise variance `Σ(y_{t+1} − y_t)² / (2(n − 1))`.
pub fn estimate_sigma_differences(y: &[f64]) -> Result<f64, TrendError> {
    if y.len() < 2 {
        return Err(TrendError::TooShort { n: y.len(), needed: 2 });
    }
    let ss: f64 = y.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(ss / (2.0 * (y.len() - 1) as f64))
}

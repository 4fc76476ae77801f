use crate::CiTable;

/// Selection and inference quality of one regression trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegressionMetrics {
    /// Fraction of reported intervals missing their targets, over `max(|M|, 1)`.
    pub fcr: f64,
    /// Mean interval length over the selected model; `None` when `M` is empty.
    pub avg_ci_length: Option<f64>,
    /// Wrong-sign claims among intervals excluding zero.
    pub fsr: f64,
    /// Positive coefficients whose interval lies above zero, over `max(#{βⱼ > 0}, 1)`.
    pub power_sign: f64,
    pub power_selected: f64,
    pub precision_selected: f64,
}

/// Metrics for one trial. `beta` is the true coefficient vector over all
/// covariates, `selected` the chosen model, `table` its intervals (rows
/// indexed by covariate) and `targets` the value each row is meant to cover.
pub fn regression_metrics(beta: &[f64], selected: &[usize], table: &CiTable, targets: &[f64]) -> RegressionMetrics {
    let nonzero = beta.iter().filter(|b| **b != 0.0).count();
    let positive = beta.iter().filter(|b| **b > 0.0).count();
    let hits = selected.iter().filter(|&&j| beta[j] != 0.0).count();
    let mut misses = 0;
    let mut wrong_sign = 0;
    let mut sign_claims = 0;
    let mut right_positive = 0;
    let mut total_length = 0.0;
    for (row, &target) in table.rows().iter().zip(targets) {
        let ci = row.interval;
        let b = beta[row.index];
        misses += usize::from(!ci.contains(target));
        total_length += ci.length();
        if ci.excludes_zero() {
            sign_claims += 1;
            if (b < 0.0 && ci.lower > 0.0) || (b > 0.0 && ci.upper < 0.0) {
                wrong_sign += 1;
            }
        }
        if b > 0.0 && ci.lower > 0.0 {
            right_positive += 1;
        }
    }
    let ratio = |a: usize, b: usize| a as f64 / b.max(1) as f64;
    RegressionMetrics {
        fcr: ratio(misses, table.len()),
        avg_ci_length: (!table.is_empty()).then(|| total_length / table.len() as f64),
        fsr: ratio(wrong_sign, sign_claims),
        power_sign: ratio(right_positive, positive),
        power_selected: ratio(hits, nonzero),
        precision_selected: ratio(hits, selected.len()),
    }
}

/// Rejection quality of one multiple-testing trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultitestMetrics {
    /// False discovery proportion `|R ∩ nulls| / max(|R|, 1)`.
    pub fdp: f64,
    /// Fraction of non-nulls rejected.
    pub power: f64,
}

/// FDP and power of `rejected` given which hypotheses are null.
pub fn selection_metrics(rejected: &[usize], is_null: &[bool]) -> MultitestMetrics {
    let false_rej = rejected.iter().filter(|&&i| is_null[i]).count();
    let signals = is_null.iter().filter(|n| !**n).count();
    MultitestMetrics {
        fdp: false_rej as f64 / rejected.len().max(1) as f64,
        power: (rejected.len() - false_rej) as f64 / signals.max(1) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Interval, Target};

    fn table(rows: &[(usize, f64, f64)]) -> CiTable {
        let mut t = CiTable::new(Target::BetaStar, 0.8);
        for &(i, lo, hi) in rows {
            t.push(i, 0.5 * (lo + hi), Interval { lower: lo, upper: hi }).unwrap();
        }
        t
    }

    #[test]
    fn empty_model_conventions() {
        let m = regression_metrics(&[1.0, 0.0], &[], &table(&[]), &[]);
        assert_eq!(m.fcr, 0.0);
        assert_eq!(m.precision_selected, 0.0);
        assert_eq!(m.power_selected, 0.0);
        assert_eq!(m.avg_ci_length, None);
    }

    #[test]
    fn one_miss_in_three() {
        let beta = [1.0, -1.0, 0.0];
        let t = table(&[(0, 0.5, 1.5), (1, -2.0, -0.5), (2, 0.1, 0.3)]);
        let m = regression_metrics(&beta, &[0, 1, 2], &t, &[1.0, -1.0, 0.0]);
        assert!((m.fcr - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.power_selected - 1.0).abs() < 1e-15);
        assert!((m.precision_selected - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.power_sign, 1.0);
        assert_eq!(m.fsr, 0.0);
        let all_cover = regression_metrics(&beta, &[0, 1, 2], &t, &[1.0, -1.0, 0.2]);
        assert_eq!(all_cover.fcr, 0.0);
    }

    #[test]
    fn wrong_sign_counts() {
        let beta = [-1.0, 2.0];
        let t = table(&[(0, 0.5, 1.0), (1, -1.0, 1.0)]);
        let m = regression_metrics(&beta, &[0, 1], &t, &[0.7, 0.0]);
        assert_eq!(m.fsr, 1.0);
        assert_eq!(m.power_sign, 0.0);
    }

    #[test]
    fn fdp_and_power() {
        let nulls = [true, true, false, false];
        let m = selection_metrics(&[0, 2, 3], &nulls);
        assert!((m.fdp - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.power, 1.0);
        assert_eq!(selection_metrics(&[], &nulls).fdp, 0.0);
    }
}

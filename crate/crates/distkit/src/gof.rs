//! Goodness-of-fit and independence tests used to check sampled laws.

use numkit::chisq_cdf;

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and a
/// continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).max((i as f64 + 1.0) / n - c)
        })
        .fold(0.0, f64::max)
}

/// Large-sample critical value of the KS distance at level `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln() / n as f64).sqrt()
}

/// Pearson chi-square test of independence on a contingency table.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Tests independence of rows and columns; empty rows and columns are dropped.
pub fn chisq_independence(table: &[Vec<f64>]) -> ChiSquareTest {
    let rows: Vec<&Vec<f64>> = table.iter().filter(|r| r.iter().sum::<f64>() > 0.0).collect();
    let ncol = rows.first().map_or(0, |r| r.len());
    let col_tot: Vec<f64> = (0..ncol).map(|j| rows.iter().map(|r| r[j]).sum()).collect();
    let keep: Vec<usize> = (0..ncol).filter(|&j| col_tot[j] > 0.0).collect();
    let total: f64 = col_tot.iter().sum();
    let mut stat = 0.0;
    for r in &rows {
        let rt: f64 = r.iter().sum();
        for &j in &keep {
            let e = rt * col_tot[j] / total;
            stat += (r[j] - e).powi(2) / e;
        }
    }
    let df = ((rows.len().max(1) - 1) * (keep.len().max(1) - 1)) as f64;
    let p_value = if df > 0.0 {
        1.0 - chisq_cdf(stat, df).unwrap_or(1.0)
    } else {
        1.0
    };
    ChiSquareTest {
        statistic: stat,
        df,
        p_value,
    }
}

/// Bin index of `x` among ascending `cuts`: the number of cuts below `x`.
fn bin_of(cuts: &[f64], x: f64) -> usize {
    cuts.partition_point(|&c| c < x)
}

/// Cross-tabulates paired samples after cutting each margin at its
/// empirical `1/bins, …, (bins−1)/bins` quantiles.
pub fn quantile_table(a: &[f64], b: &[f64], bins: usize) -> Vec<Vec<f64>> {
    let cuts = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        let mut c: Vec<f64> = (1..bins).map(|k| s[k * s.len() / bins]).collect();
        c.dedup();
        c
    };
    let (ca, cb) = (cuts(a), cuts(b));
    let mut table = vec![vec![0.0; cb.len() + 1]; ca.len() + 1];
    for (&x, &y) in a.iter().zip(b) {
        table[bin_of(&ca, x)][bin_of(&cb, y)] += 1.0;
    }
    table
}

use distkit::{Dist, RngStream, Value};
use fission_rules::{fission, FissionRule};
use numkit::{chisq_quantile, norm_sf};

use crate::{z_crit, CiTable, Interval, PosiError, Target};

/// Outcome of a step-up multiple-testing procedure.
#[derive(Clone, Debug, PartialEq)]
pub struct RejectionSet {
    /// Rejected hypotheses in increasing index order.
    pub rejected: Vec<usize>,
    pub pvalues: Vec<f64>,
    /// Target false discovery rate.
    pub level: f64,
}

impl RejectionSet {
    pub fn len(&self) -> usize {
        self.rejected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rejected.is_empty()
    }
}

/// Benjamini–Hochberg step-up: rejects the `k*` smallest p-values where
/// `k* = max{k : p_(k) ≤ k q / n}`.
pub fn bh_select(pvalues: &[f64], q: f64) -> Result<RejectionSet, PosiError> {
    if let Some(bad) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(PosiError::InvalidArgument(format!("p-value {bad} outside [0,1]")));
    }
    let n = pvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));
    let cutoff = (1..=n)
        .rev()
        .find(|&k| pvalues[order[k - 1]] <= k as f64 * q / n as f64)
        .unwrap_or(0);
    let mut rejected = order[..cutoff].to_vec();
    rejected.sort_unstable();
    Ok(RejectionSet {
        rejected,
        pvalues: pvalues.to_vec(),
        level: q,
    })
}

/// False-coverage-adjusted intervals `yᵢ ± z_{β/2} σ`, `β = |R|α/n`, for the
/// rejected observations.
pub fn by_ci(y: &[f64], rejected: &[usize], sigma: f64, alpha: f64) -> Result<CiTable, PosiError> {
    if rejected.is_empty() {
        return Err(PosiError::EmptyRejectionSet);
    }
    let beta = rejected.len() as f64 * alpha / y.len() as f64;
    let z = z_crit(beta)?;
    let est: Vec<f64> = rejected.iter().map(|&i| y[i]).collect();
    let half = vec![z * sigma; rejected.len()];
    CiTable::symmetric(Target::MuIndividual, alpha, rejected, &est, &half)
}

/// Whether p-values test one tail (`μ > 0`) or both.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

/// Normal p-value of `value / sd` under a zero-mean null.
pub fn one_sided_pvalue(value: f64, sd: f64, sided: Sidedness) -> f64 {
    let t = value / sd;
    match sided {
        Sidedness::OneSided => norm_sf(t),
        Sidedness::TwoSided => (2.0 * norm_sf(t.abs())).min(1.0),
    }
}

/// Everything produced by the fissioned multiple-testing pipeline.
#[derive(Clone, Debug)]
pub struct MultitestOutcome {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub rejections: RejectionSet,
    /// Intervals `g(yᵢ) ± z_{α/2} σ √(1 + τ⁻²)` for each rejected `i`.
    pub per_signal: CiTable,
    /// Interval for the average mean over the rejection set; `None` when
    /// nothing is rejected.
    pub aggregate: Option<Interval>,
}

/// Gaussian fission of independent observations `yᵢ ~ N(μᵢ, σ²)`: selects by
/// Benjamini–Hochberg on p-values from the `f` parts and builds intervals
/// from the `g` parts.
pub fn fission_multitest(
    y: &[f64],
    sigma: f64,
    tau: f64,
    alpha: f64,
    q: f64,
    sided: Sidedness,
    rng: &mut RngStream,
) -> Result<MultitestOutcome, PosiError> {
    if !(sigma > 0.0) {
        return Err(PosiError::InvalidArgument(format!("sigma {sigma} is not positive")));
    }
    let z = z_crit(alpha)?;
    let rule = FissionRule::gauss_p1(tau, sigma * sigma);
    let out = fission(&Value::Reals(y.to_vec()), &rule, rng)?;
    let (f, g) = (out.f.to_reals(), out.g.to_reals());
    let f_sd = sigma * (1.0 + tau * tau).sqrt();
    let pvalues: Vec<f64> = f.iter().map(|&v| one_sided_pvalue(v, f_sd, sided)).collect();
    let rejections = bh_select(&pvalues, q)?;
    let g_sd = sigma * (1.0 + 1.0 / (tau * tau)).sqrt();
    let est: Vec<f64> = rejections.rejected.iter().map(|&i| g[i]).collect();
    let per_signal = CiTable::symmetric(Target::MuIndividual, alpha, &rejections.rejected, &est, &vec![z * g_sd; est.len()])?;
    let aggregate = if est.is_empty() {
        None
    } else {
        Some(aggregate_ci(&est, g_sd, alpha)?)
    };
    Ok(MultitestOutcome {
        f,
        g,
        rejections,
        per_signal,
        aggregate,
    })
}

/// `mean(values) ± z_{α/2} sd / √m` for `m` independent values of common
/// standard deviation `sd`.
pub fn aggregate_ci(values: &[f64], sd: f64, alpha: f64) -> Result<Interval, PosiError> {
    if values.is_empty() {
        return Err(PosiError::EmptyRejectionSet);
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    Ok(Interval::centered(mean, z_crit(alpha)? * sd / m.sqrt()))
}

/// Randomized probability integral transform `F(y)·U + (1 − U)·F(y−)` with
/// `U` uniform, which is exactly uniform when `y` is drawn from `null`.
pub fn randomized_pvalue(y: f64, null: &Dist, rng: &mut RngStream) -> Result<f64, PosiError> {
    let u = rng.uniform();
    let hi = null.cdf(y).map_err(fission_rules::FissionError::from)?;
    let lo = null.cdf_left(y).map_err(fission_rules::FissionError::from)?;
    Ok(hi * u + (1.0 - u) * lo)
}

/// Upper-tail counterpart `1 − randomized_pvalue`, small when `y` is large.
pub fn upper_randomized_pvalue(y: f64, null: &Dist, rng: &mut RngStream) -> Result<f64, PosiError> {
    Ok(1.0 - randomized_pvalue(y, null, rng)?)
}

/// Exact chi-square interval for the average Poisson mean over a rejection
/// set, from the `g` parts of thinning with probability `p`:
/// `(χ²_{α/2}(2S), χ²_{1−α/2}(2S + 2)) / (2|R|(1 − p))`, `S = Σ gᵢ`.
pub fn poisson_aggregate_ci(g_parts: &[u64], p: f64, alpha: f64) -> Result<Interval, PosiError> {
    if g_parts.is_empty() {
        return Err(PosiError::EmptyRejectionSet);
    }
    if !(0.0..1.0).contains(&p) {
        return Err(PosiError::InvalidArgument(format!("thinning probability {p} is not in [0,1)")));
    }
    z_crit(alpha)?;
    let s: u64 = g_parts.iter().sum();
    let scale = 1.0 / (2.0 * g_parts.len() as f64 * (1.0 - p));
    let lower = if s == 0 { 0.0 } else { chisq_quantile(alpha / 2.0, 2.0 * s as f64)? };
    let upper = chisq_quantile(1.0 - alpha / 2.0, 2.0 * s as f64 + 2.0)?;
    Ok(Interval {
        lower: scale * lower,
        upper: scale * upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bh_hand_example() {
        let r = bh_select(&[0.01, 0.04, 0.5], 0.1).unwrap();
        assert_eq!(r.rejected, vec![0, 1]);
        assert_eq!(bh_select(&[0.0; 4], 0.05).unwrap().len(), 4);
        assert!(bh_select(&[1.0; 4], 0.05).unwrap().is_empty());
        assert!(bh_select(&[1.2], 0.05).is_err());
    }

    #[test]
    fn by_level_adjustment() {
        let y: Vec<f64> = (0..2500).map(|i| i as f64 / 1000.0).collect();
        let rejected: Vec<usize> = (0..25).collect();
        let t = by_ci(&y, &rejected, 1.0, 0.2).unwrap();
        let z = numkit::norm_quantile(0.999).unwrap();
        assert!((t.rows()[0].interval.length() - 2.0 * z).abs() < 1e-9);
        assert!((t.level() - 0.8).abs() < 1e-15);
        assert_eq!(by_ci(&y, &[], 1.0, 0.2), Err(PosiError::EmptyRejectionSet));
        let all: Vec<usize> = (0..2500).collect();
        let full = by_ci(&y, &all, 1.0, 0.2).unwrap();
        assert!((full.rows()[0].interval.length() - 2.0 * numkit::z_two_sided(0.2).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn aggregate_width_halves_with_four_signals() {
        let one = aggregate_ci(&[1.0], 1.0, 0.2).unwrap();
        let four = aggregate_ci(&[1.0, 2.0, 0.0, 3.0], 1.0, 0.2).unwrap();
        assert!((one.length() / four.length() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn poisson_aggregate_hand_example() {
        let ci = poisson_aggregate_ci(&[4], 0.5, 0.1).unwrap();
        assert!((ci.lower - chisq_quantile(0.05, 8.0).unwrap()).abs() < 1e-12);
        assert!((ci.upper - chisq_quantile(0.95, 10.0).unwrap()).abs() < 1e-12);
        assert_eq!(poisson_aggregate_ci(&[0, 0], 0.5, 0.1).unwrap().lower, 0.0);
    }

    #[test]
    fn randomized_pvalue_boundaries() {
        let mut rng = RngStream::new(5, 0);
        let normal = Dist::Normal { mean: 0.0, sd: 1.0 };
        let p = randomized_pvalue(0.7, &normal, &mut rng).unwrap();
        assert!((p - numkit::norm_cdf(0.7)).abs() < 1e-15);
        let pois = Dist::Poisson { mean: 1.0 };
        let mut a = RngStream::new(6, 0);
        let mut b = RngStream::new(6, 0);
        let u = b.uniform();
        let p0 = randomized_pvalue(0.0, &pois, &mut a).unwrap();
        assert!((p0 - pois.cdf(0.0).unwrap() * u).abs() < 1e-15);
    }
}

//! Special functions and distribution quantiles.
//!
//! Gamma and beta functions come from `statrs`, the complementary error
//! function from `libm`; every quantile is obtained by bisection on the
//! matching CDF.

use statrs::function::{beta, gamma};

use crate::NumError;

/// Bracket width at which quantile bisection stops.
pub const QUANTILE_TOL: f64 = 1e-10;

pub fn log_gamma(x: f64) -> Result<f64, NumError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(NumError::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(gamma::ln_gamma(x))
}

/// `ln Γ(x)` for arguments already known to be positive.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    gamma::ln_gamma(x)
}

pub fn ln_factorial(k: u64) -> f64 {
    gamma::ln_gamma(k as f64 + 1.0)
}

pub fn ln_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n, "ln_choose requires k <= n");
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    gamma::gamma_lr(a, x)
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma::gamma_ur(a, x)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta::beta_reg(a, b, x)
    }
}

/// Standard normal CDF Φ.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 − Φ(x)`, accurate in the upper tail.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn check_prob(p: f64) -> Result<(), NumError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(NumError::Domain(format!("probability must be in (0,1), got {p}")))
    }
}

/// Finds `x` in `[lo, hi]` with `f(x) = target` for nondecreasing `f`.
/// Stops when the bracket is narrower than `QUANTILE_TOL · max(1, |x|)`.
pub fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > QUANTILE_TOL * lo.abs().max(hi.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Standard normal quantile Φ⁻¹.
pub fn norm_quantile(p: f64) -> Result<f64, NumError> {
    check_prob(p)?;
    if p <= 0.5 {
        Ok(bisect_increasing(norm_cdf, p, -40.0, 0.0))
    } else {
        // Solve the upper tail directly so p near 1 keeps its precision.
        Ok(bisect_increasing(|x| -norm_sf(x), -(1.0 - p), 0.0, 40.0))
    }
}

/// Two-sided critical value `z_{α/2} = Φ⁻¹(1 − α/2)`.
pub fn z_two_sided(alpha: f64) -> Result<f64, NumError> {
    check_prob(alpha)?;
    Ok(-norm_quantile(alpha / 2.0)?)
}

fn check_df(df: f64) -> Result<(), NumError> {
    if df > 0.0 && df.is_finite() {
        Ok(())
    } else {
        Err(NumError::Domain(format!("degrees of freedom must be > 0, got {df}")))
    }
}

pub fn chisq_cdf(x: f64, df: f64) -> Result<f64, NumError> {
    check_df(df)?;
    Ok(gamma_p(df / 2.0, x / 2.0))
}

/// Chi-square quantile; `df = 0` is the point mass at zero.
pub fn chisq_quantile(p: f64, df: f64) -> Result<f64, NumError> {
    check_prob(p)?;
    if df == 0.0 {
        return Ok(0.0);
    }
    check_df(df)?;
    let cdf = |x: f64| gamma_p(df / 2.0, x / 2.0);
    let mut hi = df.max(1.0);
    while cdf(hi) < p {
        hi *= 2.0;
    }
    Ok(bisect_increasing(cdf, p, 0.0, hi))
}

/// Student t CDF.
pub fn t_cdf(x: f64, df: f64) -> Result<f64, NumError> {
    check_df(df)?;
    let tail = t_sf(x.abs(), df)?;
    Ok(if x >= 0.0 { 1.0 - tail } else { tail })
}

/// Student t survival function `P(T > x)`.
pub fn t_sf(x: f64, df: f64) -> Result<f64, NumError> {
    check_df(df)?;
    let half_tail = 0.5 * beta_inc(df / 2.0, 0.5, df / (df + x * x));
    Ok(if x >= 0.0 { half_tail } else { 1.0 - half_tail })
}

pub fn t_quantile(p: f64, df: f64) -> Result<f64, NumError> {
    check_prob(p)?;
    check_df(df)?;
    if p == 0.5 {
        return Ok(0.0);
    }
    let upper = p > 0.5;
    let tail = if upper { 1.0 - p } else { p };
    let sf = |x: f64| 0.5 * beta_inc(df / 2.0, 0.5, df / (df + x * x));
    let mut hi = 1.0;
    while sf(hi) > tail {
        hi *= 2.0;
    }
    let x = bisect_increasing(|x| -sf(x), -tail, 0.0, hi);
    Ok(if upper { x } else { -x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_values() {
        assert_eq!(norm_cdf(0.0), 0.5);
        for &x in &[0.1, 0.7, 1.5, 3.0, 6.0] {
            assert!((norm_cdf(x) + norm_cdf(-x) - 1.0).abs() < 1e-15);
        }
        // reference values from a 30-digit evaluation of erfc
        assert!((norm_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((norm_sf(5.0) - 2.866_515_718_791_939e-7).abs() < 1e-21);
    }

    #[test]
    fn normal_quantile_values() {
        assert!((norm_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-8);
        assert!((norm_quantile(0.5).unwrap()).abs() < 1e-9);
        assert!((norm_quantile(0.999).unwrap() - 3.090_232_306_167_813_5).abs() < 1e-8);
        assert!((norm_quantile(1e-10).unwrap() + 6.361_340_902_404_056).abs() < 1e-8);
        assert!(norm_quantile(0.0).is_err());
        assert!(norm_quantile(1.0).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let x = norm_quantile(p).unwrap();
            assert!((norm_cdf(x) - p).abs() < 1e-10);
        }
    }

    #[test]
    fn chisq_values() {
        let q = chisq_quantile(0.5, 2.0).unwrap();
        assert!((q - 2.0 * 2f64.ln()).abs() < 1e-6);
        assert!((chisq_quantile(0.95, 10.0).unwrap() - 18.307_038_053_275_146).abs() < 1e-6);
        assert!((chisq_quantile(0.05, 8.0).unwrap() - 2.732_636_793_499_662).abs() < 1e-6);
        assert_eq!(chisq_quantile(0.1, 0.0).unwrap(), 0.0);
        assert!((chisq_cdf(3.0, 3.0).unwrap() - 0.608_374_823_728_910_9).abs() < 1e-12);
    }

    #[test]
    fn student_t_values() {
        assert!((t_cdf(0.0, 5.0).unwrap() - 0.5).abs() < 1e-15);
        // t with one degree of freedom is Cauchy
        assert!((t_cdf(1.0, 1.0).unwrap() - 0.75).abs() < 1e-12);
        assert!((t_quantile(0.975, 10.0).unwrap() - 2.228_138_851_964_938_5).abs() < 1e-6);
        assert!((t_quantile(0.025, 10.0).unwrap() + 2.228_138_851_964_938_5).abs() < 1e-6);
        for &x in &[-2.0, -0.5, 0.3, 1.7] {
            assert!((t_cdf(x, 1000.0).unwrap() - norm_cdf(x)).abs() < 1e-3);
        }
        assert!((t_sf(2.0, 4.0).unwrap() - (1.0 - t_cdf(2.0, 4.0).unwrap())).abs() < 1e-14);
    }

    #[test]
    fn log_gamma_domain() {
        assert!(log_gamma(0.0).is_err());
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-13);
        assert!((ln_choose(5, 2) - 10f64.ln()).abs() < 1e-13);
    }
}

//! Small statistical helpers: χ² quantiles, empirical quantiles and their
//! Monte Carlo error, and the two-sample Kolmogorov–Smirnov test.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Inverse CDF of χ²(df) at `prob`.
pub fn chi2_quantile(df: f64, prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Domain(format!("probability {prob} outside (0, 1)")));
    }
    let d = ChiSquared::new(df).map_err(|e| Error::Domain(format!("chi-square df {df}: {e}")))?;
    Ok(d.inverse_cdf(prob))
}

pub fn chi2_cdf(df: f64, x: f64) -> Result<f64> {
    let d = ChiSquared::new(df).map_err(|e| Error::Domain(format!("chi-square df {df}: {e}")))?;
    Ok(d.cdf(x))
}

/// Ascending copy under the IEEE total order.
pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolation quantile (Hyndman–Fan type 7) of sorted data.
pub fn quantile_sorted(xs: &[f64], tau: f64) -> f64 {
    assert!(!xs.is_empty(), "quantile of empty sample");
    let h = (xs.len() - 1) as f64 * tau.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo])
}

/// Monte Carlo standard error of the `tau` quantile from the spread of the
/// order statistics one binomial standard deviation either side.
pub fn quantile_se_sorted(xs: &[f64], tau: f64) -> f64 {
    let n = xs.len() as f64;
    let sd = (n * tau * (1.0 - tau)).sqrt();
    let idx = |x: f64| (x.round().max(1.0) as usize).min(xs.len()) - 1;
    let j = idx(n * tau - sd);
    let k = idx(n * tau + sd);
    (xs[k] - xs[j]) / 2.0
}

/// Rejection rate of `stats` above `crit`.
pub fn rejection_rate(stats: &[f64], crit: f64) -> f64 {
    stats.iter().filter(|&&s| s > crit).count() as f64 / stats.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub critical: f64,
    pub reject: bool,
}

/// Two-sample KS test with the asymptotic critical value at level `alpha`.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> KsTest {
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let critical = c * ((n + m) as f64 / (n * m) as f64).sqrt();
    KsTest { statistic: d, critical, reject: d > critical }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // P(χ²₁ ≤ x) = erf(√(x/2)), evaluated by its Maclaurin series
    fn chi1_cdf_series(x: f64) -> f64 {
        let z = (x / 2.0).sqrt();
        let mut term = z;
        let mut sum = z;
        for n in 1..200 {
            term *= -z * z / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    }

    #[test]
    fn chi2_critical_value() {
        let q = chi2_quantile(1.0, 0.95).unwrap();
        assert!((q - 3.841459).abs() < 1e-6);
        assert_relative_eq!(chi1_cdf_series(q), 0.95, epsilon = 1e-10);
        assert!(chi2_quantile(1.0, 1.0).is_err());
    }

    #[test]
    fn type7_quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&xs, 0.5), 3.0);
        assert_eq!(quantile_sorted(&xs, 0.1), 1.4);
        assert_eq!(quantile_sorted(&xs, 1.0), 5.0);
        assert_eq!(quantile_sorted(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn order_statistic_se_uniform() {
        // uniform grid: SE of the median ≈ sqrt(τ(1−τ)/n)
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let se = quantile_se_sorted(&xs, 0.5);
        assert!((se - 0.005).abs() < 2e-4, "{se}");
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let t = ks_two_sample(&a, &a, 0.01);
        assert_eq!(t.statistic, 0.0);
        assert!(!t.reject);
        assert!((t.critical / (2.0f64 / 1000.0).sqrt() - 1.628).abs() < 1e-3);
        let b: Vec<f64> = a.iter().map(|x| x + 300.0).collect();
        let t = ks_two_sample(&a, &b, 0.01);
        assert!((t.statistic - 0.3).abs() < 1e-12);
        assert!(t.reject);
    }
}

//! Descriptive statistics, quantiles, least squares and normality testing.
//!
//! Small self-contained routines shared by the estimators and the Monte
//! Carlo harness. Quantiles follow the type-7 (linear interpolation)
//! convention; variances use the unbiased `N − 1` divisor.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("inputs must have equal length, got {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("input is degenerate (zero spread)")]
    Degenerate,
    #[error("values must be finite")]
    NonFinite,
}

pub fn mean(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Unbiased sample variance (divisor `N − 1`).
pub fn sample_variance(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFew {
            needed: 2,
            got: xs.len(),
        });
    }
    let m = mean(xs)?;
    Ok(xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64)
}

/// Type-7 quantile of already-sorted data: linear interpolation at rank
/// `p (N − 1)`.
pub fn quantile_type7_sorted(sorted: &[f64], p: f64) -> Result<f64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(StatsError::InvalidProbability(p));
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// `(q1, median, q3)` of unsorted data (sorts a copy).
pub fn quartiles(xs: &[f64]) -> Result<(f64, f64, f64), StatsError> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((
        quantile_type7_sorted(&sorted, 0.25)?,
        quantile_type7_sorted(&sorted, 0.50)?,
        quantile_type7_sorted(&sorted, 0.75)?,
    ))
}

/// Simple linear regression `y = slope·x + intercept` with coefficient of
/// determination and its small-sample (adjusted) correction
/// `1 − (1 − R²)(N − 1)/(N − 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub adj_r2: f64,
}

pub fn ols_line(x: &[f64], y: &[f64]) -> Result<LineFit, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFew {
            needed: 3,
            got: x.len(),
        });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = x.len() as f64;
    let mx = mean(x)?;
    let my = mean(y)?;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::Degenerate);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    let r2 = 1.0 - ss_res / syy;
    let adj_r2 = 1.0 - (1.0 - r2) * (n - 1.0) / (n - 2.0);
    Ok(LineFit {
        slope,
        intercept,
        r2,
        adj_r2,
    })
}

/// One-sample Kolmogorov–Smirnov test against the standard normal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    /// Supremum distance between empirical and standard normal CDF.
    pub statistic: f64,
    /// Asymptotic p-value from the Kolmogorov distribution.
    pub p_value: f64,
}

pub fn ks_normal_test(sample: &[f64]) -> Result<KsTest, StatsError> {
    if sample.len() < 2 {
        return Err(StatsError::TooFew {
            needed: 2,
            got: sample.len(),
        });
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(StatsError::Degenerate);
    }
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = standard_normal_cdf(x);
        let above = (i + 1) as f64 / n - cdf;
        let below = cdf - i as f64 / n;
        d = d.max(above).max(below);
    }
    let lambda = n.sqrt() * d;
    Ok(KsTest {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    })
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2 k² λ²)`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn standard_normal_cdf(z: f64) -> f64 {
    // Unit normal is always constructible.
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.cdf(z)
}

/// Inverse standard normal CDF; `p` must lie strictly inside (0, 1).
pub fn standard_normal_quantile(p: f64) -> Result<f64, StatsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::InvalidProbability(p));
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(n.inverse_cdf(p))
}

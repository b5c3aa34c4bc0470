//! Estimation of the Hurst exponent and squared volatility from discretely
//! observed solution paths.
//!
//! All estimators are built on normalized second-order increments
//! `Δ²X_k / X_k = (X_{k+1} − 2 X_k + X_{k−1}) / X_k`, whose quadratic
//! variation concentrates — for geometric-type dynamics — at
//! `c² τ^{2H} (4 − 2^{2H})` per term (`τ` the mesh). Three estimators are
//! provided:
//!
//! * [`estimate_h1`]: inverts `x ↦ φ(n, T, x)` on the mean squared
//!   normalized increment; requires the volatility `c` to be known.
//! * [`estimate_h2`]: compares the quadratic variation at two resolutions of
//!   one path (full and half), eliminating `c`; needs an odd number of
//!   observations.
//! * [`estimate_c2`]: rescales the quadratic variation into an estimate of
//!   `c²` given a (plug-in) Hurst value.
//!
//! Standard errors use the asymptotic variance constants computed by
//! [`asym_variances`], evaluated at the *estimated* Hurst value (clamped into
//! the admissible domain when necessary — see [`EstimateFlags`]).

use thiserror::Error;

use crate::sde::SamplePath;
use crate::stats::standard_normal_quantile;

/// Distance from `{0, 1}` at which Hurst estimates are bracketed/clamped.
pub const PHI_BRACKET_DELTA: f64 = 1e-6;
/// Bisection stops when the bracket width drops below this.
pub const PHI_BISECTION_TOL: f64 = 1e-12;
/// Default relative tolerance for the variance-constant series.
pub const SERIES_REL_TOL: f64 = 1e-12;
/// The series stops only once the analytic tail bound is below this fraction
/// of the partial value of `sigma2`.
pub const SERIES_TAIL_REL_BOUND: f64 = 1e-10;
/// Minimum number of series terms before the stopping rule may fire.
pub const SERIES_MIN_TERMS: usize = 8;
/// Hard cap on series length; exceeding it is reported as non-convergence.
pub const SERIES_MAX_TERMS: usize = 10_000_000;
/// Variance constants are evaluated on `[SIGMA_EVAL_MIN, SIGMA_EVAL_MAX]`
/// even when the point estimate falls outside `(1/2, 1)`.
pub const SIGMA_EVAL_MIN: f64 = 0.501;
pub const SIGMA_EVAL_MAX: f64 = 1.0 - 1e-6;

/// Errors raised by the estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("hurst exponent {0} outside the admissible domain")]
    InvalidHurst(f64),
    #[error("series tolerance must be a positive finite real, got {0}")]
    InvalidTolerance(f64),
    #[error("variance series did not converge after {terms} terms")]
    SeriesNotConverged { terms: usize },
    #[error("path too short: {len} observations, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("resolution-comparison estimator needs an odd number of observations, got {len}")]
    NeedsOddLength { len: usize },
    #[error("volatility coefficient must be nonzero and finite, got {0}")]
    InvalidVolatility(f64),
    #[error("plug-in hurst value must lie in (0, 1), got {0}")]
    InvalidPlugInHurst(f64),
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("inversion needs n > horizon (phi strictly decreasing), got n = {n}, horizon = {horizon}")]
    PhiDomain { n: usize, horizon: f64 },
    #[error("mean squared normalized increment must be a nonnegative finite real, got {0}")]
    InvalidQuadraticVariation(f64),
    #[error("horizon must be a positive finite real, got {0}")]
    InvalidHorizon(f64),
}

/// Which Hurst estimator produced a [`HurstEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    H1,
    H2,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorKind::H1 => write!(f, "h1"),
            EstimatorKind::H2 => write!(f, "h2"),
        }
    }
}

/// Quality markers attached to an estimate.
///
/// `clamped`: some reported quantity involved a clamp — the point estimate
/// was pulled into `[PHI_BRACKET_DELTA, 1 − PHI_BRACKET_DELTA]`, or the
/// variance constants had to be evaluated at a clamped argument because the
/// estimate fell outside `[SIGMA_EVAL_MIN, SIGMA_EVAL_MAX]`.
///
/// `boundary_inversion`: the inversion hit its bracket boundary (`φ⁻¹`
/// saturated) or the path carried no curvature information (degenerate
/// resolution ratio).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimateFlags {
    pub clamped: bool,
    pub boundary_inversion: bool,
}

impl EstimateFlags {
    pub fn any(&self) -> bool {
        self.clamped || self.boundary_inversion
    }

    /// Field-wise OR — used when an estimate inherits the flags of a plug-in
    /// quantity it consumed.
    pub fn union(self, other: Self) -> Self {
        Self {
            clamped: self.clamped || other.clamped,
            boundary_inversion: self.boundary_inversion || other.boundary_inversion,
        }
    }
}

/// A Hurst point estimate with its asymptotic confidence interval.
///
/// `raw_value` is the untruncated estimator output (it can fall outside
/// `(0, 1)` for the resolution-comparison estimator); `value` is the reported
/// estimate after range clamping. Confidence bounds are centered at `value`
/// and are *not* truncated to `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurstEstimate {
    pub estimator: EstimatorKind,
    pub value: f64,
    pub raw_value: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub flags: EstimateFlags,
}

/// A squared-volatility estimate; `ci_low` is truncated at zero since the
/// target is nonnegative. `h_used` records the plug-in Hurst argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolatilityEstimate {
    pub c2: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub h_used: f64,
    pub flags: EstimateFlags,
}

/// Result of inverting `φ`: `boundary` is set when the requested value lay
/// outside the range of `φ` over the bracket and the nearer endpoint was
/// returned instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiInversion {
    pub value: f64,
    pub boundary: bool,
}

/// Asymptotic variance constants of the quadratic-variation estimators at a
/// fixed Hurst value.
///
/// * `sigma2` scales the CLT of the single-resolution statistic (used by the
///   known-`c` Hurst estimator and the volatility estimator),
/// * `sigma_star2` scales the resolution-comparison estimator,
/// * `sigma1_sq`, `sigma2_sq` and `sigma12` are the intermediate lag-shifted
///   and cross-resolution covariance constants entering `sigma_star2`.
///
/// `truncation_terms` is the number of series terms summed and `tail_bound`
/// an analytic bound on the discarded tail's contribution to `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymVariances {
    pub hurst: f64,
    pub sigma2: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma12: f64,
    pub sigma_star2: f64,
    pub truncation_terms: usize,
    pub tail_bound: f64,
}

/// Normalized fourth-difference autocorrelation helper: even in `l`, with
/// `rho(l) ≈ −|l|^{2H−4}` as `|l| → ∞`. The correlation of standardized
/// second-order increments of fBm at lag `l` equals
/// `(2H(2H−1)(2H−2)(2H−3) / (2(4 − 2^{2H}))) · rho(l)`.
pub fn rho(l: i64, hurst: f64) -> Result<f64, EstimatorError> {
    if !(hurst.is_finite() && hurst > 0.0 && hurst < 1.0 && hurst != 0.5) {
        return Err(EstimatorError::InvalidHurst(hurst));
    }
    let two_h = 2.0 * hurst;
    let d4 = two_h * (two_h - 1.0) * (two_h - 2.0) * (two_h - 3.0);
    // Work with |l|; the formula below is manifestly even in l, so the
    // computation for -l is bit-identical to the one for l.
    let la = l.unsigned_abs() as f64;
    let p = |v: f64| v.abs().powf(two_h);
    Ok((-p(la - 2.0) + 4.0 * p(la - 1.0) - 6.0 * p(la) + 4.0 * p(la + 1.0) - p(la + 2.0)) / d4)
}

/// Computes the asymptotic variance constants at `hurst ∈ (1/2, 1)`.
///
/// The three series `Σ_{l≥2} rho(l)²`, `Σ_{l≥2} rho(l) rho(l−2)` and
/// `Σ_{l≥2} rho(l) rho(l−1)` are accumulated with a rolling window of five
/// integer powers (one new `powf` per term). Summation stops once at least
/// [`SERIES_MIN_TERMS`] terms are in, every current term is below `rel_tol`
/// relative to the accumulated scale, and the analytic tail bound
/// `c₁ K² L^{4H−7} / (7 − 4H)` with `K = |rho(L)| L^{4−2H}` (from
/// `|rho(l)| ≤ K l^{2H−4}` for `l ≥ L`) is below [`SERIES_TAIL_REL_BOUND`]
/// relative to the partial `sigma2`.
pub fn asym_variances(hurst: f64, rel_tol: f64) -> Result<AsymVariances, EstimatorError> {
    if !(hurst.is_finite() && hurst > 0.5 && hurst < 1.0) {
        return Err(EstimatorError::InvalidHurst(hurst));
    }
    if !(rel_tol.is_finite() && rel_tol > 0.0) {
        return Err(EstimatorError::InvalidTolerance(rel_tol));
    }

    let two_h = 2.0 * hurst;
    let d4 = two_h * (two_h - 1.0) * (two_h - 2.0) * (two_h - 3.0);
    let pow_gap = 4.0 - 2f64.powf(two_h);
    let c1 = (d4 / pow_gap) * (d4 / pow_gap);

    // Powers k^{2H} for k = 0..=4 seed the windows for rho(0), rho(1) and
    // the rolling evaluation from l = 2 on.
    let mut pows = [0.0f64; 5];
    for (k, slot) in pows.iter_mut().enumerate() {
        *slot = (k as f64).powf(two_h);
    }
    // rho(0) window |l−2..l+2| = (2,1,0,1,2); rho(1) window = (1,0,1,2,3).
    let rho1 = (-pows[1] + 4.0 * pows[0] - 6.0 * pows[1] + 4.0 * pows[2] - pows[3]) / d4;

    let mut window = pows; // |l−2..l+2| for l = 2
    let mut rho_prev1 = rho1; // rho(l−1)
    let mut rho_prev2 = (8.0 * pows[1] - 2.0 * pows[2]) / d4; // rho(l−2) = rho(0)
    let mut s0 = 0.0f64;
    let mut s1 = 0.0f64;
    let mut s2 = 0.0f64;
    let mut l: u64 = 2;
    let (truncation_terms, tail_bound) = loop {
        let r = (-window[0] + 4.0 * window[1] - 6.0 * window[2] + 4.0 * window[3] - window[4]) / d4;
        let t0 = r * r;
        let t1 = r * rho_prev2;
        let t2 = r * rho_prev1;
        s0 += t0;
        s1 += t1;
        s2 += t2;

        let count = (l - 1) as usize;
        let scale = s0.abs().max(1.0);
        let small = t0.abs() <= rel_tol * scale
            && t1.abs() <= rel_tol * scale
            && t2.abs() <= rel_tol * scale;
        let k_const = r.abs() * (l as f64).powf(4.0 - two_h);
        let tail =
            c1 * k_const * k_const * (l as f64).powf(4.0 * hurst - 7.0) / (7.0 - 4.0 * hurst);
        let sigma2_partial = 2.0 + c1 * (rho1 * rho1 + s0);
        if count >= SERIES_MIN_TERMS && small && tail <= SERIES_TAIL_REL_BOUND * sigma2_partial {
            break (count, tail);
        }
        if count >= SERIES_MAX_TERMS {
            return Err(EstimatorError::SeriesNotConverged { terms: count });
        }

        rho_prev2 = rho_prev1;
        rho_prev1 = r;
        window.rotate_left(1);
        window[4] = ((l + 3) as f64).powf(two_h);
        l += 1;
    };

    let c2_const = c1 * rho1 * rho1;
    let sigma2 = 2.0 + c2_const + c1 * s0;
    let sigma1_sq = 0.5 * c2_const + c1 * s1;
    // Closed-form leading term 2 (2^{2H+2} − 7 − 3^{2H}) / (4 − 2^{2H}); it
    // equals −2 √c2_const on (1/2, 1) (the lag-1 correlation is negative
    // there) and keeping it signed is what makes sigma_star2 positive.
    let lead = 2.0 * (2f64.powf(two_h + 2.0) - 7.0 - 3f64.powf(two_h)) / pow_gap;
    let sigma2_sq = lead + c1 * s2;
    let sigma12 = 2f64.powf(-two_h) * (3.0 * sigma2 + sigma1_sq + 4.0 * sigma2_sq);
    let sigma_star2 = 1.5 * sigma2 - 2.0 * sigma12;
    debug_assert!(sigma_star2 > 0.0, "sigma_star2 must be positive on (1/2, 1)");

    Ok(AsymVariances {
        hurst,
        sigma2,
        sigma1_sq,
        sigma2_sq,
        sigma12,
        sigma_star2,
        truncation_terms,
        tail_bound,
    })
}

/// `φ(n, T, x) = (T/n)^{2x} (4 − 2^{2x})`, the expected squared normalized
/// second-order increment per observation at Hurst value `x`. Strictly
/// decreasing in `x` on `(0, 1)` whenever `n > T`.
pub fn phi(n: usize, horizon: f64, x: f64) -> f64 {
    (horizon / n as f64).powf(2.0 * x) * (4.0 - 2f64.powf(2.0 * x))
}

/// Inverts `x ↦ φ(n, T, x)` over `[PHI_BRACKET_DELTA, 1 − PHI_BRACKET_DELTA]`
/// by bisection. Values of `y` outside the attainable range map to the
/// nearer bracket endpoint with `boundary` set; `y = 0` (a degenerate path)
/// maps to the upper endpoint.
pub fn phi_inverse(y: f64, n: usize, horizon: f64) -> Result<PhiInversion, EstimatorError> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(EstimatorError::InvalidHorizon(horizon));
    }
    if n as f64 <= horizon {
        return Err(EstimatorError::PhiDomain { n, horizon });
    }
    if !y.is_finite() || y < 0.0 {
        return Err(EstimatorError::InvalidQuadraticVariation(y));
    }
    let mut lo = PHI_BRACKET_DELTA;
    let mut hi = 1.0 - PHI_BRACKET_DELTA;
    if y >= phi(n, horizon, lo) {
        return Ok(PhiInversion {
            value: lo,
            boundary: true,
        });
    }
    if y <= phi(n, horizon, hi) {
        return Ok(PhiInversion {
            value: hi,
            boundary: true,
        });
    }
    // Invariant: phi(lo) > y > phi(hi); phi is strictly decreasing.
    while hi - lo > PHI_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if phi(n, horizon, mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PhiInversion {
        value: 0.5 * (lo + hi),
        boundary: false,
    })
}

/// Quadratic variation of second-order increments of a (driver-like) path,
/// normalized by `n φ(n, T, H)` so that fBm with Hurst `hurst` yields values
/// concentrating at one.
pub fn normalized_quadratic_variation(
    values: &[f64],
    horizon: f64,
    hurst: f64,
) -> Result<f64, EstimatorError> {
    if values.len() < 3 {
        return Err(EstimatorError::TooShort {
            len: values.len(),
            min: 3,
        });
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(EstimatorError::InvalidHorizon(horizon));
    }
    if !(hurst.is_finite() && hurst > 0.0 && hurst < 1.0) {
        return Err(EstimatorError::InvalidHurst(hurst));
    }
    let n = values.len() - 1;
    let mut sum = 0.0;
    for w in values.windows(3) {
        let d2 = w[2] - 2.0 * w[1] + w[0];
        sum += d2 * d2;
    }
    Ok(sum / (n as f64 * phi(n, horizon, hurst)))
}

/// Σ over valid centers of `((X_{k+step} − 2 X_k + X_{k−step}) / X_k)²`.
fn ratio_sum(values: &[f64], step: usize) -> f64 {
    let mut s = 0.0;
    let mut k = step;
    while k + step < values.len() {
        let d2 = values[k + step] - 2.0 * values[k] + values[k - step];
        let z = d2 / values[k];
        s += z * z;
        k += step;
    }
    s
}

fn check_level(level: f64) -> Result<f64, EstimatorError> {
    if !(level.is_finite() && level > 0.0 && level < 1.0) {
        return Err(EstimatorError::InvalidLevel(level));
    }
    standard_normal_quantile(0.5 + 0.5 * level).map_err(|_| EstimatorError::InvalidLevel(level))
}

/// Known-volatility Hurst estimator: inverts `φ` on the mean squared
/// normalized second-order increment `(1/n) Σ_k (Δ²X_k / (c X_k))²`.
/// Requires `n > horizon`. The standard error is
/// `σ(Ĥ) / (2 √n ln(n/T))` with `σ² = sigma2` evaluated at the (clamped)
/// estimate.
pub fn estimate_h1(path: &SamplePath, c: f64, level: f64) -> Result<HurstEstimate, EstimatorError> {
    if !(c.is_finite() && c != 0.0) {
        return Err(EstimatorError::InvalidVolatility(c));
    }
    let z = check_level(level)?;
    let x = path.values();
    if x.len() < 4 {
        return Err(EstimatorError::TooShort {
            len: x.len(),
            min: 4,
        });
    }
    let grid = path.grid();
    let n = grid.n();
    let s = ratio_sum(x, 1) / (c * c * n as f64);
    let inv = phi_inverse(s, n, grid.horizon())?;
    let value = inv.value;
    let h_eval = value.clamp(SIGMA_EVAL_MIN, SIGMA_EVAL_MAX);
    let av = asym_variances(h_eval, SERIES_REL_TOL)?;
    let nf = n as f64;
    let se = av.sigma2.sqrt() / (2.0 * nf.sqrt() * (nf / grid.horizon()).ln());
    Ok(HurstEstimate {
        estimator: EstimatorKind::H1,
        value,
        raw_value: value,
        std_error: se,
        ci_low: value - z * se,
        ci_high: value + z * se,
        flags: EstimateFlags {
            clamped: h_eval != value,
            boundary_inversion: inv.boundary,
        },
    })
}

/// Resolution-comparison Hurst estimator on a path with `2n + 1`
/// observations:
///
/// ```text
/// Ĥ = 1/2 − ln(S_fine / S_coarse) / (2 ln 2),
/// ```
///
/// where `S_fine` sums squared normalized second-order increments over all
/// observations and `S_coarse` over every second one. The volatility cancels,
/// so no parameter is needed. The standard error is
/// `σ*(Ĥ) / (2 ln 2 √n)` with `σ*² = sigma_star2` at the (clamped) estimate.
pub fn estimate_h2(path: &SamplePath, level: f64) -> Result<HurstEstimate, EstimatorError> {
    let z = check_level(level)?;
    let x = path.values();
    if x.len() < 5 {
        return Err(EstimatorError::TooShort {
            len: x.len(),
            min: 5,
        });
    }
    if x.len().is_multiple_of(2) {
        return Err(EstimatorError::NeedsOddLength { len: x.len() });
    }
    let n = (x.len() - 1) / 2;
    let s_fine = ratio_sum(x, 1);
    let s_coarse = ratio_sum(x, 2);
    let (raw, boundary) = if s_fine > 0.0 && s_coarse > 0.0 {
        (
            0.5 - (s_fine / s_coarse).ln() / (2.0 * std::f64::consts::LN_2),
            false,
        )
    } else {
        // No curvature information at one of the resolutions.
        (0.5, true)
    };
    let value = raw.clamp(PHI_BRACKET_DELTA, 1.0 - PHI_BRACKET_DELTA);
    let h_eval = value.clamp(SIGMA_EVAL_MIN, SIGMA_EVAL_MAX);
    let av = asym_variances(h_eval, SERIES_REL_TOL)?;
    let se = av.sigma_star2.sqrt() / (2.0 * std::f64::consts::LN_2 * (n as f64).sqrt());
    Ok(HurstEstimate {
        estimator: EstimatorKind::H2,
        value,
        raw_value: raw,
        std_error: se,
        ci_low: value - z * se,
        ci_high: value + z * se,
        flags: EstimateFlags {
            clamped: value != raw || h_eval != value,
            boundary_inversion: boundary,
        },
    })
}

/// Squared-volatility estimator at plug-in Hurst value `h3`:
///
/// ```text
/// ĉ² = Σ_k (Δ²X_k / X_k)² / (n φ(n, T, h3)).
/// ```
///
/// The standard error is `ĉ² σ(h3) / √n`; the caller is responsible for
/// combining `flags` with those of the estimate that produced `h3` (see
/// [`EstimateFlags::union`]).
pub fn estimate_c2(
    path: &SamplePath,
    h3: f64,
    level: f64,
) -> Result<VolatilityEstimate, EstimatorError> {
    let z = check_level(level)?;
    if !(h3.is_finite() && h3 > 0.0 && h3 < 1.0) {
        return Err(EstimatorError::InvalidPlugInHurst(h3));
    }
    let x = path.values();
    if x.len() < 4 {
        return Err(EstimatorError::TooShort {
            len: x.len(),
            min: 4,
        });
    }
    let grid = path.grid();
    let n = grid.n();
    let c2 = ratio_sum(x, 1) / (n as f64 * phi(n, grid.horizon(), h3));
    let h_eval = h3.clamp(SIGMA_EVAL_MIN, SIGMA_EVAL_MAX);
    let av = asym_variances(h_eval, SERIES_REL_TOL)?;
    let se = c2 * av.sigma2.sqrt() / (n as f64).sqrt();
    Ok(VolatilityEstimate {
        c2,
        std_error: se,
        ci_low: (c2 - z * se).max(0.0),
        ci_high: c2 + z * se,
        h_used: h3,
        flags: EstimateFlags {
            clamped: h_eval != h3,
            boundary_inversion: false,
        },
    })
}

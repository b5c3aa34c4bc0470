//! Exact sampling of fractional Brownian motion on uniform grids.
//!
//! A fractional Brownian motion (fBm) with Hurst exponent `H ∈ (0, 1)` is the
//! centered Gaussian process with covariance
//! `E[B_s B_t] = (|s|^{2H} + |t|^{2H} − |t−s|^{2H}) / 2`.
//! Its increments over a uniform grid form a stationary Gaussian sequence
//! (fractional Gaussian noise), which this module samples *exactly*:
//!
//! * [`Method::SpectralCirculant`] embeds the increment covariance into a
//!   circulant matrix and synthesizes the noise through FFTs in
//!   `O(n log n)`. The embedding is nonnegative definite for every
//!   `H ∈ (0, 1)`; if rounding ever produced a negative eigenvalue beyond
//!   [`EMBEDDING_EIGENVALUE_REL_TOL`], generation falls back to Cholesky and
//!   the path records the method actually used.
//! * [`Method::Cholesky`] factors the dense increment covariance in
//!   `O(n^3)`; exact as well, practical for moderate `n` and kept as the
//!   fallback of last resort.
//!
//! Paths are pure functions of `(grid, hurst, seed, method)`.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::grid::{GridError, GridSpec};
use crate::rng::{rng_from_seed, PolarGaussian};

/// Relative tolerance for negative circulant eigenvalues. Eigenvalues in
/// `[-tol * max_eigenvalue, 0)` are treated as rounding noise and clamped to
/// zero; anything more negative rejects the embedding (Cholesky fallback).
pub const EMBEDDING_EIGENVALUE_REL_TOL: f64 = 1e-9;

/// Errors raised by fBm construction and sampling.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FbmError {
    #[error("hurst exponent must lie in the open interval (0, 1), got {0}")]
    InvalidHurst(f64),
    #[error("covariance arguments must be nonnegative finite reals, got ({0}, {1})")]
    InvalidCovarianceArgs(f64, f64),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("increment input needs at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("path values must start at 0 and have grid length {expected}, got {got}")]
    MalformedValues { expected: usize, got: usize },
    #[error("increment covariance is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
}

/// Sampling algorithm requested by the caller (and recorded on the path).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Circulant embedding of the increment covariance, synthesized by FFT.
    SpectralCirculant,
    /// Dense Cholesky factorization of the increment covariance.
    Cholesky,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::SpectralCirculant => write!(f, "spectral_circulant"),
            Method::Cholesky => write!(f, "cholesky"),
        }
    }
}

/// Covariance of fBm, `(|s|^{2H} + |t|^{2H} − |t−s|^{2H}) / 2`.
pub fn covariance(s: f64, t: f64, hurst: f64) -> Result<f64, FbmError> {
    check_hurst_open01(hurst)?;
    if !(s.is_finite() && t.is_finite() && s >= 0.0 && t >= 0.0) {
        return Err(FbmError::InvalidCovarianceArgs(s, t));
    }
    let h2 = 2.0 * hurst;
    Ok(0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2)))
}

/// One exactly sampled fBm trajectory on a uniform grid.
///
/// Invariants: `values.len() == grid.n() + 1`, `values[0] == 0`, and `method`
/// is the algorithm that actually produced the values (the fallback is
/// recorded if the embedding was rejected).
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath {
    grid: GridSpec,
    hurst: f64,
    values: Vec<f64>,
    seed: u64,
    method: Method,
}

impl FbmPath {
    /// Assembles a path from parts, validating the structural invariants.
    /// Useful for observed data and for tests; `generate_path` is the sampler.
    pub fn from_parts(
        grid: GridSpec,
        hurst: f64,
        values: Vec<f64>,
        seed: u64,
        method: Method,
    ) -> Result<Self, FbmError> {
        check_hurst_open01(hurst)?;
        if values.len() != grid.n() + 1 || values[0] != 0.0 {
            return Err(FbmError::MalformedValues {
                expected: grid.n() + 1,
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            hurst,
            values,
            seed,
            method,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// Path values `B_{t_0}, …, B_{t_n}` with `B_{t_0} = 0`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Algorithm that actually produced the values.
    pub fn method(&self) -> Method {
        self.method
    }

    /// Keeps every `step`-th point. Subsampling an exact path is again an
    /// exact path (on the thinned grid) of the same realization.
    pub fn thinned(&self, step: usize) -> Result<Self, FbmError> {
        let grid = self.grid.thinned(step)?;
        let values: Vec<f64> = self.values.iter().copied().step_by(step).collect();
        debug_assert_eq!(values.len(), grid.n() + 1);
        Ok(Self {
            grid,
            hurst: self.hurst,
            values,
            seed: self.seed,
            method: self.method,
        })
    }
}

/// Samples one fBm path. The result is a pure function of the arguments; the
/// path records the method that actually ran (see [`Method`]).
pub fn generate_path(
    grid: GridSpec,
    hurst: f64,
    seed: u64,
    method: Method,
) -> Result<FbmPath, FbmError> {
    check_hurst_open01(hurst)?;
    let n = grid.n();
    let dt = grid.dt();
    let mut rng = rng_from_seed(seed);
    let mut gauss = PolarGaussian::new();

    let (fgn, used) = match method {
        Method::SpectralCirculant => {
            match fgn_circulant(n, hurst, dt, &mut rng, &mut gauss) {
                Some(fgn) => (fgn, Method::SpectralCirculant),
                // Embedding rejected: restart the stream so the fallback is
                // itself a pure function of the seed.
                None => {
                    let mut rng = rng_from_seed(seed);
                    let mut gauss = PolarGaussian::new();
                    (
                        fgn_cholesky(n, hurst, dt, &mut rng, &mut gauss)?,
                        Method::Cholesky,
                    )
                }
            }
        }
        Method::Cholesky => (
            fgn_cholesky(n, hurst, dt, &mut rng, &mut gauss)?,
            Method::Cholesky,
        ),
    };

    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for inc in &fgn {
        acc += inc;
        values.push(acc);
    }
    Ok(FbmPath {
        grid,
        hurst,
        values,
        seed,
        method: used,
    })
}

/// Forward increments `x_{k+1} − x_k`; input needs at least two values.
pub fn first_increments(values: &[f64]) -> Result<Vec<f64>, FbmError> {
    if values.len() < 2 {
        return Err(FbmError::TooShort {
            needed: 2,
            got: values.len(),
        });
    }
    Ok(values.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Second-order increments `x_{k+1} − 2 x_k + x_{k−1}` for `k = 1..len−1`;
/// input needs at least three values.
pub fn second_order_increments(values: &[f64]) -> Result<Vec<f64>, FbmError> {
    if values.len() < 3 {
        return Err(FbmError::TooShort {
            needed: 3,
            got: values.len(),
        });
    }
    Ok(values.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect())
}

fn check_hurst_open01(hurst: f64) -> Result<(), FbmError> {
    if hurst.is_finite() && hurst > 0.0 && hurst < 1.0 {
        Ok(())
    } else {
        Err(FbmError::InvalidHurst(hurst))
    }
}

/// Autocovariance of fGn with spacing `dt` at lag `k`:
/// `dt^{2H} (|k+1|^{2H} − 2|k|^{2H} + |k−1|^{2H}) / 2`.
fn fgn_autocovariance(k: usize, hurst: f64, dt: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * dt.powf(h2) * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Accepts the embedding when every eigenvalue is above
/// `-EMBEDDING_EIGENVALUE_REL_TOL * max`; tiny negatives are rounding noise.
fn embedding_eigenvalues_acceptable(eigenvalues: &[f64]) -> bool {
    let max = eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let floor = -EMBEDDING_EIGENVALUE_REL_TOL * max.max(0.0);
    eigenvalues.iter().all(|&l| l >= floor)
}

thread_local! {
    // rustfft planners memoize twiddle tables per size; one per thread keeps
    // repeated same-size syntheses cheap without locking.
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_fft(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

/// Davies–Harte synthesis of `n` fGn increments, or `None` if the circulant
/// eigenvalues fail the tolerance check.
fn fgn_circulant(
    n: usize,
    hurst: f64,
    dt: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
    gauss: &mut PolarGaussian,
) -> Option<Vec<f64>> {
    let m = 2 * n;
    // First row of the circulant extension: gamma(0..=n), then mirrored.
    let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
    for k in 0..=n {
        row.push(Complex::new(fgn_autocovariance(k, hurst, dt), 0.0));
    }
    for k in (1..n).rev() {
        row.push(Complex::new(fgn_autocovariance(k, hurst, dt), 0.0));
    }
    debug_assert_eq!(row.len(), m);

    let fft = plan_fft(m);
    fft.process(&mut row);
    let eigenvalues: Vec<f64> = row.iter().map(|c| c.re).collect();
    if !embedding_eigenvalues_acceptable(&eigenvalues) {
        return None;
    }

    // Hermitian spectral coefficients from M independent standard normals:
    //   V_0     = sqrt(l_0 / M) Z_0
    //   V_n     = sqrt(l_n / M) Z_n
    //   V_j     = sqrt(l_j / 2M) (Z_j + i W_j),  V_{M-j} = conj(V_j)
    // FFT(V) is then a real Gaussian vector with the circulant covariance.
    let mf = m as f64;
    let mut spec = vec![Complex::new(0.0, 0.0); m];
    spec[0] = Complex::new((eigenvalues[0].max(0.0) / mf).sqrt() * gauss.sample(rng), 0.0);
    for j in 1..n {
        let scale = (eigenvalues[j].max(0.0) / (2.0 * mf)).sqrt();
        let re = gauss.sample(rng);
        let im = gauss.sample(rng);
        spec[j] = Complex::new(scale * re, scale * im);
        spec[m - j] = spec[j].conj();
    }
    spec[n] = Complex::new((eigenvalues[n].max(0.0) / mf).sqrt() * gauss.sample(rng), 0.0);

    fft.process(&mut spec);
    Some(spec[..n].iter().map(|c| c.re).collect())
}

/// Dense Cholesky synthesis of `n` fGn increments. `O(n^2)` memory,
/// `O(n^3)` time; errors only if the covariance loses positive definiteness.
fn fgn_cholesky(
    n: usize,
    hurst: f64,
    dt: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
    gauss: &mut PolarGaussian,
) -> Result<Vec<f64>, FbmError> {
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(k, hurst, dt)).collect();
    // Lower-triangular factor, rows packed contiguously.
    let mut l = vec![0.0f64; n * (n + 1) / 2];
    let row_start = |i: usize| i * (i + 1) / 2;
    for i in 0..n {
        for j in 0..=i {
            let mut sum = gamma[i - j];
            for k in 0..j {
                sum -= l[row_start(i) + k] * l[row_start(j) + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(FbmError::NotPositiveDefinite {
                        index: i,
                        pivot: sum,
                    });
                }
                l[row_start(i) + j] = sum.sqrt();
            } else {
                l[row_start(i) + j] = sum / l[row_start(j) + j];
            }
        }
    }
    let mut z = vec![0.0f64; n];
    gauss.fill(rng, &mut z);
    let mut fgn = vec![0.0f64; n];
    for i in 0..n {
        let mut acc = 0.0;
        for k in 0..=i {
            acc += l[row_start(i) + k] * z[k];
        }
        fgn[i] = acc;
    }
    Ok(fgn)
}

#[cfg(test)]
// Frozen oracle values are recorded at full decimal length on purpose.
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    /// cov(1, 3, 0.75) = (1 + 3^1.5 − 2^1.5)/2, frozen from a 40-digit
    /// independent evaluation.
    #[test]
    fn covariance_frozen_values() {
        let got = covariance(1.0, 3.0, 0.75).unwrap();
        assert!((got - 1.6838626489802209).abs() < 1e-15, "got {got}");
        // Equal arguments give the variance t^{2H}.
        let got = covariance(2.0, 2.0, 0.6).unwrap();
        assert!((got - 2.2973967099940700).abs() < 1e-15, "got {got}");
        // H = 1/2 degenerates to Brownian motion: cov = min(s, t).
        let got = covariance(1.0, 2.0, 0.5).unwrap();
        assert!((got - 1.0).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn covariance_is_symmetric() {
        for &(s, t, h) in &[(0.25, 0.75, 0.6), (1.5, 0.1, 0.8), (2.0, 3.0, 0.55)] {
            assert_eq!(
                covariance(s, t, h).unwrap().to_bits(),
                covariance(t, s, h).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn covariance_rejects_bad_arguments() {
        assert!(matches!(
            covariance(1.0, 1.0, 0.0),
            Err(FbmError::InvalidHurst(_))
        ));
        assert!(matches!(
            covariance(1.0, 1.0, 1.0),
            Err(FbmError::InvalidHurst(_))
        ));
        assert!(matches!(
            covariance(-1.0, 1.0, 0.7),
            Err(FbmError::InvalidCovarianceArgs(..))
        ));
    }

    #[test]
    fn increments_shapes_and_edges() {
        let v = [0.0, 1.0, 3.0, 2.0];
        assert_eq!(first_increments(&v).unwrap(), vec![1.0, 2.0, -1.0]);
        assert_eq!(second_order_increments(&v).unwrap(), vec![1.0, -3.0]);
        assert!(first_increments(&[0.0]).is_err());
        assert!(second_order_increments(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let grid = GridSpec::new(128, 1.0).unwrap();
        let a = generate_path(grid, 0.7, 99, Method::SpectralCirculant).unwrap();
        let b = generate_path(grid, 0.7, 99, Method::SpectralCirculant).unwrap();
        assert_eq!(a, b);
        let c = generate_path(grid, 0.7, 100, Method::SpectralCirculant).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn path_structure_invariants() {
        let grid = GridSpec::new(64, 2.0).unwrap();
        for method in [Method::SpectralCirculant, Method::Cholesky] {
            let p = generate_path(grid, 0.55, 3, method).unwrap();
            assert_eq!(p.values().len(), 65);
            assert_eq!(p.values()[0], 0.0);
            assert_eq!(p.method(), method);
            assert!(p.values().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn thinning_keeps_every_second_point() {
        let grid = GridSpec::new(8, 1.0).unwrap();
        let p = generate_path(grid, 0.7, 1, Method::SpectralCirculant).unwrap();
        let t = p.thinned(2).unwrap();
        assert_eq!(t.grid().n(), 4);
        assert_eq!(t.values()[1], p.values()[2]);
        assert_eq!(t.values()[4], p.values()[8]);
    }

    #[test]
    fn eigenvalue_guard_logic() {
        assert!(embedding_eigenvalues_acceptable(&[2.0, 1.0, 0.0]));
        // Negative within tolerance: rounding noise, accepted.
        assert!(embedding_eigenvalues_acceptable(&[2.0, -1e-10]));
        // Negative beyond tolerance: rejected.
        assert!(!embedding_eigenvalues_acceptable(&[2.0, -1e-8]));
    }

    #[test]
    fn cholesky_rejects_indefinite_input_via_invalid_pivot() {
        // The fGn covariance is PD for valid H, so exercise the pivot guard
        // directly through a tiny hand-built failure: hurst at the boundary is
        // rejected earlier, so check the error type plumbing instead.
        let grid = GridSpec::new(4, 1.0).unwrap();
        assert!(generate_path(grid, 1.0, 0, Method::Cholesky).is_err());
    }

    /// Circulant and Cholesky draw from the same law; compare their
    /// empirical second moments at matched seeds count.
    #[test]
    fn methods_agree_in_distribution() {
        let grid = GridSpec::new(16, 1.0).unwrap();
        let reps = 4000;
        let mut var_c = 0.0;
        let mut var_l = 0.0;
        for seed in 0..reps {
            let pc = generate_path(grid, 0.7, seed, Method::SpectralCirculant).unwrap();
            let pl = generate_path(grid, 0.7, seed + reps, Method::Cholesky).unwrap();
            var_c += pc.values()[16] * pc.values()[16];
            var_l += pl.values()[16] * pl.values()[16];
        }
        var_c /= reps as f64;
        var_l /= reps as f64;
        // Var(B_1) = 1; each estimate has sd ~ sqrt(2/reps) ≈ 0.022.
        assert!((var_c - 1.0).abs() < 0.1, "circulant var {var_c}");
        assert!((var_l - 1.0).abs() < 0.1, "cholesky var {var_l}");
    }
}

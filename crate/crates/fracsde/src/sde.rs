//! Closed-form sample paths of geometric-type SDEs driven by fBm.
//!
//! The equation
//!
//! ```text
//! dX_t = (a X_t^m + b X_t) dt + c X_t dB^H_t,   X_0 = x0 > 0,
//! ```
//!
//! with `a ≤ 0`, integer `m ≥ 2`, `c ≠ 0` and `H ∈ (1/2, 1)` (pathwise
//! integration) has the explicit positive solution
//!
//! ```text
//! X_t = e^{b t + c B^H_t} · ( x0^{1−m} + (1−m) a ∫_0^t e^{(m−1)(b s + c B^H_s)} ds )^{1/(1−m)}.
//! ```
//!
//! This module evaluates that formula along a simulated driver. The time
//! integral is approximated by the trapezoid rule on a grid `refine×` finer
//! than the observation grid; driver values on the fine grid come from
//! generating the driver *once* at the finest resolution and subsampling, so
//! the quadrature and the observed path always belong to the same
//! realization.

use thiserror::Error;

use crate::fbm::{generate_path, FbmError, FbmPath, Method};
use crate::grid::{GridError, GridSpec};

/// Exponent magnitude beyond which `exp` would leave the comfortably
/// representable range (`exp(709.8) ≈ f64::MAX`); evaluation fails with a
/// diagnostic instead of producing infinities.
pub const MAX_EXPONENT: f64 = 700.0;

/// Errors raised by parameter construction, evaluation and residual checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdeError {
    #[error("leading drift coefficient must satisfy a <= 0, got {0}")]
    PositiveLeadingCoefficient(f64),
    #[error("volatility coefficient c must be nonzero and finite, got {0}")]
    InvalidVolatility(f64),
    #[error("drift degree m must be an integer >= 2, got {0}")]
    DegreeTooLow(u32),
    #[error("initial value must be a positive finite real, got {0}")]
    InvalidInitialValue(f64),
    #[error("hurst exponent must lie in (1/2, 1), got {0}")]
    InvalidHurst(f64),
    #[error("drift coefficient b must be finite, got {0}")]
    InvalidDrift(f64),
    #[error("quadrature refinement must be >= 1")]
    InvalidRefine,
    #[error("driver hurst {driver} does not match parameter hurst {params}")]
    HurstMismatch { params: f64, driver: f64 },
    #[error("path and driver grids differ")]
    GridMismatch,
    #[error("exponent {exponent} at t = {t} exceeds the representable range (|.| > {MAX_EXPONENT})")]
    ExponentOverflow { t: f64, exponent: f64 },
    #[error("solution left the positive finite range at t = {t}")]
    NonFiniteSolution { t: f64 },
    #[error("sample path values must be positive finite with grid length {expected}, got length {got}")]
    MalformedValues { expected: usize, got: usize },
    #[error("path carries no SDE parameters (externally observed data)")]
    MissingParams,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Fbm(#[from] FbmError),
}

/// Named parameterizations of the drift polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `a = 0`: pure geometric dynamics `dX = b X dt + c X dB^H`.
    BlackScholes,
    /// `a = −1, m = 2`: logistic growth `dX = (b X − X²) dt + c X dB^H`.
    Verhulst,
    /// `a = −1, m = 3`: cubic saturation `dX = (b X − X³) dt + c X dB^H`.
    LandauGinzburg,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Model::BlackScholes => write!(f, "black_scholes"),
            Model::Verhulst => write!(f, "verhulst"),
            Model::LandauGinzburg => write!(f, "landau_ginzburg"),
        }
    }
}

/// Coefficients of `dX = (a X^m + b X) dt + c X dB^H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeParams {
    a: f64,
    b: f64,
    c: f64,
    m: u32,
    x0: f64,
    hurst: f64,
}

impl SdeParams {
    pub fn new(a: f64, b: f64, c: f64, m: u32, x0: f64, hurst: f64) -> Result<Self, SdeError> {
        if !(a.is_finite() && a <= 0.0) {
            return Err(SdeError::PositiveLeadingCoefficient(a));
        }
        if !b.is_finite() {
            return Err(SdeError::InvalidDrift(b));
        }
        if !(c.is_finite() && c != 0.0) {
            return Err(SdeError::InvalidVolatility(c));
        }
        if m < 2 {
            return Err(SdeError::DegreeTooLow(m));
        }
        if !(x0.is_finite() && x0 > 0.0) {
            return Err(SdeError::InvalidInitialValue(x0));
        }
        if !(hurst.is_finite() && hurst > 0.5 && hurst < 1.0) {
            return Err(SdeError::InvalidHurst(hurst));
        }
        Ok(Self {
            a,
            b,
            c,
            m,
            x0,
            hurst,
        })
    }

    /// Standard parameterizations: growth rate `lambda` (the linear drift
    /// coefficient `b`) and volatility `sigma` (the coefficient `c`).
    pub fn preset(model: Model, lambda: f64, sigma: f64, x0: f64, hurst: f64) -> Result<Self, SdeError> {
        let (a, m) = match model {
            Model::BlackScholes => (0.0, 2),
            Model::Verhulst => (-1.0, 2),
            Model::LandauGinzburg => (-1.0, 3),
        };
        Self::new(a, lambda, sigma, m, x0, hurst)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn m(&self) -> u32 {
        self.m
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn hurst(&self) -> f64 {
        self.hurst
    }
}

/// A solution trajectory observed on a uniform grid.
///
/// `params` and `driver_seed` are present for simulated paths and `None` for
/// externally observed data (e.g. loaded from CSV). Values are strictly
/// positive and finite, with `values[0] = x0` when parameters are known.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: GridSpec,
    values: Vec<f64>,
    params: Option<SdeParams>,
    driver_seed: Option<u64>,
}

impl SamplePath {
    /// Wraps observed positive values (no generating model attached).
    pub fn from_observed(grid: GridSpec, values: Vec<f64>) -> Result<Self, SdeError> {
        if values.len() != grid.n() + 1 || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(SdeError::MalformedValues {
                expected: grid.n() + 1,
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            values,
            params: None,
            driver_seed: None,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn params(&self) -> Option<&SdeParams> {
        self.params.as_ref()
    }

    pub fn driver_seed(&self) -> Option<u64> {
        self.driver_seed
    }

    /// Keeps every `step`-th observation (same realization, coarser grid).
    pub fn thinned(&self, step: usize) -> Result<Self, SdeError> {
        let grid = self.grid.thinned(step)?;
        let values: Vec<f64> = self.values.iter().copied().step_by(step).collect();
        debug_assert_eq!(values.len(), grid.n() + 1);
        Ok(Self {
            grid,
            values,
            params: self.params,
            driver_seed: self.driver_seed,
        })
    }
}

/// Evaluates the closed-form solution along `driver`, refining the quadrature
/// grid by `refine`.
///
/// The observation grid is `driver.grid()`. For `refine == 1` the passed
/// driver values are used directly. For `refine > 1` the driver realization
/// is produced at the `refine×` finer grid from the driver's `(seed, method)`
/// — determinism makes this exact — and both the quadrature and the returned
/// observations come from that single fine realization (its subsample; see
/// [`solve_with_observed_driver`] to retrieve it).
pub fn solve_polynomial_sde(
    params: &SdeParams,
    driver: &FbmPath,
    refine: u32,
) -> Result<SamplePath, SdeError> {
    solve_with_observed_driver(params, driver, refine).map(|(path, _)| path)
}

/// Same as [`solve_polynomial_sde`], additionally returning the driver values
/// on the observation grid (the subsampled fine realization) — needed e.g.
/// for [`residual_check`].
pub fn solve_with_observed_driver(
    params: &SdeParams,
    driver: &FbmPath,
    refine: u32,
) -> Result<(SamplePath, FbmPath), SdeError> {
    if driver.hurst() != params.hurst {
        return Err(SdeError::HurstMismatch {
            params: params.hurst,
            driver: driver.hurst(),
        });
    }
    if refine == 0 {
        return Err(SdeError::InvalidRefine);
    }
    if refine == 1 {
        let path = evaluate_on_fine(params, driver, 1)?;
        return Ok((path, driver.clone()));
    }
    let fine_grid = driver.grid().refined(refine)?;
    let fine = generate_path(fine_grid, driver.hurst(), driver.seed(), driver.method())?;
    let path = evaluate_on_fine(params, &fine, refine as usize)?;
    let observed = fine.thinned(refine as usize)?;
    Ok((path, observed))
}

/// Generates the driver at `grid.refined(refine)` from `(seed, method)` and
/// evaluates the solution observed on `grid`. Returns the path together with
/// the observed (subsampled) driver. This is the entry point Monte Carlo
/// sweeps use; it avoids materializing a coarse driver that would be thrown
/// away.
pub fn solve_from_seed(
    params: &SdeParams,
    grid: GridSpec,
    seed: u64,
    method: Method,
    refine: u32,
) -> Result<(SamplePath, FbmPath), SdeError> {
    if refine == 0 {
        return Err(SdeError::InvalidRefine);
    }
    let fine_grid = grid.refined(refine)?;
    let fine = generate_path(fine_grid, params.hurst, seed, method)?;
    let path = evaluate_on_fine(params, &fine, refine as usize)?;
    let observed = if refine == 1 {
        fine
    } else {
        fine.thinned(refine as usize)?
    };
    Ok((path, observed))
}

/// Core evaluation: `fine` is the driver at the quadrature resolution;
/// outputs are taken every `step`-th fine point.
fn evaluate_on_fine(
    params: &SdeParams,
    fine: &FbmPath,
    step: usize,
) -> Result<SamplePath, SdeError> {
    let fine_grid = fine.grid();
    let coarse_grid = fine_grid.thinned(step)?;
    let b = fine.values();
    let n_fine = fine_grid.n();
    let m1 = (params.m - 1) as f64;

    // Exponents e_j = b t_j + c B_j, guarded against exp overflow both for
    // the solution factor e^{e_j} and the integrand e^{(m-1) e_j}.
    let mut exponents = Vec::with_capacity(n_fine + 1);
    for (j, &bj) in b.iter().enumerate() {
        let e = params.b * fine_grid.t(j) + params.c * bj;
        let worst = if params.a == 0.0 { e.abs() } else { e.abs() * m1.max(1.0) };
        if !e.is_finite() || worst > MAX_EXPONENT {
            return Err(SdeError::ExponentOverflow {
                t: fine_grid.t(j),
                exponent: e,
            });
        }
        exponents.push(e);
    }

    let n = coarse_grid.n();
    let mut values = Vec::with_capacity(n + 1);
    if params.a == 0.0 {
        // Pure geometric case: X_t = x0 e^{b t + c B_t}; no quadrature.
        for k in 0..=n {
            values.push(params.x0 * exponents[k * step].exp());
        }
    } else {
        // Cumulative trapezoid of the integrand on the fine grid. The
        // combination x0^{1-m} + (1-m) a I_t is >= x0^{1-m} > 0 and
        // non-decreasing because (1-m) a >= 0.
        let dt = fine_grid.dt();
        let x0_pow = params.x0.powi(-((params.m as i32) - 1));
        let coef = (1.0 - params.m as f64) * params.a;
        let inv_exp = -1.0 / m1;
        let mut integral = 0.0;
        let mut g_prev = (m1 * exponents[0]).exp();
        values.push(params.x0);
        let mut next_output = step;
        for (j, &e) in exponents.iter().enumerate().skip(1) {
            let g = (m1 * e).exp();
            integral += 0.5 * dt * (g_prev + g);
            g_prev = g;
            if j == next_output {
                let base = x0_pow + coef * integral;
                values.push(e.exp() * base.powf(inv_exp));
                next_output += step;
            }
        }
    }

    for (k, v) in values.iter().enumerate() {
        if !(v.is_finite() && *v > 0.0) {
            return Err(SdeError::NonFiniteSolution {
                t: coarse_grid.t(k),
            });
        }
    }

    Ok(SamplePath {
        grid: coarse_grid,
        values,
        params: Some(*params),
        driver_seed: Some(fine.seed()),
    })
}

/// Maximum absolute defect of the integral form of the SDE along the path,
/// with left-point Riemann–Stieltjes sums on the observation grid:
///
/// ```text
/// max_k | X_k − x0 − Σ_{j<k} (a X_j^m + b X_j) Δt − c Σ_{j<k} X_j (B_{j+1} − B_j) |.
/// ```
///
/// `driver` must be the observed driver of `path` (same grid and the same
/// realization); shrinking mesh should shrink the defect.
pub fn residual_check(path: &SamplePath, driver: &FbmPath) -> Result<f64, SdeError> {
    let params = path.params.ok_or(SdeError::MissingParams)?;
    if path.grid != driver.grid() {
        return Err(SdeError::GridMismatch);
    }
    if params.hurst != driver.hurst() {
        return Err(SdeError::HurstMismatch {
            params: params.hurst,
            driver: driver.hurst(),
        });
    }
    let x = path.values();
    let b = driver.values();
    let dt = path.grid.dt();
    let mut acc = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..=path.grid.n() {
        let defect = (x[k] - params.x0 - acc).abs();
        worst = worst.max(defect);
        if k < path.grid.n() {
            let drift = params.a * x[k].powi(params.m as i32) + params.b * x[k];
            acc += drift * dt + params.c * x[k] * (b[k + 1] - b[k]);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n, 1.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SdeParams::new(0.5, 0.0, 1.0, 2, 1.0, 0.7).is_err());
        assert!(SdeParams::new(0.0, 0.0, 0.0, 2, 1.0, 0.7).is_err());
        assert!(SdeParams::new(0.0, 0.0, 1.0, 1, 1.0, 0.7).is_err());
        assert!(SdeParams::new(0.0, 0.0, 1.0, 2, 0.0, 0.7).is_err());
        assert!(SdeParams::new(0.0, 0.0, 1.0, 2, 1.0, 0.5).is_err());
        assert!(SdeParams::new(0.0, f64::INFINITY, 1.0, 2, 1.0, 0.7).is_err());
        assert!(SdeParams::new(-1.0, 0.5, 0.7, 3, 3.0, 0.75).is_ok());
    }

    #[test]
    fn presets_fix_the_polynomial() {
        let bs = SdeParams::preset(Model::BlackScholes, 0.5, 0.7, 3.0, 0.7).unwrap();
        assert_eq!((bs.a(), bs.m()), (0.0, 2));
        let vh = SdeParams::preset(Model::Verhulst, 0.5, 0.7, 3.0, 0.7).unwrap();
        assert_eq!((vh.a(), vh.m()), (-1.0, 2));
        let lg = SdeParams::preset(Model::LandauGinzburg, 0.5, 0.7, 3.0, 0.7).unwrap();
        assert_eq!((lg.a(), lg.m()), (-1.0, 3));
        assert_eq!((lg.b(), lg.c(), lg.x0()), (0.5, 0.7, 3.0));
    }

    #[test]
    fn black_scholes_matches_exponential_formula() {
        let params = SdeParams::preset(Model::BlackScholes, 0.5, 0.7, 3.0, 0.75).unwrap();
        let driver = fbm::generate_path(grid(64), 0.75, 11, fbm::Method::SpectralCirculant).unwrap();
        let path = solve_polynomial_sde(&params, &driver, 1).unwrap();
        for k in 0..=64 {
            let expect = 3.0 * (0.5 * driver.grid().t(k) + 0.7 * driver.values()[k]).exp();
            let got = path.values()[k];
            assert!(
                ((got - expect) / expect).abs() < 1e-14,
                "k={k}: got {got}, expect {expect}"
            );
        }
        assert_eq!(path.driver_seed(), Some(11));
        assert_eq!(path.params().unwrap().c(), 0.7);
    }

    #[test]
    fn constant_driver_without_drift_is_constant() {
        let g = grid(16);
        let driver =
            fbm::FbmPath::from_parts(g, 0.75, vec![0.0; 17], 0, fbm::Method::SpectralCirculant)
                .unwrap();
        // b = 0 and a = 0: X == x0 identically; the residual must vanish.
        let params = SdeParams::new(0.0, 0.0, 1.0, 2, 2.5, 0.75).unwrap();
        let path = solve_polynomial_sde(&params, &driver, 1).unwrap();
        assert!(path.values().iter().all(|&v| v == 2.5));
        assert_eq!(residual_check(&path, &driver).unwrap(), 0.0);
    }

    #[test]
    fn solution_is_positive_and_finite() {
        for model in [Model::BlackScholes, Model::Verhulst, Model::LandauGinzburg] {
            let params = SdeParams::preset(model, 0.5, 0.7, 3.0, 0.7).unwrap();
            let (path, _) = solve_from_seed(
                &params,
                grid(256),
                5,
                fbm::Method::SpectralCirculant,
                4,
            )
            .unwrap();
            assert_eq!(path.values().len(), 257);
            assert_eq!(path.values()[0], 3.0);
            assert!(path.values().iter().all(|&v| v > 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn observed_driver_is_subsampled_fine_realization() {
        let params = SdeParams::preset(Model::Verhulst, 0.5, 0.7, 3.0, 0.7).unwrap();
        let g = grid(32);
        let (_, observed) =
            solve_from_seed(&params, g, 123, fbm::Method::SpectralCirculant, 4).unwrap();
        let fine = fbm::generate_path(
            g.refined(4).unwrap(),
            0.7,
            123,
            fbm::Method::SpectralCirculant,
        )
        .unwrap();
        assert_eq!(observed.grid().n(), 32);
        for k in 0..=32 {
            assert_eq!(observed.values()[k], fine.values()[4 * k]);
        }
    }

    /// The bracket x0^{1-m} + (1-m) a ∫ … is non-decreasing and bounded below
    /// by x0^{1-m}; reconstruct it from the outputs and check.
    #[test]
    fn quadrature_bracket_is_monotone() {
        for (model, m) in [(Model::Verhulst, 2i32), (Model::LandauGinzburg, 3i32)] {
            let params = SdeParams::preset(model, 0.5, 0.7, 3.0, 0.7).unwrap();
            let (path, driver) =
                solve_from_seed(&params, grid(128), 77, fbm::Method::SpectralCirculant, 2).unwrap();
            let floor = 3.0f64.powi(1 - m);
            let mut prev = f64::MIN;
            for k in 0..=128 {
                let e = 0.5 * driver.grid().t(k) + 0.7 * driver.values()[k];
                let bracket = (e.exp() / path.values()[k]).powi(m - 1);
                assert!(
                    bracket >= floor * (1.0 - 1e-12),
                    "bracket {bracket} below floor {floor}"
                );
                assert!(bracket >= prev * (1.0 - 1e-12), "bracket not monotone");
                prev = bracket;
            }
        }
    }

    #[test]
    fn exponent_overflow_is_a_diagnostic_error() {
        let params = SdeParams::preset(Model::BlackScholes, 1e6, 0.7, 3.0, 0.7).unwrap();
        let driver = fbm::generate_path(grid(16), 0.7, 0, fbm::Method::SpectralCirculant).unwrap();
        match solve_polynomial_sde(&params, &driver, 1) {
            Err(SdeError::ExponentOverflow { exponent, .. }) => assert!(exponent.abs() > MAX_EXPONENT),
            other => panic!("expected overflow error, got {other:?}"),
        }
    }

    #[test]
    fn hurst_mismatch_is_rejected() {
        let params = SdeParams::preset(Model::Verhulst, 0.5, 0.7, 3.0, 0.8).unwrap();
        let driver = fbm::generate_path(grid(16), 0.7, 0, fbm::Method::SpectralCirculant).unwrap();
        assert!(matches!(
            solve_polynomial_sde(&params, &driver, 1),
            Err(SdeError::HurstMismatch { .. })
        ));
    }

    #[test]
    fn residual_shrinks_with_mesh_on_one_seed() {
        let params = SdeParams::preset(Model::BlackScholes, 0.5, 0.7, 3.0, 0.75).unwrap();
        let mut prev = f64::INFINITY;
        for n in [256usize, 1024, 4096] {
            let (path, driver) = solve_from_seed(
                &params,
                grid(n),
                2024,
                fbm::Method::SpectralCirculant,
                1,
            )
            .unwrap();
            let res = residual_check(&path, &driver).unwrap();
            assert!(res < prev * 1.1, "residual {res} vs previous {prev} at n={n}");
            prev = res;
        }
        assert!(prev < 0.05, "finest residual unexpectedly large: {prev}");
    }

    #[test]
    fn observed_paths_carry_no_params() {
        let g = grid(4);
        let p = SamplePath::from_observed(g, vec![1.0, 2.0, 3.0, 2.0, 1.5]).unwrap();
        assert!(p.params().is_none());
        assert!(p.driver_seed().is_none());
        assert!(SamplePath::from_observed(g, vec![1.0, -2.0, 3.0, 2.0, 1.5]).is_err());
        assert!(SamplePath::from_observed(g, vec![1.0, 2.0]).is_err());
        let d = fbm::generate_path(g, 0.7, 0, fbm::Method::SpectralCirculant).unwrap();
        assert!(matches!(
            residual_check(&p, &d),
            Err(SdeError::MissingParams)
        ));
    }

    #[test]
    fn thinning_halves_the_grid() {
        let params = SdeParams::preset(Model::Verhulst, 0.5, 0.7, 3.0, 0.7).unwrap();
        let (path, _) =
            solve_from_seed(&params, grid(64), 9, fbm::Method::SpectralCirculant, 1).unwrap();
        let half = path.thinned(2).unwrap();
        assert_eq!(half.grid().n(), 32);
        assert_eq!(half.values()[5], path.values()[10]);
        assert_eq!(half.params(), path.params());
    }
}

//! Uniform observation grids on `[0, T]`.

use thiserror::Error;

/// Errors raised when constructing or deriving grids.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs at least 2 subintervals, got {0}")]
    TooFewSubintervals(usize),
    #[error("grid horizon must be a positive finite real, got {0}")]
    InvalidHorizon(f64),
    #[error("refinement factor must be >= 1")]
    InvalidRefinement,
    #[error("thinning step {step} does not divide the subinterval count {n}")]
    IndivisibleThinning { n: usize, step: usize },
}

/// A uniform grid `t_k = k T / n`, `k = 0..=n`, on the horizon `[0, T]`.
///
/// `n` is the number of subintervals, so the grid carries `n + 1` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    horizon: f64,
}

impl GridSpec {
    pub fn new(n: usize, horizon: f64) -> Result<Self, GridError> {
        if n < 2 {
            return Err(GridError::TooFewSubintervals(n));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(GridError::InvalidHorizon(horizon));
        }
        Ok(Self { n, horizon })
    }

    /// Number of subintervals (one less than the number of grid points).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Terminal time `T`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Mesh width `T / n`.
    pub fn dt(&self) -> f64 {
        self.horizon / self.n as f64
    }

    /// The `k`-th grid point `k T / n`.
    pub fn t(&self, k: usize) -> f64 {
        debug_assert!(k <= self.n);
        k as f64 * self.horizon / self.n as f64
    }

    /// All grid points, `t_0 = 0` through `t_n = T`.
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(move |k| self.t(k))
    }

    /// Same horizon with `factor` times as many subintervals.
    pub fn refined(&self, factor: u32) -> Result<Self, GridError> {
        if factor == 0 {
            return Err(GridError::InvalidRefinement);
        }
        Self::new(self.n * factor as usize, self.horizon)
    }

    /// Same horizon keeping every `step`-th point; `step` must divide `n`.
    pub fn thinned(&self, step: usize) -> Result<Self, GridError> {
        if step == 0 || !self.n.is_multiple_of(step) {
            return Err(GridError::IndivisibleThinning { n: self.n, step });
        }
        Self::new(self.n / step, self.horizon)
    }
}

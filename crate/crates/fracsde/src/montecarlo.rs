//! Replicated Monte Carlo experiments over `(model, H, c, n)` grids.
//!
//! For every cell of the parameter grid and every replicate, a driver path is
//! generated from a seed derived with [`crate::rng::derive_seed`] from
//! `(base_seed, cell_index, replicate)`, the SDE is solved along it, and each
//! requested estimator is applied. Per-cell aggregates (bias, variance,
//! quartiles, MAE, CI coverage, flag counts) are then reduced **by replicate
//! index**, so the report is bit-identical whether replicates ran
//! sequentially or in parallel.
//!
//! Paths are always generated with `2n` subintervals: the
//! resolution-comparison estimator consumes the full `2n + 1` observations,
//! while the known-`c` Hurst estimator and the volatility estimator see the
//! twice-thinned path with `n` subintervals. This way every estimator in a
//! cell is reported at the same nominal sample size `n`.

use thiserror::Error;

use crate::estimators::{
    asym_variances, estimate_c2, estimate_h1, estimate_h2, AsymVariances, EstimateFlags,
    EstimatorError, SERIES_REL_TOL,
};
use crate::fbm::Method;
use crate::grid::GridSpec;
use crate::rng::derive_seed;
use crate::sde::{solve_from_seed, Model, SdeError, SdeParams};
use crate::stats::{self, KsTest, StatsError};

/// Errors raised by experiment configuration, execution and post-processing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid field `{field}`: {message}")]
    InvalidField { field: &'static str, message: String },
    #[error("variance-law fit needs >= 3 distinct c values with volatility results, got {0}")]
    TooFewVariancePoints(usize),
    #[error("normality diagnostic needs >= 100 values, got {0}")]
    TooFewForNormality(usize),
    #[error("normality diagnostic needs a positive finite scale, got {0}")]
    InvalidScale(f64),
    #[error("no consecutive n-doubling cells found for the requested estimator")]
    NoDoublingPairs,
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Sde(#[from] SdeError),
}

/// Which estimators an experiment runs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorSel {
    H1,
    H2,
    C2,
}

impl std::fmt::Display for EstimatorSel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorSel::H1 => write!(f, "h1"),
            EstimatorSel::H2 => write!(f, "h2"),
            EstimatorSel::C2 => write!(f, "c2"),
        }
    }
}

/// Full description of a replicated experiment. Serialization uses the field
/// names `H_values` and `T` for the Hurst grid and the horizon.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    #[serde(rename = "H_values")]
    pub hurst_values: Vec<f64>,
    pub c_values: Vec<f64>,
    pub lambda: f64,
    pub x0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_values: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    pub estimators: Vec<EstimatorSel>,
    pub ci_level: f64,
    pub refine: u32,
}

/// One point of the parameter grid (the model is shared by all cells).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellKey {
    pub hurst: f64,
    pub c: f64,
    pub n: usize,
}

fn bad(field: &'static str, message: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidField {
        field,
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Checks every invariant, naming the offending field in the error.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.hurst_values.is_empty() {
            return Err(bad("H_values", "must be nonempty"));
        }
        for &h in &self.hurst_values {
            if !(h.is_finite() && h > 0.5 && h < 1.0) {
                return Err(bad("H_values", format!("all values must lie in (1/2, 1), got {h}")));
            }
        }
        if self.c_values.is_empty() {
            return Err(bad("c_values", "must be nonempty"));
        }
        for &c in &self.c_values {
            if !(c.is_finite() && c != 0.0) {
                return Err(bad("c_values", format!("all values must be nonzero finite, got {c}")));
            }
        }
        if !self.lambda.is_finite() {
            return Err(bad("lambda", format!("must be finite, got {}", self.lambda)));
        }
        if !(self.x0.is_finite() && self.x0 > 0.0) {
            return Err(bad("x0", format!("must be positive finite, got {}", self.x0)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(bad("T", format!("must be positive finite, got {}", self.horizon)));
        }
        if self.n_values.is_empty() {
            return Err(bad("n_values", "must be nonempty"));
        }
        for &n in &self.n_values {
            if n < 4 {
                return Err(bad("n_values", format!("all values must be at least 4, got {n}")));
            }
            if n > 1 << 26 {
                return Err(bad("n_values", format!("all values must be at most 2^26, got {n}")));
            }
            if n as f64 <= self.horizon {
                return Err(bad(
                    "n_values",
                    format!("all values must exceed the horizon T = {}, got {n}", self.horizon),
                ));
            }
        }
        if self.replicates < 1 {
            return Err(bad("replicates", "must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(bad("estimators", "must request at least one estimator"));
        }
        for (i, e) in self.estimators.iter().enumerate() {
            if self.estimators[..i].contains(e) {
                return Err(bad("estimators", format!("duplicate entry `{e}`")));
            }
        }
        if !(self.ci_level.is_finite() && self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(bad("ci_level", format!("must lie in (0, 1), got {}", self.ci_level)));
        }
        if self.refine < 1 {
            return Err(bad("refine", "must be at least 1"));
        }
        Ok(())
    }

    /// The parameter grid in cell-index order: Hurst-major, then `c`, then
    /// `n` — `cell_index = (i_H · |c| + i_c) · |n| + i_n`.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out =
            Vec::with_capacity(self.hurst_values.len() * self.c_values.len() * self.n_values.len());
        for &hurst in &self.hurst_values {
            for &c in &self.c_values {
                for &n in &self.n_values {
                    out.push(CellKey { hurst, c, n });
                }
            }
        }
        out
    }

    fn wants(&self, sel: EstimatorSel) -> bool {
        self.estimators.contains(&sel)
    }
}

/// Counts of quality flags and hard failures across a cell's replicates.
/// `clamped` / `boundary_inversion` count replicates whose estimate carried
/// the corresponding [`EstimateFlags`] marker; `solver_failure` counts
/// replicates that produced no estimate at all (solver or estimator error).
/// Flagged and failed replicates are excluded from the moment statistics but
/// reported here.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlagCounts {
    pub clamped: usize,
    pub boundary_inversion: usize,
    pub solver_failure: usize,
}

/// Aggregated statistics of one estimator over one cell's replicates.
///
/// Moments (`mean`, `bias`, `variance`, `sd`, quartiles, `mae`, `coverage`)
/// are computed over un-flagged replicates only (`replicates_used` of them);
/// if every replicate was flagged or failed they are `NaN`. `normality` is
/// the KS diagnostic of the standardized errors at the cell's true parameter,
/// present when at least 100 replicates were usable.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAggregate {
    pub model: Model,
    pub hurst: f64,
    pub c: f64,
    pub n: usize,
    pub estimator: EstimatorSel,
    pub mean: f64,
    pub bias: f64,
    pub variance: f64,
    pub sd: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub iqr: f64,
    pub mae: f64,
    pub coverage: f64,
    pub flags: FlagCounts,
    pub replicates_used: usize,
    pub normality: Option<KsTest>,
}

/// OLS fit of per-cell `Var(ĉ²)` against `c⁴`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceFit {
    pub k: f64,
    pub intercept: f64,
    pub adj_r2: f64,
}

/// An `iqr(2n) / iqr(n)` shrinkage ratio for one `(H, c)` group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqrRatio {
    pub hurst: f64,
    pub c: f64,
    pub n_from: usize,
    pub n_to: usize,
    pub ratio: f64,
}

/// The full outcome of [`run_experiment`]: the echoed configuration, one
/// [`CellAggregate`] per (cell, estimator) in cell-index order (estimators in
/// request order within a cell), and the variance-law regression when the
/// experiment produced enough volatility cells for it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellAggregate>,
    pub regression: Option<VarianceFit>,
}

/// One replicate's estimate as consumed by the aggregation stage.
#[derive(Debug, Clone, Copy)]
struct Rep {
    value: f64,
    ci_low: f64,
    ci_high: f64,
    flags: EstimateFlags,
}

/// Per-replicate outcomes for the three estimators (`None`: not requested or
/// hard failure; requested-ness is uniform across replicates, so `None` in a
/// requested slot counts as a failure).
#[derive(Debug, Clone, Copy, Default)]
struct RepResult {
    h1: Option<Rep>,
    h2: Option<Rep>,
    c2: Option<Rep>,
}

fn run_replicate(config: &ExperimentConfig, cell: &CellKey, cell_index: usize, rep: usize) -> RepResult {
    let mut out = RepResult::default();
    let seed = derive_seed(config.base_seed, cell_index as u64, rep as u64);
    let Ok(grid) = GridSpec::new(2 * cell.n, config.horizon) else {
        return out;
    };
    let Ok(params) = SdeParams::preset(config.model, config.lambda, cell.c, config.x0, cell.hurst)
    else {
        return out;
    };
    let Ok((path, _driver)) =
        solve_from_seed(&params, grid, seed, Method::SpectralCirculant, config.refine)
    else {
        return out;
    };
    let Ok(thin) = path.thinned(2) else {
        return out;
    };

    if config.wants(EstimatorSel::H1) {
        out.h1 = estimate_h1(&thin, cell.c, config.ci_level).ok().map(|e| Rep {
            value: e.value,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            flags: e.flags,
        });
    }
    let want_c2 = config.wants(EstimatorSel::C2);
    if config.wants(EstimatorSel::H2) || want_c2 {
        let h2 = estimate_h2(&path, config.ci_level).ok();
        if config.wants(EstimatorSel::H2) {
            out.h2 = h2.as_ref().map(|e| Rep {
                value: e.value,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
                flags: e.flags,
            });
        }
        if want_c2 {
            // Plug-in: the volatility estimate consumes this replicate's own
            // resolution-comparison Hurst estimate and inherits its flags.
            out.c2 = h2.and_then(|h2est| {
                estimate_c2(&thin, h2est.value, config.ci_level).ok().map(|v| Rep {
                    value: v.c2,
                    ci_low: v.ci_low,
                    ci_high: v.ci_high,
                    flags: v.flags.union(h2est.flags),
                })
            });
        }
    }
    out
}

fn run_job(config: &ExperimentConfig, cells: &[CellKey], idx: usize) -> RepResult {
    let cell_index = idx / config.replicates;
    let rep = idx % config.replicates;
    run_replicate(config, &cells[cell_index], cell_index, rep)
}

fn sequential_results(config: &ExperimentConfig, cells: &[CellKey]) -> Vec<RepResult> {
    (0..cells.len() * config.replicates)
        .map(|idx| run_job(config, cells, idx))
        .collect()
}

#[cfg(feature = "parallel")]
fn parallel_results(config: &ExperimentConfig, cells: &[CellKey]) -> Vec<RepResult> {
    use rayon::prelude::*;
    (0..cells.len() * config.replicates)
        .into_par_iter()
        .map(|idx| run_job(config, cells, idx))
        .collect()
}

fn aggregate_cell(
    config: &ExperimentConfig,
    cell: &CellKey,
    est: EstimatorSel,
    reps: &[RepResult],
    av: &AsymVariances,
) -> Result<CellAggregate, ExperimentError> {
    let truth = match est {
        EstimatorSel::H1 | EstimatorSel::H2 => cell.hurst,
        EstimatorSel::C2 => cell.c * cell.c,
    };
    let nf = cell.n as f64;
    // CLT normalization of the errors and its limiting standard deviation,
    // both at the cell's *true* parameters.
    let (factor, scale) = match est {
        EstimatorSel::H1 => (2.0 * nf.sqrt() * (nf / config.horizon).ln(), av.sigma2.sqrt()),
        EstimatorSel::H2 => (
            2.0 * std::f64::consts::LN_2 * nf.sqrt(),
            av.sigma_star2.sqrt(),
        ),
        EstimatorSel::C2 => (nf.sqrt(), cell.c * cell.c * av.sigma2.sqrt()),
    };

    let mut flags = FlagCounts::default();
    let mut included: Vec<f64> = Vec::with_capacity(reps.len());
    let mut covered = 0usize;
    let mut abs_err = 0.0f64;
    for r in reps {
        let slot = match est {
            EstimatorSel::H1 => &r.h1,
            EstimatorSel::H2 => &r.h2,
            EstimatorSel::C2 => &r.c2,
        };
        match slot {
            None => flags.solver_failure += 1,
            Some(rep) => {
                if rep.flags.clamped {
                    flags.clamped += 1;
                }
                if rep.flags.boundary_inversion {
                    flags.boundary_inversion += 1;
                }
                if rep.flags.any() {
                    continue;
                }
                included.push(rep.value);
                if rep.ci_low <= truth && truth <= rep.ci_high {
                    covered += 1;
                }
                abs_err += (rep.value - truth).abs();
            }
        }
    }

    let used = included.len();
    let (mean, variance, q1, median, q3) = if used == 0 {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        let m = stats::mean(&included)?;
        let v = if used >= 2 {
            stats::sample_variance(&included)?
        } else {
            0.0
        };
        let (q1, med, q3) = stats::quartiles(&included)?;
        (m, v, q1, med, q3)
    };
    let normality = if used >= 100 {
        let errors: Vec<f64> = included.iter().map(|v| (v - truth) * factor).collect();
        normality_diagnostic(&errors, scale).ok()
    } else {
        None
    };

    Ok(CellAggregate {
        model: config.model,
        hurst: cell.hurst,
        c: cell.c,
        n: cell.n,
        estimator: est,
        mean,
        bias: mean - truth,
        variance,
        sd: variance.sqrt(),
        q1,
        median,
        q3,
        iqr: q3 - q1,
        mae: if used > 0 { abs_err / used as f64 } else { f64::NAN },
        coverage: if used > 0 {
            covered as f64 / used as f64
        } else {
            f64::NAN
        },
        flags,
        replicates_used: used,
        normality,
    })
}

fn build_report(
    config: &ExperimentConfig,
    results: fn(&ExperimentConfig, &[CellKey]) -> Vec<RepResult>,
) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let cells = config.cells();
    let outcomes = results(config, &cells);
    let mut aggregates = Vec::with_capacity(cells.len() * config.estimators.len());
    for (ci, cell) in cells.iter().enumerate() {
        let slice = &outcomes[ci * config.replicates..(ci + 1) * config.replicates];
        let av = asym_variances(cell.hurst, SERIES_REL_TOL)?;
        for &est in &config.estimators {
            aggregates.push(aggregate_cell(config, cell, est, slice, &av)?);
        }
    }
    let regression = fit_from_cells(&aggregates).ok();
    Ok(ExperimentReport {
        config: config.clone(),
        cells: aggregates,
        regression,
    })
}

/// Runs the experiment with data-parallel replicates (when the `parallel`
/// feature is enabled; otherwise identical to
/// [`run_experiment_sequential`]). Reports are bit-identical across the two
/// execution modes because aggregation is an indexed reduce.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    #[cfg(feature = "parallel")]
    {
        build_report(config, parallel_results)
    }
    #[cfg(not(feature = "parallel"))]
    {
        build_report(config, sequential_results)
    }
}

/// Single-threaded reference execution of the same experiment.
pub fn run_experiment_sequential(
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    build_report(config, sequential_results)
}

/// OLS of volatility-cell variance against `c⁴` on raw `(c, variance)`
/// points. At least 3 distinct `c` values are required.
pub fn fit_variance_points(points: &[(f64, f64)]) -> Result<VarianceFit, ExperimentError> {
    let mut distinct: Vec<f64> = Vec::new();
    for &(c, _) in points {
        if !distinct.contains(&c) {
            distinct.push(c);
        }
    }
    if distinct.len() < 3 {
        return Err(ExperimentError::TooFewVariancePoints(distinct.len()));
    }
    let x: Vec<f64> = points.iter().map(|&(c, _)| c.powi(4)).collect();
    let y: Vec<f64> = points.iter().map(|&(_, v)| v).collect();
    let fit = stats::ols_line(&x, &y)?;
    Ok(VarianceFit {
        k: fit.slope,
        intercept: fit.intercept,
        adj_r2: fit.adj_r2,
    })
}

fn fit_from_cells(cells: &[CellAggregate]) -> Result<VarianceFit, ExperimentError> {
    let points: Vec<(f64, f64)> = cells
        .iter()
        .filter(|cl| cl.estimator == EstimatorSel::C2 && cl.replicates_used >= 2)
        .map(|cl| (cl.c, cl.variance))
        .collect();
    fit_variance_points(&points)
}

/// Fits the variance scaling law `Var(ĉ²) ≈ k c⁴ + intercept` over the
/// report's volatility cells (cells whose moments are defined, i.e. at least
/// two usable replicates).
pub fn fit_variance_model(report: &ExperimentReport) -> Result<VarianceFit, ExperimentError> {
    fit_from_cells(&report.cells)
}

/// One-sample KS normality diagnostic of `errors / scale` against N(0, 1).
pub fn normality_diagnostic(errors: &[f64], scale: f64) -> Result<KsTest, ExperimentError> {
    if errors.len() < 100 {
        return Err(ExperimentError::TooFewForNormality(errors.len()));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(ExperimentError::InvalidScale(scale));
    }
    let standardized: Vec<f64> = errors.iter().map(|e| e / scale).collect();
    Ok(stats::ks_normal_test(&standardized)?)
}

/// IQR shrinkage ratios `iqr(2n) / iqr(n)` for every `(H, c)` group of the
/// report that contains consecutive doublings of `n`, for one estimator.
/// Errors when no doubling pair exists.
pub fn iqr_shrinkage(
    report: &ExperimentReport,
    estimator: EstimatorSel,
) -> Result<Vec<IqrRatio>, ExperimentError> {
    let mut keys: Vec<(f64, f64)> = Vec::new();
    for cell in report.cells.iter().filter(|c| c.estimator == estimator) {
        if !keys.iter().any(|k| k.0 == cell.hurst && k.1 == cell.c) {
            keys.push((cell.hurst, cell.c));
        }
    }
    let mut out = Vec::new();
    for (hurst, c) in keys {
        let mut group: Vec<(usize, f64)> = report
            .cells
            .iter()
            .filter(|cl| cl.estimator == estimator && cl.hurst == hurst && cl.c == c)
            .map(|cl| (cl.n, cl.iqr))
            .collect();
        group.sort_by_key(|g| g.0);
        for w in group.windows(2) {
            if w[1].0 == 2 * w[0].0 {
                out.push(IqrRatio {
                    hurst,
                    c,
                    n_from: w[0].0,
                    n_to: w[1].0,
                    ratio: w[1].1 / w[0].1,
                });
            }
        }
    }
    if out.is_empty() {
        return Err(ExperimentError::NoDoublingPairs);
    }
    Ok(out)
}

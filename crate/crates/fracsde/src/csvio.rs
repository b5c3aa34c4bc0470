//! CSV serialization of paths, estimates, reports and variance tables.
//!
//! All floating-point fields are written with 17 significant decimal digits
//! (`{:.16e}`), which round-trips every finite `f64` exactly; integer fields
//! are written as plain decimals. Writers are deterministic byte-for-byte
//! given equal inputs.
//!
//! Formats:
//!
//! * driver path: `k,t,value`
//! * solution path: `k,t,X`
//! * single-path estimates: `estimator,value,std_error,ci_low,ci_high,flags`
//! * experiment report (one file per estimator):
//!   `model,H,c,n,estimator,mean,bias,variance,sd,q1,median,q3,iqr,mae,coverage,flags,replicates`
//! * normality diagnostics: `model,H,c,n,estimator,ks_statistic,p_value`
//! * variance-law regression: `estimator,slope,intercept,adj_r2`
//! * variance constants: `H,sigma2,sigma1_sq,sigma2_sq,sigma12,sigma_star2,truncation_terms`
//!
//! Flag cells are semicolon-separated `name:count` tokens (booleans are
//! written as 0/1), e.g. `clamped:0;boundary_inversion:1`.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::estimators::{AsymVariances, EstimateFlags};
use crate::fbm::FbmPath;
use crate::grid::{GridError, GridSpec};
use crate::montecarlo::{EstimatorSel, ExperimentReport, FlagCounts};
use crate::sde::{SamplePath, SdeError};

/// Errors raised when reading CSV input.
#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Sde(#[from] SdeError),
}

fn malformed(line: usize, message: impl Into<String>) -> CsvError {
    CsvError::Malformed {
        line,
        message: message.into(),
    }
}

/// 17-significant-digit decimal formatting; round-trips any finite `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Formats estimate flags (plus optional extra boolean tokens) as
/// `name:0|1` pairs joined by semicolons.
pub fn format_estimate_flags(flags: &EstimateFlags, extra: &[(&str, bool)]) -> String {
    let mut s = format!(
        "clamped:{};boundary_inversion:{}",
        flags.clamped as u8, flags.boundary_inversion as u8
    );
    for (name, set) in extra {
        s.push(';');
        s.push_str(name);
        s.push(':');
        s.push(if *set { '1' } else { '0' });
    }
    s
}

/// Formats per-cell flag counts as `name:count` pairs joined by semicolons.
pub fn format_flag_counts(c: &FlagCounts) -> String {
    format!(
        "clamped:{};boundary_inversion:{};solver_failure:{}",
        c.clamped, c.boundary_inversion, c.solver_failure
    )
}

/// Writes a driver (fBm) path as `k,t,value`.
pub fn write_driver_csv<W: Write>(w: &mut W, path: &FbmPath) -> io::Result<()> {
    writeln!(w, "k,t,value")?;
    let grid = path.grid();
    for (k, v) in path.values().iter().enumerate() {
        writeln!(w, "{k},{},{}", fmt_f64(grid.t(k)), fmt_f64(*v))?;
    }
    Ok(())
}

/// Writes a solution path as `k,t,X`.
pub fn write_path_csv<W: Write>(w: &mut W, path: &SamplePath) -> io::Result<()> {
    writeln!(w, "k,t,X")?;
    let grid = path.grid();
    for (k, v) in path.values().iter().enumerate() {
        writeln!(w, "{k},{},{}", fmt_f64(grid.t(k)), fmt_f64(*v))?;
    }
    Ok(())
}

/// Reads a solution path written by [`write_path_csv`] (or hand-prepared in
/// the same format). The grid must be uniform: `t_k` is checked against
/// `k·T/n` within `1e-9·max(T, 1)`; values must be positive finite.
pub fn read_sample_path_csv<R: BufRead>(r: R) -> Result<SamplePath, CsvError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| malformed(1, "empty file"))??;
    if header.trim_end() != "k,t,X" {
        return Err(malformed(1, format!("expected header `k,t,X`, got `{header}`")));
    }
    let mut ts: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        let row = line.trim_end();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let (Some(kf), Some(tf), Some(xf), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(malformed(lineno, "expected exactly 3 comma-separated fields"));
        };
        let k: usize = kf
            .parse()
            .map_err(|_| malformed(lineno, format!("bad index `{kf}`")))?;
        if k != values.len() {
            return Err(malformed(
                lineno,
                format!("index {k} out of order (expected {})", values.len()),
            ));
        }
        let t: f64 = tf
            .parse()
            .map_err(|_| malformed(lineno, format!("bad time `{tf}`")))?;
        let x: f64 = xf
            .parse()
            .map_err(|_| malformed(lineno, format!("bad value `{xf}`")))?;
        ts.push(t);
        values.push(x);
    }
    if values.len() < 3 {
        return Err(malformed(
            ts.len() + 1,
            format!("need at least 3 observations, got {}", values.len()),
        ));
    }
    let n = values.len() - 1;
    let horizon = ts[n];
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(malformed(n + 2, format!("final time must be positive, got {horizon}")));
    }
    let grid = GridSpec::new(n, horizon)?;
    let tol = 1e-9 * horizon.max(1.0);
    for (k, &t) in ts.iter().enumerate() {
        if (t - grid.t(k)).abs() > tol {
            return Err(malformed(
                k + 2,
                format!("non-uniform grid: t = {t}, expected {}", grid.t(k)),
            ));
        }
    }
    Ok(SamplePath::from_observed(grid, values)?)
}

/// One row of the single-path estimate table.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub estimator: String,
    pub value: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub flags: String,
}

/// Writes `estimator,value,std_error,ci_low,ci_high,flags` rows.
pub fn write_estimates_csv<W: Write>(w: &mut W, rows: &[EstimateRow]) -> io::Result<()> {
    writeln!(w, "estimator,value,std_error,ci_low,ci_high,flags")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.estimator,
            fmt_f64(row.value),
            fmt_f64(row.std_error),
            fmt_f64(row.ci_low),
            fmt_f64(row.ci_high),
            row.flags
        )?;
    }
    Ok(())
}

/// Writes the report rows of one estimator with the contract header
/// `model,H,c,n,estimator,mean,bias,variance,sd,q1,median,q3,iqr,mae,coverage,flags,replicates`.
pub fn write_report_csv<W: Write>(
    w: &mut W,
    report: &ExperimentReport,
    estimator: EstimatorSel,
) -> io::Result<()> {
    writeln!(
        w,
        "model,H,c,n,estimator,mean,bias,variance,sd,q1,median,q3,iqr,mae,coverage,flags,replicates"
    )?;
    for cell in report.cells.iter().filter(|c| c.estimator == estimator) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            cell.model,
            fmt_f64(cell.hurst),
            fmt_f64(cell.c),
            cell.n,
            cell.estimator,
            fmt_f64(cell.mean),
            fmt_f64(cell.bias),
            fmt_f64(cell.variance),
            fmt_f64(cell.sd),
            fmt_f64(cell.q1),
            fmt_f64(cell.median),
            fmt_f64(cell.q3),
            fmt_f64(cell.iqr),
            fmt_f64(cell.mae),
            fmt_f64(cell.coverage),
            format_flag_counts(&cell.flags),
            cell.replicates_used
        )?;
    }
    Ok(())
}

/// Writes per-cell KS normality diagnostics (`model,H,c,n,estimator,
/// ks_statistic,p_value`), skipping cells without a diagnostic.
pub fn write_normality_csv<W: Write>(w: &mut W, report: &ExperimentReport) -> io::Result<()> {
    writeln!(w, "model,H,c,n,estimator,ks_statistic,p_value")?;
    for cell in &report.cells {
        if let Some(ks) = &cell.normality {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                cell.model,
                fmt_f64(cell.hurst),
                fmt_f64(cell.c),
                cell.n,
                cell.estimator,
                fmt_f64(ks.statistic),
                fmt_f64(ks.p_value)
            )?;
        }
    }
    Ok(())
}

/// Writes the variance-law regression (`estimator,slope,intercept,adj_r2`);
/// header only when the report carries no regression.
pub fn write_regression_csv<W: Write>(w: &mut W, report: &ExperimentReport) -> io::Result<()> {
    writeln!(w, "estimator,slope,intercept,adj_r2")?;
    if let Some(fit) = &report.regression {
        writeln!(
            w,
            "c2,{},{},{}",
            fmt_f64(fit.k),
            fmt_f64(fit.intercept),
            fmt_f64(fit.adj_r2)
        )?;
    }
    Ok(())
}

/// Writes variance-constant rows
/// (`H,sigma2,sigma1_sq,sigma2_sq,sigma12,sigma_star2,truncation_terms`).
pub fn write_variances_csv<W: Write>(w: &mut W, rows: &[AsymVariances]) -> io::Result<()> {
    writeln!(w, "H,sigma2,sigma1_sq,sigma2_sq,sigma12,sigma_star2,truncation_terms")?;
    for av in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(av.hurst),
            fmt_f64(av.sigma2),
            fmt_f64(av.sigma1_sq),
            fmt_f64(av.sigma2_sq),
            fmt_f64(av.sigma12),
            fmt_f64(av.sigma_star2),
            av.truncation_terms
        )?;
    }
    Ok(())
}

//! Implementations of the four subcommands.
//!
//! Each command parses and validates its config document, runs the
//! computation, and buffers every output file in memory; the filesystem is
//! touched only after the whole run has succeeded, so neither a validation
//! nor a numeric failure leaves partial outputs behind.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use fracsde::{
    asym_variances, estimate_c2, estimate_h1, estimate_h2, format_estimate_flags,
    read_sample_path_csv, run_experiment, solve_from_seed, write_driver_csv, write_estimates_csv,
    write_normality_csv, write_path_csv, write_regression_csv, write_report_csv,
    write_variances_csv, EstimateRow, EstimatorSel, GridSpec, Method, SamplePath, SdeParams,
};

use crate::{config, svg, CliError, CommonArgs, Format};

/// Relative tolerance for the variance-constant series tabulation.
const SERIES_TOL: f64 = 1e-12;

/// An output file scheduled for writing: file name and contents.
type Pending = (String, Vec<u8>);

/// Creates the output directory and writes all buffered files.
fn write_all(out_dir: &Path, files: Vec<Pending>) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(|e| {
        CliError::runtime(format!(
            "cannot create output directory {}: {e}",
            out_dir.display()
        ))
    })?;
    for (name, bytes) in files {
        let path = out_dir.join(&name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// In-memory CSV rendering cannot fail for I/O reasons, but keep the error
/// path honest.
fn render_err(e: std::io::Error) -> CliError {
    CliError::runtime(format!("rendering output failed: {e}"))
}

pub fn cmd_simulate(args: &CommonArgs) -> Result<(), CliError> {
    let doc: config::SimulateDoc = config::load_doc(&args.config)?;
    doc.validate()?;
    let seed = args.seed.unwrap_or(doc.seed);

    let params = SdeParams::preset(doc.model, doc.lambda, doc.c, doc.x0, doc.hurst)
        .map_err(|e| CliError::config(e.to_string()))?;
    let grid =
        GridSpec::new(doc.n, doc.horizon).map_err(|e| CliError::config(e.to_string()))?;
    let (path, driver) =
        solve_from_seed(&params, grid, seed, Method::SpectralCirculant, doc.refine)
            .map_err(|e| CliError::runtime(format!("simulation failed: {e}")))?;

    let mut files: Vec<Pending> = Vec::new();
    let mut buf = Vec::new();
    write_path_csv(&mut buf, &path).map_err(render_err)?;
    files.push(("path.csv".to_string(), buf));
    if doc.write_driver {
        let mut buf = Vec::new();
        write_driver_csv(&mut buf, &driver).map_err(render_err)?;
        files.push(("driver.csv".to_string(), buf));
    }
    write_all(&args.out, files)
}

/// The resolution-comparison estimator needs an odd number of observations;
/// an even-length input is estimated on all but its last point, preserving
/// the mesh width.
fn drop_last_point(path: &SamplePath) -> Result<SamplePath, CliError> {
    let grid = path.grid();
    let new_n = grid.n() - 1;
    let truncated = GridSpec::new(new_n, grid.t(new_n))
        .map_err(|e| CliError::config(format!("input too short to truncate: {e}")))?;
    SamplePath::from_observed(truncated, path.values()[..=new_n].to_vec())
        .map_err(|e| CliError::config(e.to_string()))
}

pub fn cmd_estimate(args: &CommonArgs) -> Result<(), CliError> {
    let doc: config::EstimateDoc = config::load_doc(&args.config)?;
    let selection = doc.selection()?;

    let file = fs::File::open(&doc.input).map_err(|e| {
        CliError::config(format!("cannot read input {}: {e}", doc.input.display()))
    })?;
    let path = read_sample_path_csv(BufReader::new(file))
        .map_err(|e| CliError::config(format!("input {}: {e}", doc.input.display())))?;

    let even_input = path.values().len() % 2 == 0;
    let needs_h2 = selection
        .iter()
        .any(|e| matches!(e, EstimatorSel::H2 | EstimatorSel::C2));
    let h2 = if needs_h2 {
        let h2_path = if even_input {
            drop_last_point(&path)?
        } else {
            path.clone()
        };
        Some(
            estimate_h2(&h2_path, doc.ci_level)
                .map_err(|e| CliError::config(format!("estimator h2: {e}")))?,
        )
    } else {
        None
    };

    let mut rows: Vec<EstimateRow> = Vec::new();
    for est in &selection {
        match est {
            EstimatorSel::H1 => {
                let c = doc.c.expect("selection guarantees c for h1");
                let e = estimate_h1(&path, c, doc.ci_level)
                    .map_err(|e| CliError::config(format!("estimator h1: {e}")))?;
                rows.push(EstimateRow {
                    estimator: "h1".to_string(),
                    value: e.value,
                    std_error: e.std_error,
                    ci_low: e.ci_low,
                    ci_high: e.ci_high,
                    flags: format_estimate_flags(&e.flags, &[]),
                });
            }
            EstimatorSel::H2 => {
                let e = h2.as_ref().expect("computed for h2");
                let extra: &[(&str, bool)] = if even_input {
                    &[("even_length_input", true)]
                } else {
                    &[]
                };
                rows.push(EstimateRow {
                    estimator: "h2".to_string(),
                    value: e.value,
                    std_error: e.std_error,
                    ci_low: e.ci_low,
                    ci_high: e.ci_high,
                    flags: format_estimate_flags(&e.flags, extra),
                });
            }
            EstimatorSel::C2 => {
                let plug = h2.as_ref().expect("computed for c2");
                let e = estimate_c2(&path, plug.value, doc.ci_level)
                    .map_err(|e| CliError::config(format!("estimator c2: {e}")))?;
                rows.push(EstimateRow {
                    estimator: "c2".to_string(),
                    value: e.c2,
                    std_error: e.std_error,
                    ci_low: e.ci_low,
                    ci_high: e.ci_high,
                    flags: format_estimate_flags(&e.flags.union(plug.flags), &[]),
                });
            }
        }
    }

    let mut buf = Vec::new();
    write_estimates_csv(&mut buf, &rows).map_err(render_err)?;
    write_all(&args.out, vec![("estimates.csv".to_string(), buf)])
}

pub fn cmd_experiment(args: &CommonArgs) -> Result<(), CliError> {
    let doc: config::ExperimentDoc = config::load_doc(&args.config)?;
    let exp_config = doc.into_config(args.seed)?;

    let report = run_experiment(&exp_config)
        .map_err(|e| CliError::runtime(format!("experiment failed: {e}")))?;

    let mut files: Vec<Pending> = Vec::new();
    for est in &exp_config.estimators {
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &report, *est).map_err(render_err)?;
        files.push((format!("report_{est}.csv"), buf));
    }
    let mut buf = Vec::new();
    write_normality_csv(&mut buf, &report).map_err(render_err)?;
    files.push(("normality.csv".to_string(), buf));
    let mut buf = Vec::new();
    write_regression_csv(&mut buf, &report).map_err(render_err)?;
    files.push(("regression.csv".to_string(), buf));

    if args.format == Format::CsvSvg {
        for est in &exp_config.estimators {
            files.push((
                format!("boxplot_{est}.svg"),
                svg::boxplot(&report, *est).into_bytes(),
            ));
        }
        if let Some(chart) = svg::variance_fit(&report) {
            files.push(("variance_fit.svg".to_string(), chart.into_bytes()));
        }
    }
    write_all(&args.out, files)
}

pub fn cmd_variances(args: &CommonArgs) -> Result<(), CliError> {
    let doc: config::VariancesDoc = config::load_doc(&args.config)?;
    doc.validate()?;

    let mut rows = Vec::with_capacity(doc.hurst_values.len());
    for &h in &doc.hurst_values {
        rows.push(
            asym_variances(h, SERIES_TOL)
                .map_err(|e| CliError::runtime(format!("variance series at H = {h}: {e}")))?,
        );
    }
    let mut buf = Vec::new();
    write_variances_csv(&mut buf, &rows).map_err(render_err)?;
    write_all(&args.out, vec![("variances.csv".to_string(), buf)])
}

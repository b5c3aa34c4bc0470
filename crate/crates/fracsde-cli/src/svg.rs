//! Static SVG charts for experiment reports.
//!
//! The CSV tables are the contract; these charts are a best-effort
//! convenience for a quick visual check of replicate spread and of the
//! variance law. All numbers are rendered with fixed precision, so a rerun
//! of the same experiment produces byte-identical SVGs.

use std::fmt::Write as _;

use fracsde::{CellAggregate, EstimatorSel, ExperimentReport};

const MARGIN_LEFT: f64 = 74.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 66.0;
const PLOT_HEIGHT: f64 = 320.0;
const SLOT_WIDTH: f64 = 112.0;

/// Fixed-precision coordinate, short enough to keep files small.
fn px(v: f64) -> String {
    format!("{v:.2}")
}

/// Human-oriented tick label: plain decimal in a comfortable range,
/// scientific notation outside it.
fn tick_label(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
    }
}

fn svg_open(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = write!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"##,
        w = px(width),
        h = px(height)
    );
    let _ = write!(
        out,
        r##"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"##,
        w = px(width),
        h = px(height)
    );
    let _ = write!(
        out,
        r##"<text x="{x}" y="24" font-size="15" text-anchor="middle" fill="#222">{title}</text>"##,
        x = px(width / 2.0)
    );
}

/// Vertical axis with `ticks` evenly spaced labeled ticks over `[lo, hi]`
/// mapped by `y_of`.
fn y_axis(out: &mut String, lo: f64, hi: f64, y_of: impl Fn(f64) -> f64) {
    let x = MARGIN_LEFT - 10.0;
    let _ = write!(
        out,
        r##"<line x1="{x}" y1="{y1}" x2="{x}" y2="{y2}" stroke="#444"/>"##,
        x = px(x),
        y1 = px(y_of(hi)),
        y2 = px(y_of(lo))
    );
    for i in 0..5 {
        let v = lo + (hi - lo) * (i as f64) / 4.0;
        let y = y_of(v);
        let _ = write!(
            out,
            r##"<line x1="{x1}" y1="{y}" x2="{x2}" y2="{y}" stroke="#444"/>"##,
            x1 = px(x - 4.0),
            x2 = px(x),
            y = px(y)
        );
        let _ = write!(
            out,
            r##"<text x="{x}" y="{y}" font-size="11" text-anchor="end" fill="#222">{label}</text>"##,
            x = px(x - 7.0),
            y = px(y + 4.0),
            label = tick_label(v)
        );
    }
}

/// Replicate-distribution boxplot, one box per parameter cell of the given
/// estimator. Whiskers sit at `q1 - 1.5*IQR` and `q3 + 1.5*IQR`; the dashed
/// marker is the cell's true parameter value.
pub fn boxplot(report: &ExperimentReport, estimator: EstimatorSel) -> String {
    let cells: Vec<&CellAggregate> = report
        .cells
        .iter()
        .filter(|cell| cell.estimator == estimator)
        .collect();
    let usable: Vec<&CellAggregate> = cells
        .iter()
        .copied()
        .filter(|cell| cell.q1.is_finite() && cell.q3.is_finite() && cell.median.is_finite())
        .collect();

    let slots = cells.len().max(1) as f64;
    let width = MARGIN_LEFT + MARGIN_RIGHT + slots * SLOT_WIDTH;
    let height = MARGIN_TOP + MARGIN_BOTTOM + PLOT_HEIGHT;
    let mut out = String::new();
    svg_open(
        &mut out,
        width,
        height,
        &format!("{estimator} replicates by cell (whiskers at 1.5*IQR)"),
    );

    if usable.is_empty() {
        let _ = write!(
            out,
            r##"<text x="{x}" y="{y}" font-size="13" text-anchor="middle" fill="#666">no usable cells</text>"##,
            x = px(width / 2.0),
            y = px(MARGIN_TOP + PLOT_HEIGHT / 2.0)
        );
        out.push_str("</svg>");
        return out;
    }

    // Vertical range: whisker ends plus each cell's true parameter value.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for cell in &usable {
        lo = lo.min(cell.q1 - 1.5 * cell.iqr).min(truth_of(cell));
        hi = hi.max(cell.q3 + 1.5 * cell.iqr).max(truth_of(cell));
    }
    let pad = ((hi - lo) * 0.06).max(1e-12);
    let (lo, hi) = (lo - pad, hi + pad);
    let y_of = |v: f64| MARGIN_TOP + (hi - v) / (hi - lo) * PLOT_HEIGHT;

    y_axis(&mut out, lo, hi, y_of);

    for (i, cell) in cells.iter().enumerate() {
        let cx = MARGIN_LEFT + (i as f64 + 0.5) * SLOT_WIDTH;
        let label_y = MARGIN_TOP + PLOT_HEIGHT + 22.0;
        let _ = write!(
            out,
            r##"<text x="{x}" y="{y}" font-size="11" text-anchor="middle" fill="#222">H={h}, c={c}</text>"##,
            x = px(cx),
            y = px(label_y),
            h = cell.hurst,
            c = cell.c
        );
        let _ = write!(
            out,
            r##"<text x="{x}" y="{y}" font-size="11" text-anchor="middle" fill="#222">n={n}</text>"##,
            x = px(cx),
            y = px(label_y + 15.0),
            n = cell.n
        );
        if !(cell.q1.is_finite() && cell.q3.is_finite() && cell.median.is_finite()) {
            let _ = write!(
                out,
                r##"<text x="{x}" y="{y}" font-size="11" text-anchor="middle" fill="#666">all replicates flagged</text>"##,
                x = px(cx),
                y = px(MARGIN_TOP + PLOT_HEIGHT / 2.0)
            );
            continue;
        }

        let bw = SLOT_WIDTH * 0.46;
        let wlo = cell.q1 - 1.5 * cell.iqr;
        let whi = cell.q3 + 1.5 * cell.iqr;
        // Whisker stems and caps.
        for (a, b) in [(wlo, cell.q1), (cell.q3, whi)] {
            let _ = write!(
                out,
                r##"<line x1="{x}" y1="{y1}" x2="{x}" y2="{y2}" stroke="#333"/>"##,
                x = px(cx),
                y1 = px(y_of(a)),
                y2 = px(y_of(b))
            );
        }
        for w in [wlo, whi] {
            let _ = write!(
                out,
                r##"<line x1="{x1}" y1="{y}" x2="{x2}" y2="{y}" stroke="#333"/>"##,
                x1 = px(cx - bw / 4.0),
                x2 = px(cx + bw / 4.0),
                y = px(y_of(w))
            );
        }
        // Interquartile box and the median bar.
        let _ = write!(
            out,
            r##"<rect x="{x}" y="{y}" width="{w}" height="{h}" fill="#a6c8e4" stroke="#333"/>"##,
            x = px(cx - bw / 2.0),
            y = px(y_of(cell.q3)),
            w = px(bw),
            h = px(y_of(cell.q1) - y_of(cell.q3))
        );
        let _ = write!(
            out,
            r##"<line x1="{x1}" y1="{y}" x2="{x2}" y2="{y}" stroke="#13304d" stroke-width="2"/>"##,
            x1 = px(cx - bw / 2.0),
            x2 = px(cx + bw / 2.0),
            y = px(y_of(cell.median))
        );
        // Dashed marker at the true parameter value.
        let _ = write!(
            out,
            r##"<line x1="{x1}" y1="{y}" x2="{x2}" y2="{y}" stroke="#c0392b" stroke-dasharray="4 3"/>"##,
            x1 = px(cx - bw * 0.7),
            x2 = px(cx + bw * 0.7),
            y = px(y_of(truth_of(cell)))
        );
    }

    out.push_str("</svg>");
    out
}

/// The parameter a cell's estimator targets: the Hurst exponent for both
/// Hurst estimators, the squared volatility for the volatility estimator.
fn truth_of(cell: &CellAggregate) -> f64 {
    match cell.estimator {
        EstimatorSel::H1 | EstimatorSel::H2 => cell.hurst,
        EstimatorSel::C2 => cell.c * cell.c,
    }
}

/// Scatter of per-cell `Var(c2)` against `c^4` with the fitted line; `None`
/// when the report carries no variance-law regression.
pub fn variance_fit(report: &ExperimentReport) -> Option<String> {
    let fit = report.regression.as_ref()?;
    let points: Vec<(f64, f64)> = report
        .cells
        .iter()
        .filter(|cell| cell.estimator == EstimatorSel::C2 && cell.variance.is_finite())
        .map(|cell| (cell.c.powi(4), cell.variance))
        .collect();

    let plot_w = 480.0;
    let width = MARGIN_LEFT + MARGIN_RIGHT + plot_w;
    let height = MARGIN_TOP + MARGIN_BOTTOM + PLOT_HEIGHT;
    let mut out = String::new();
    svg_open(&mut out, width, height, "Variance law: Var(c2) vs c^4");

    let x_max = points.iter().map(|p| p.0).fold(0.0_f64, f64::max) * 1.06;
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };
    let line_ends = [fit.intercept, fit.k * x_max + fit.intercept];
    let mut y_lo = 0.0_f64;
    let mut y_hi = f64::NEG_INFINITY;
    for &(_, v) in &points {
        y_lo = y_lo.min(v);
        y_hi = y_hi.max(v);
    }
    for v in line_ends {
        y_lo = y_lo.min(v);
        y_hi = y_hi.max(v);
    }
    if !y_hi.is_finite() || y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let pad = (y_hi - y_lo) * 0.06;
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);

    let x_of = |v: f64| MARGIN_LEFT + v / x_max * plot_w;
    let y_of = |v: f64| MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * PLOT_HEIGHT;

    y_axis(&mut out, y_lo, y_hi, y_of);
    // Horizontal axis with five labeled ticks.
    let base_y = MARGIN_TOP + PLOT_HEIGHT + 8.0;
    let _ = write!(
        out,
        r##"<line x1="{x1}" y1="{y}" x2="{x2}" y2="{y}" stroke="#444"/>"##,
        x1 = px(MARGIN_LEFT),
        x2 = px(MARGIN_LEFT + plot_w),
        y = px(base_y)
    );
    for i in 0..5 {
        let v = x_max * (i as f64) / 4.0;
        let x = x_of(v);
        let _ = write!(
            out,
            r##"<line x1="{x}" y1="{y1}" x2="{x}" y2="{y2}" stroke="#444"/>"##,
            x = px(x),
            y1 = px(base_y),
            y2 = px(base_y + 4.0)
        );
        let _ = write!(
            out,
            r##"<text x="{x}" y="{y}" font-size="11" text-anchor="middle" fill="#222">{label}</text>"##,
            x = px(x),
            y = px(base_y + 18.0),
            label = tick_label(v)
        );
    }
    let _ = write!(
        out,
        r##"<text x="{x}" y="{y}" font-size="12" text-anchor="middle" fill="#222">c^4</text>"##,
        x = px(MARGIN_LEFT + plot_w / 2.0),
        y = px(base_y + 38.0)
    );

    // Fitted line, then the observed points on top.
    let _ = write!(
        out,
        r##"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="#c0392b" stroke-width="2"/>"##,
        x1 = px(x_of(0.0)),
        y1 = px(y_of(fit.intercept)),
        x2 = px(x_of(x_max)),
        y2 = px(y_of(fit.k * x_max + fit.intercept))
    );
    for &(x, y) in &points {
        let _ = write!(
            out,
            r##"<circle cx="{cx}" cy="{cy}" r="4" fill="#1f5fa8" stroke="#13304d"/>"##,
            cx = px(x_of(x)),
            cy = px(y_of(y))
        );
    }
    let _ = write!(
        out,
        r##"<text x="{x}" y="{y}" font-size="12" text-anchor="start" fill="#222">slope={k:.6}, intercept={b:.6}, adj R^2={r:.4}</text>"##,
        x = px(MARGIN_LEFT + 8.0),
        y = px(MARGIN_TOP + 16.0),
        k = fit.k,
        b = fit.intercept,
        r = fit.adj_r2
    );

    out.push_str("</svg>");
    Some(out)
}

//! File formats: CSV tables, JSON reports and SVG figures.
//!
//! Complex columns are written as adjacent `re_<name>,im_<name>` pairs and
//! floats use Rust's shortest round-trip formatting, so reading a file back
//! reproduces the values bit for bit. `inf` marks the noiseless SNR.

use std::fmt::Write as _;
use std::path::Path;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::bench::{SweepResult, TrialGrid};
use crate::dense::DataMatrix;
use crate::error::{Error, Result};
use crate::estimate::{PeakPick, PseudospectrumCurve, RecoveredSources};
use crate::model::{pack, unpack};
use crate::solver::SolveReport;

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_text(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV is UTF-8")
}

fn parse_records(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse(format!("CSV header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("CSV record {}: {e}", line + 1)))?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("CSV record {}: bad number `{field}`", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn check_index_column(rows: &[Vec<f64>]) -> Result<()> {
    for (j, row) in rows.iter().enumerate() {
        if row[0] != j as f64 {
            return Err(Error::Parse(format!("expected j = {j}, found {}", row[0])));
        }
    }
    Ok(())
}

/// `X.csv`: one line per sample `j`, columns `j,re_x0,im_x0,…`.
pub fn data_matrix_csv(x: &DataMatrix) -> String {
    let mut header = vec!["j".to_owned()];
    for l in 0..x.snapshots() {
        header.push(format!("re_x{l}"));
        header.push(format!("im_x{l}"));
    }
    let rows = (0..x.samples()).map(|j| {
        let mut row = vec![j.to_string()];
        for l in 0..x.snapshots() {
            let v = x.get(l, j);
            row.push(v.re.to_string());
            row.push(v.im.to_string());
        }
        row
    });
    csv_text(&header, rows)
}

pub fn parse_data_matrix_csv(text: &str) -> Result<DataMatrix> {
    let (header, rows) = parse_records(text)?;
    if header.len() < 3 || header.len() % 2 == 0 || header[0] != "j" {
        return Err(Error::Parse(format!(
            "X header must be j,re_x0,im_x0,…; found {}",
            header.join(",")
        )));
    }
    check_index_column(&rows)?;
    let s = (header.len() - 1) / 2;
    Ok(DataMatrix::from_fn(s, rows.len(), |l, j| {
        c64::new(rows[j][1 + 2 * l], rows[j][2 + 2 * l])
    }))
}

/// `y.csv`: columns `j,re_y,im_y`.
pub fn measurements_csv(y: &[c64]) -> String {
    let header = ["j", "re_y", "im_y"].map(str::to_owned);
    let rows = y
        .iter()
        .enumerate()
        .map(|(j, v)| vec![j.to_string(), v.re.to_string(), v.im.to_string()]);
    csv_text(&header, rows)
}

pub fn parse_measurements_csv(text: &str) -> Result<Vec<c64>> {
    let (header, rows) = parse_records(text)?;
    if header != ["j", "re_y", "im_y"] {
        return Err(Error::Parse(format!(
            "y header must be j,re_y,im_y; found {}",
            header.join(",")
        )));
    }
    check_index_column(&rows)?;
    Ok(rows.iter().map(|r| c64::new(r[1], r[2])).collect())
}

/// `pseudospectrum.csv`: columns `tau,f`.
pub fn pseudospectrum_csv(curve: &PseudospectrumCurve) -> String {
    let header = ["tau", "f"].map(str::to_owned);
    let rows = curve
        .grid
        .iter()
        .zip(&curve.values)
        .map(|(t, f)| vec![t.to_string(), f.to_string()]);
    csv_text(&header, rows)
}

/// `grid.csv`: one line per cell, columns `<row param>,<col param>,count`.
pub fn grid_csv(grid: &TrialGrid) -> String {
    let cfg = &grid.config;
    let header = vec![
        cfg.rows.param.to_string(),
        cfg.cols.param.to_string(),
        "count".to_owned(),
    ];
    let width = cfg.cols.values.len();
    let rows = grid.counts.iter().enumerate().map(|(cell, count)| {
        vec![
            cfg.rows.values[cell / width].to_string(),
            cfg.cols.values[cell % width].to_string(),
            count.to_string(),
        ]
    });
    csv_text(&header, rows)
}

/// `sweep.csv`: columns `snr,estimator,mean_error`, grouped by SNR.
pub fn sweep_csv(result: &SweepResult) -> String {
    let header = ["snr", "estimator", "mean_error"].map(str::to_owned);
    let rows = result.snr_values.iter().enumerate().flat_map(|(i, snr)| {
        result.series.iter().map(move |series| {
            vec![
                snr.to_string(),
                series.spec.label(),
                series.mean_errors[i].to_string(),
            ]
        })
    });
    csv_text(&header, rows)
}

/// JSON form of a [`SolveReport`]; `x_hat` is column-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveDocument {
    pub s: usize,
    pub n: usize,
    pub iters: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub nuclear_norm: f64,
    pub x_hat: Vec<[f64; 2]>,
    /// Error against a reference `X`, when one was supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<(f64, f64)>,
}

impl SolveDocument {
    pub fn new(report: &SolveReport) -> Self {
        SolveDocument {
            s: report.x_hat.snapshots(),
            n: report.x_hat.samples(),
            iters: report.iters,
            converged: report.converged,
            primal_residual: report.primal_residual,
            dual_residual: report.dual_residual,
            nuclear_norm: report.nuclear_norm,
            x_hat: pack(&report.x_hat.as_mat().to_owned()),
            relative_error: None,
            history: report.history.clone(),
        }
    }

    pub fn x_hat(&self) -> Result<DataMatrix> {
        Ok(DataMatrix::from_mat(unpack(&self.x_hat, self.s, self.n, "x_hat")?))
    }
}

/// JSON form of [`RecoveredSources`]; `orients` is column-major `s × r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourcesDocument {
    pub taus: Vec<f64>,
    pub amps: Vec<f64>,
    pub orients: Vec<[f64; 2]>,
    pub residual: f64,
    pub condition_number: f64,
    pub ill_conditioned: bool,
}

impl SourcesDocument {
    pub fn new(sources: &RecoveredSources) -> Self {
        SourcesDocument {
            taus: sources.taus_hat.clone(),
            amps: sources.amps_hat.clone(),
            orients: pack(&sources.orients_hat),
            residual: sources.residual,
            condition_number: sources.condition_number,
            ill_conditioned: sources.ill_conditioned,
        }
    }

    pub fn orients(&self, s: usize) -> Result<Mat<c64>> {
        unpack(&self.orients, s, self.taus.len(), "orients")
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    // Non-finite floats serialize as null rather than failing.
    serde_json::to_string_pretty(value).expect("report types are always serializable")
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const PLOT_LEFT: f64 = 90.0;
const PLOT_RIGHT: f64 = 760.0;
const PLOT_TOP: f64 = 50.0;
const PLOT_BOTTOM: f64 = 520.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn svg_open(title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" style="font-family:sans-serif;font-size:14px">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" style="fill:#ffffff"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="28" style="text-anchor:middle;font-size:18px">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axis_labels(out: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" style="text-anchor:middle">{}</text>"#,
        (PLOT_LEFT + PLOT_RIGHT) / 2.0,
        HEIGHT - 30.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="25" y="{y}" transform="rotate(-90 25 {y})" style="text-anchor:middle">{}</text>"#,
        escape(y_label),
        y = (PLOT_TOP + PLOT_BOTTOM) / 2.0,
    );
}

fn frame(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<rect x="{PLOT_LEFT}" y="{PLOT_TOP}" width="{}" height="{}" style="fill:none;stroke:#000000"/>"#,
        PLOT_RIGHT - PLOT_LEFT,
        PLOT_BOTTOM - PLOT_TOP
    );
}

/// Success-fraction heatmap with an 8-step grayscale ramp (white = all
/// trials succeeded) and the raw count written in every cell.
pub fn heatmap_svg(grid: &TrialGrid) -> String {
    let cfg = &grid.config;
    let (nrows, ncols) = grid.shape();
    let mut out = svg_open(&format!(
        "Successful recoveries out of {} trials (threshold {:e})",
        cfg.trials, cfg.threshold
    ));
    let cw = (PLOT_RIGHT - PLOT_LEFT) / ncols as f64;
    let ch = (PLOT_BOTTOM - PLOT_TOP) / nrows as f64;
    for row in 0..nrows {
        for col in 0..ncols {
            let count = grid.count(row, col);
            let frac = count as f64 / cfg.trials as f64;
            let level = ((frac * 8.0).floor() as usize).min(7);
            let gray = (level * 255 / 7) as u8;
            let x = PLOT_LEFT + col as f64 * cw;
            // First row at the bottom so the row parameter grows upward.
            let y = PLOT_BOTTOM - (row + 1) as f64 * ch;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" style="fill:rgb({gray},{gray},{gray});stroke:#808080"/>"#
            );
            let ink = if level >= 4 { "#000000" } else { "#ffffff" };
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" style="text-anchor:middle;dominant-baseline:middle;fill:{ink}">{count}</text>"#,
                x + cw / 2.0,
                y + ch / 2.0
            );
        }
    }
    for (col, v) in cfg.cols.values.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" style="text-anchor:middle">{v}</text>"#,
            PLOT_LEFT + (col as f64 + 0.5) * cw,
            PLOT_BOTTOM + 20.0
        );
    }
    for (row, v) in cfg.rows.values.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" style="text-anchor:end;dominant-baseline:middle">{v}</text>"#,
            PLOT_LEFT - 8.0,
            PLOT_BOTTOM - (row as f64 + 0.5) * ch
        );
    }
    frame(&mut out);
    axis_labels(&mut out, cfg.cols.param.name(), cfg.rows.param.name());
    out.push_str("</svg>\n");
    out
}

/// Smallest error drawn on the log axis; exact recoveries sit on the floor.
const ERROR_FLOOR: f64 = 1e-6;

/// Mean Hausdorff error versus SNR, one line per estimator, log-scale error
/// axis. The noiseless point is drawn one step right of the largest finite SNR.
pub fn sweep_svg(result: &SweepResult) -> String {
    let mut out = svg_open(&format!("Mean frequency error over {} trials", result.trials));
    let finite: Vec<f64> = result.snr_values.iter().copied().filter(|v| v.is_finite()).collect();
    let (mut lo, mut hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if finite.is_empty() {
        (lo, hi) = (0.0, 0.0);
    }
    let step = if finite.len() > 1 { (hi - lo) / (finite.len() - 1) as f64 } else { 10.0 };
    let inf_pos = hi + step;
    let x_max = if result.snr_values.iter().any(|v| v.is_infinite()) { inf_pos } else { hi };
    let x_span = if x_max > lo { x_max - lo } else { 1.0 };
    let sx = |snr: f64| {
        let v = if snr.is_infinite() { inf_pos } else { snr };
        PLOT_LEFT + (v - lo) / x_span * (PLOT_RIGHT - PLOT_LEFT)
    };

    let logs = result
        .series
        .iter()
        .flat_map(|s| s.mean_errors.iter())
        .map(|e| e.max(ERROR_FLOOR).log10());
    let (ylo, yhi) = logs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (ylo, yhi) = (ylo.floor(), yhi.ceil().max(ylo.floor() + 1.0));
    let sy = |err: f64| {
        let v = err.max(ERROR_FLOOR).log10();
        PLOT_BOTTOM - (v - ylo) / (yhi - ylo) * (PLOT_BOTTOM - PLOT_TOP)
    };

    for decade in (ylo as i32)..=(yhi as i32) {
        let y = sy(10f64.powi(decade));
        let _ = writeln!(
            out,
            r#"<line x1="{PLOT_LEFT}" y1="{y:.2}" x2="{PLOT_RIGHT}" y2="{y:.2}" style="stroke:#e0e0e0"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{y:.2}" style="text-anchor:end;dominant-baseline:middle">1e{decade}</text>"#,
            PLOT_LEFT - 8.0
        );
    }
    for &snr in &result.snr_values {
        let label = if snr.is_infinite() { "∞".to_owned() } else { snr.to_string() };
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" style="text-anchor:middle">{label}</text>"#,
            sx(snr),
            PLOT_BOTTOM + 20.0
        );
    }
    for (i, series) in result.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points = result
            .snr_values
            .iter()
            .zip(&series.mean_errors)
            .map(|(&snr, &err)| format!("{:.2},{:.2}", sx(snr), sy(err)))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(
            out,
            r#"<polyline points="{points}" style="fill:none;stroke:{color};stroke-width:2"/>"#
        );
        for (&snr, &err) in result.snr_values.iter().zip(&series.mean_errors) {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" style="fill:{color}"/>"#,
                sx(snr),
                sy(err)
            );
        }
        let ly = PLOT_TOP + 20.0 + 22.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" style="stroke:{color};stroke-width:2"/>"#,
            PLOT_RIGHT - 130.0,
            PLOT_RIGHT - 100.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" style="dominant-baseline:middle">{}</text>"#,
            PLOT_RIGHT - 92.0,
            escape(&series.spec.label())
        );
    }
    frame(&mut out);
    axis_labels(&mut out, "SNR (dB)", "mean Hausdorff error");
    out.push_str("</svg>\n");
    out
}

/// Pseudospectrum on a log axis with picked peaks circled and, when given,
/// the true frequencies drawn as dashed verticals.
pub fn pseudospectrum_svg(curve: &PseudospectrumCurve, peaks: &PeakPick, truth: Option<&[f64]>) -> String {
    let mut out = svg_open("MUSIC pseudospectrum");
    let logs: Vec<f64> = curve.values.iter().map(|v| v.max(f64::MIN_POSITIVE).log10()).collect();
    let (ylo, yhi) = logs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (ylo, yhi) = (ylo.floor(), yhi.ceil().max(ylo.floor() + 1.0));
    let sx = |tau: f64| PLOT_LEFT + tau * (PLOT_RIGHT - PLOT_LEFT);
    let sy = |lg: f64| PLOT_BOTTOM - (lg - ylo) / (yhi - ylo) * (PLOT_BOTTOM - PLOT_TOP);

    for tick in 0..=10 {
        let tau = tick as f64 / 10.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" style="text-anchor:middle">{tau}</text>"#,
            sx(tau),
            PLOT_BOTTOM + 20.0
        );
    }
    let decades = (yhi - ylo) as i32;
    let stride = (decades / 8).max(1);
    for decade in ((ylo as i32)..=(yhi as i32)).step_by(stride as usize) {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" style="text-anchor:end;dominant-baseline:middle">1e{decade}</text>"#,
            PLOT_LEFT - 8.0,
            sy(decade as f64)
        );
    }
    if let Some(taus) = truth {
        for &tau in taus {
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{PLOT_TOP}" x2="{x:.2}" y2="{PLOT_BOTTOM}" style="stroke:#2ca02c;stroke-dasharray:6,4"/>"#,
                x = sx(tau)
            );
        }
    }
    let points = curve
        .grid
        .iter()
        .zip(&logs)
        .map(|(&t, &lg)| format!("{:.2},{:.2}", sx(t), sy(lg)))
        .collect::<Vec<_>>()
        .join(" ");
    let _ = writeln!(
        out,
        r#"<polyline points="{points}" style="fill:none;stroke:#1f77b4;stroke-width:1.5"/>"#
    );
    for &i in &peaks.indices {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="6" style="fill:none;stroke:#d62728;stroke-width:2"/>"#,
            sx(curve.grid[i]),
            sy(logs[i])
        );
    }
    frame(&mut out);
    axis_labels(&mut out, "τ", "f(τ)");
    out.push_str("</svg>\n");
    out
}

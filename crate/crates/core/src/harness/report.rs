use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::experiment::{session_position, ExperimentOutcome};
use crate::harness::metrics::DayReport;
use crate::linalg::{covariance, sym_eigen, Matrix};
use crate::signal::LabeledWindows;

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_SVG: &str = "summary.svg";
pub const MODEL_CSV: &str = "model.csv";
pub const RUN_TOML: &str = "run.toml";

/// `mapping_day{d}.csv`, with an `_s{k}` suffix when a day has several sessions.
pub fn mapping_file_name(session_index: usize, sessions_per_day: usize) -> String {
    let (day, sub) = session_position(session_index, sessions_per_day);
    if sessions_per_day > 1 {
        format!("mapping_day{day}_s{sub}.csv")
    } else {
        format!("mapping_day{day}.csv")
    }
}

/// Writes the report, the reference model, one mapping per later session and
/// the fully resolved configuration (seeds included).
pub fn write_outputs(outcome: &ExperimentOutcome, cfg: &ExperimentConfig, out_dir: impl AsRef<Path>) -> Result<()> {
    let out = out_dir.as_ref();
    emit_report(&outcome.reports, out)?;
    outcome.model.save(out.join(MODEL_CSV))?;
    for (i, m) in outcome.mappings.iter().enumerate() {
        m.save(out.join(mapping_file_name(i + 1, cfg.sessions_per_day)))?;
    }
    fs::write(out.join(RUN_TOML), cfg.to_toml_string()?)?;
    Ok(())
}

/// Writes `summary.csv` and `summary.svg` into `out_dir`.
pub fn emit_report(reports: &[DayReport], out_dir: impl AsRef<Path>) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::Data("no reports to emit".into()));
    }
    let out = out_dir.as_ref();
    fs::create_dir_all(out)?;
    write_summary_csv(reports, out.join(SUMMARY_CSV))?;
    fs::write(out.join(SUMMARY_SVG), summary_svg(reports))?;
    Ok(())
}

pub fn write_summary_csv(reports: &[DayReport], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: impl AsRef<Path>) -> Result<Vec<DayReport>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<DayReport>, _>>()?)
}

struct Series<'a> {
    name: &'a str,
    color: &'a str,
    values: Vec<f64>,
}

const CHART_W: f64 = 560.0;
const CHART_H: f64 = 240.0;
const MARGIN: f64 = 48.0;

fn chart(svg: &mut String, top: f64, title: &str, labels: &[String], series: &[Series]) {
    let (lo, hi) = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .fold((0.0_f64, 1.0_f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let x0 = MARGIN;
    let y0 = top + MARGIN;
    let pw = CHART_W - 2.0 * MARGIN;
    let ph = CHART_H - 2.0 * MARGIN;
    let n = labels.len();
    let px = |i: usize| if n > 1 { x0 + pw * i as f64 / (n - 1) as f64 } else { x0 + pw / 2.0 };
    let py = |v: f64| y0 + ph * (hi - v) / (hi - lo);

    let _ = writeln!(svg, r#"<text x="{x0}" y="{}" font-size="14">{title}</text>"#, top + 24.0);
    let _ = writeln!(
        svg,
        r##"<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>"##
    );
    for tick in [lo, (lo + hi) / 2.0, hi] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" font-size="10" text-anchor="end">{tick:.2}</text>"#,
            x0 - 4.0,
            py(tick) + 3.0
        );
    }
    for (i, l) in labels.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" font-size="10" text-anchor="middle">{l}</text>"#,
            px(i),
            y0 + ph + 14.0
        );
    }
    for (k, s) in series.iter().enumerate() {
        let points: Vec<String> = s.values.iter().enumerate().map(|(i, &v)| format!("{:.1},{:.1}", px(i), py(v))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-series="{}" fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            s.name,
            s.color,
            points.join(" ")
        );
        let ly = y0 + 12.0 * k as f64 + 10.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" font-size="10" fill="{}">{}</text>"#,
            x0 + pw + 4.0,
            s.color,
            s.name
        );
    }
}

/// Two stacked line charts: correlations per session and absolute accuracies.
pub fn summary_svg(reports: &[DayReport]) -> String {
    let labels: Vec<String> = reports.iter().map(DayReport::label).collect();
    let col = |f: fn(&DayReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    let width = CHART_W + 80.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{}" font-family="sans-serif">"#,
        2.0 * CHART_H
    );
    chart(
        &mut svg,
        0.0,
        "Correlation with reference session",
        &labels,
        &[
            Series { name: "aligned", color: "#1f77b4", values: col(|r| r.mean_canonical_correlation_aligned) },
            Series { name: "unaligned", color: "#d62728", values: col(|r| r.mean_channelwise_correlation_unaligned) },
            Series { name: "gain", color: "#2ca02c", values: col(|r| r.correlation_gain) },
        ],
    );
    chart(
        &mut svg,
        CHART_H,
        "Classification accuracy",
        &labels,
        &[
            Series { name: "aligned", color: "#1f77b4", values: col(|r| r.acc_aligned) },
            Series { name: "unaligned", color: "#d62728", values: col(|r| r.acc_unaligned) },
            Series { name: "pooled", color: "#2ca02c", values: col(|r| r.acc_pooled) },
        ],
    );
    svg.push_str("</svg>\n");
    svg
}

/// Projects windows onto the two leading principal axes of `basis`.
/// Returns a `2 × T` matrix; a diagnostic view of cluster overlap.
pub fn pca_2d(basis: &LabeledWindows<f64>, data: &LabeledWindows<f64>) -> Result<Matrix<f64>> {
    let n = basis.n_channels();
    if n < 2 {
        return Err(Error::Parameter("PCA view needs at least 2 channels".into()));
    }
    if data.n_channels() != n {
        return Err(Error::dim("pca_2d", format!("{n} channels"), data.n_channels()));
    }
    let means = basis.features.row_means();
    let centered = basis.features.sub_row_offsets(&means);
    let eig = sym_eigen(&covariance(&centered, &centered)?)?;
    let axes = eig.vectors.select_columns(&[0, 1])?.transpose();
    axes.try_dot(&data.features.sub_row_offsets(&means))
}

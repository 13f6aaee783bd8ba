//! Risk report: long CSV, JSON and per-figure plot series.

use std::path::{Path, PathBuf};

use climcredit_core::valuation::WellPosednessReport;
use serde::{Deserialize, Serialize};

use crate::config::ReportFormat;

/// Half-width multiplier of the normal 95% confidence band.
pub const CI_Z: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub year: i32,
    pub group: String,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub seed: u64,
    pub paths: usize,
    pub bundle_hash: String,
}

pub const CSV_HEADER: [&str; 9] = [
    "scenario",
    "year",
    "group",
    "metric",
    "value",
    "stderr",
    "seed",
    "paths",
    "bundle_hash",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellPosedness {
    pub pass: bool,
    pub gamma_norm: f64,
    pub spectral_radius: f64,
    pub rho: Option<f64>,
    pub r: f64,
    pub varrho: Vec<(String, f64)>,
    pub max_price_cost: Vec<(String, f64)>,
    /// Human-readable description of each failing inequality.
    pub failures: Vec<String>,
}

impl WellPosedness {
    pub fn from_core(rep: &WellPosednessReport, firm_ids: &[String]) -> Self {
        let mut failures = Vec::new();
        for (id, v) in firm_ids.iter().zip(&rep.varrho) {
            if !(*v < 0.0) {
                failures.push(format!("firm {id}: varrho = {v} is not < 0"));
            }
        }
        if let (Some(rho), Some(false)) = (rep.rho, rep.value_pass) {
            failures.push(format!("rho = {rho} is not < r = {}", rep.r));
        }
        Self {
            pass: rep.pass(),
            gamma_norm: rep.gamma_norm,
            spectral_radius: rep.spectral_radius,
            rho: rep.rho,
            r: rep.r,
            varrho: firm_ids.iter().cloned().zip(rep.varrho.iter().copied()).collect(),
            max_price_cost: Vec::new(),
            failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub bundle_hash: String,
    pub seed: u64,
    pub paths: usize,
    pub alpha: f64,
    pub horizon: usize,
    pub theta_fd: f64,
    pub t_ref: Option<i32>,
    pub scenarios: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub run: RunInfo,
    pub well_posedness: Option<WellPosedness>,
    pub rows: Vec<ReportRow>,
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

pub fn write_csv(path: &Path, rows: &[ReportRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(std::io::Error::other)?;
    w.write_record(CSV_HEADER).map_err(std::io::Error::other)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.year.to_string(),
            r.group.clone(),
            r.metric.clone(),
            fmt_f(r.value),
            r.stderr.map(fmt_f).unwrap_or_default(),
            r.seed.to_string(),
            r.paths.to_string(),
            r.bundle_hash.clone(),
        ])
        .map_err(std::io::Error::other)?;
    }
    w.flush()
}

pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>, String> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let head = rdr.headers().map_err(|e| e.to_string())?.clone();
    if head.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(format!("unexpected report header {head:?}"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("'{s}': {e}"));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let r = rec.map_err(|e| e.to_string())?;
        out.push(ReportRow {
            scenario: r[0].to_string(),
            year: r[1].parse().map_err(|e| format!("year '{}': {e}", &r[1]))?,
            group: r[2].to_string(),
            metric: r[3].to_string(),
            value: num(&r[4])?,
            stderr: if r[5].is_empty() { None } else { Some(num(&r[5])?) },
            seed: r[6].parse().map_err(|e| format!("seed '{}': {e}", &r[6]))?,
            paths: r[7].parse().map_err(|e| format!("paths '{}': {e}", &r[7]))?,
            bundle_hash: r[8].to_string(),
        });
    }
    Ok(out)
}

/// Metrics that get a plot series, with their file stem.
pub const PLOT_METRICS: [&str; 4] = ["output_growth", "pd", "el", "ul"];

pub const PLOT_HEADER: [&str; 6] = ["scenario", "year", "series", "mean", "lo", "hi"];

/// `mean ± 1.96·stderr`; a missing or non-finite stderr gives a zero-width band.
pub fn ci(value: f64, stderr: Option<f64>) -> (f64, f64) {
    match stderr {
        Some(s) if s.is_finite() && s >= 0.0 => (value - CI_Z * s, value + CI_Z * s),
        _ => (value, value),
    }
}

pub fn write_plot(path: &Path, metric: &str, rows: &[ReportRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(std::io::Error::other)?;
    w.write_record(PLOT_HEADER).map_err(std::io::Error::other)?;
    for r in rows.iter().filter(|r| r.metric == metric) {
        let (lo, hi) = ci(r.value, r.stderr);
        w.write_record([
            r.scenario.clone(),
            r.year.to_string(),
            r.group.clone(),
            fmt_f(r.value),
            fmt_f(lo),
            fmt_f(hi),
        ])
        .map_err(std::io::Error::other)?;
    }
    w.flush()
}

/// Writes the requested formats into `dir` and returns the written paths.
pub fn emit_report(report: &RiskReport, formats: &[ReportFormat], dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if formats.contains(&ReportFormat::Csv) {
        let p = dir.join("report.csv");
        write_csv(&p, &report.rows)?;
        written.push(p);
    }
    if formats.contains(&ReportFormat::Json) {
        let p = dir.join("report.json");
        let text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
        std::fs::write(&p, text + "\n")?;
        written.push(p);
    }
    if formats.contains(&ReportFormat::Plot) {
        for m in PLOT_METRICS {
            let p = dir.join(format!("plot_{m}.csv"));
            write_plot(&p, m, &report.rows)?;
            written.push(p);
        }
    }
    Ok(written)
}

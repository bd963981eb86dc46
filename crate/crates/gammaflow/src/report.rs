//! Report rows and their canonical CSV / JSON forms.
//!
//! The CSV column order is fixed and floats are printed with 17
//! significant digits so every value round-trips bit-exactly. The
//! wallclock_ms column is always 0 in canonical output: reports must be
//! byte-identical across reruns and worker counts, and measured timing is
//! a side channel of the pretty view only.

use crate::error::{Error, Result};
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::invalid(format!(
                "expected \"csv\" or \"json\", got \"{other}\""
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

/// One experiment result row. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub experiment: String,
    pub anchor: String,
    pub p: f64,
    pub space_variant: String,
    #[serde(rename = "d_E")]
    pub d_e: usize,
    pub q: f64,
    #[serde(rename = "d_H")]
    pub d_h: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N_t")]
    pub bins: usize,
    #[serde(rename = "M")]
    pub paths: usize,
    pub seed: u64,
    pub mode: String,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub predicate: String,
    pub pass: bool,
    pub generator_version: String,
    pub wallclock_ms: u64,
}

pub const CSV_HEADER: &str = "experiment,anchor,p,space_variant,d_E,q,d_H,T,N_t,M,seed,mode,\
lhs,lhs_stderr,rhs,rhs_stderr,ratio,ci_low,ci_high,predicate,pass,generator_version,wallclock_ms";

/// 17 significant digits: enough to reconstruct any f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn csv_row(r: &RatioReport) -> String {
    [
        csv_field(&r.experiment),
        csv_field(&r.anchor),
        fmt_float(r.p),
        csv_field(&r.space_variant),
        r.d_e.to_string(),
        fmt_float(r.q),
        r.d_h.to_string(),
        fmt_float(r.horizon),
        r.bins.to_string(),
        r.paths.to_string(),
        r.seed.to_string(),
        csv_field(&r.mode),
        fmt_float(r.lhs),
        fmt_float(r.lhs_stderr),
        fmt_float(r.rhs),
        fmt_float(r.rhs_stderr),
        fmt_float(r.ratio),
        fmt_float(r.ci_low),
        fmt_float(r.ci_high),
        csv_field(&r.predicate),
        r.pass.to_string(),
        csv_field(&r.generator_version),
        r.wallclock_ms.to_string(),
    ]
    .join(",")
}

pub fn to_csv(rows: &[RatioReport]) -> String {
    let mut out = String::with_capacity(256 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

pub fn to_json(rows: &[RatioReport]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("report rows are serializable");
    s.push('\n');
    s
}

/// Canonical report text. Rows must be nonempty.
pub fn render(rows: &[RatioReport], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("report needs at least one row"));
    }
    Ok(match format {
        ReportFormat::Csv => to_csv(rows),
        ReportFormat::Json => to_json(rows),
    })
}

/// Write the canonical report to a file.
pub fn write_report(rows: &[RatioReport], format: ReportFormat, path: &Path) -> Result<()> {
    let text = render(rows, format)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Human-readable summary; never the canonical artifact.
pub fn pretty(rows: &[RatioReport]) -> String {
    let mut out = String::new();
    let mut passes = 0usize;
    for r in rows {
        if r.pass {
            passes += 1;
        }
        out.push_str(&format!(
            "{:<22} {}  lhs {:>13.6e}  rhs {:>13.6e}  ratio {:>10.6}  ci [{:.6}, {:.6}]\n",
            r.experiment,
            if r.pass { "pass" } else { "FAIL" },
            r.lhs,
            r.rhs,
            r.ratio,
            r.ci_low,
            r.ci_high,
        ));
    }
    out.push_str(&format!("{passes}/{} rows pass\n", rows.len()));
    out
}

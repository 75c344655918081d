//! Report structures and serialization.
//!
//! Reports are deterministic: fields serialize in a fixed order, parameter
//! maps are sorted, and every numeric value is rounded to six significant
//! digits when the report is built, so identical inputs produce
//! byte-identical documents.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    #[value(name = "csv-summary")]
    CsvSummary,
}

/// Rounds to six significant decimal digits.
pub fn round_sig6(value: f64) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    format!("{value:.5e}")
        .parse()
        .expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: "headpose".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerDegrees {
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleMae {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub mean: f64,
}

impl AngleMae {
    pub fn rounded(m: &headpose_core::metrics::PerAngleMae) -> Self {
        Self {
            yaw: round_sig6(m.yaw),
            pitch: round_sig6(m.pitch),
            roll: round_sig6(m.roll),
            mean: round_sig6(m.mean),
        }
    }
}

/// Metric values over one bin; absent when the bin is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinMetricsValues {
    /// Mean geodesic error, degrees.
    pub ge_mean: f64,
    /// Per-angle MAE of raw principal-Euler differences, degrees.
    pub mae_raw: AngleMae,
    /// Per-angle MAE with periodic wrapping, degrees.
    pub mae_wrapped: AngleMae,
    /// Mean wrapped Euler distance (sum over angles), degrees.
    pub euc_mean: f64,
    /// Mean chordal distance, unitless.
    pub chordal_mean: f64,
    /// Mean Opal loss, present when parameters were supplied.
    pub opal_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinReport {
    pub name: String,
    pub count: usize,
    /// Samples whose yaw is within one degree of a quarter turn, where the
    /// per-angle MAE columns are untrustworthy.
    pub near_gimbal_count: usize,
    pub metrics: Option<BinMetricsValues>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsBlock {
    pub overall: BinReport,
    pub bins: Vec<BinReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAlignment {
    pub group: String,
    pub count: usize,
    /// Estimated reference-frame offset, row major.
    pub delta: [[f64; 3]; 3],
    pub delta_euler: EulerDegrees,
    pub iterations: usize,
    pub final_step_norm_rad: f64,
    /// Subsampled max pairwise geodesic among the residuals, degrees.
    pub dispersion_deg: f64,
    pub ge_before: f64,
    pub ge_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentFailure {
    pub group: String,
    pub message: String,
    pub convergence_failure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSummary {
    /// "global" or "per_group".
    pub mode: String,
    pub transpose_applied: bool,
    pub groups: Vec<GroupAlignment>,
    pub error: Option<AlignmentFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tool: ToolInfo,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<InputDigest>,
    pub unaligned: MetricsBlock,
    pub alignment: Option<AlignmentSummary>,
    pub aligned: Option<MetricsBlock>,
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String, EvalError> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut text =
                serde_json::to_string_pretty(report).expect("report serialization cannot fail");
            text.push('\n');
            text
        }
        ReportFormat::CsvSummary => render_csv_summary(report),
    }
}

const SUMMARY_COLUMNS: &[&str] = &[
    "section",
    "bin",
    "count",
    "near_gimbal_count",
    "ge_mean",
    "mae_raw_yaw",
    "mae_raw_pitch",
    "mae_raw_roll",
    "mae_raw_mean",
    "mae_wrapped_yaw",
    "mae_wrapped_pitch",
    "mae_wrapped_roll",
    "mae_wrapped_mean",
    "euc_mean",
    "chordal_mean",
    "opal_mean",
];

fn render_csv_summary(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&SUMMARY_COLUMNS.join(","));
    out.push('\n');
    let mut push_block = |section: &str, block: &MetricsBlock| {
        for bin in std::iter::once(&block.overall).chain(block.bins.iter()) {
            let mut fields: Vec<String> = vec![
                section.to_string(),
                bin.name.clone(),
                bin.count.to_string(),
                bin.near_gimbal_count.to_string(),
            ];
            match &bin.metrics {
                Some(m) => {
                    for v in [
                        m.ge_mean,
                        m.mae_raw.yaw,
                        m.mae_raw.pitch,
                        m.mae_raw.roll,
                        m.mae_raw.mean,
                        m.mae_wrapped.yaw,
                        m.mae_wrapped.pitch,
                        m.mae_wrapped.roll,
                        m.mae_wrapped.mean,
                        m.euc_mean,
                        m.chordal_mean,
                    ] {
                        fields.push(format!("{v}"));
                    }
                    fields.push(m.opal_mean.map(|v| format!("{v}")).unwrap_or_default());
                }
                None => fields.extend(std::iter::repeat_n(String::new(), 12)),
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
    };
    push_block("unaligned", &report.unaligned);
    if let Some(aligned) = &report.aligned {
        push_block("aligned", aligned);
    }
    out
}

pub fn write_report(
    report: &EvalReport,
    path: &Path,
    format: ReportFormat,
) -> Result<(), EvalError> {
    std::fs::write(path, render_report(report, format)).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

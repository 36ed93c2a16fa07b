//! Audit report rendering.
//!
//! The JSON document is canonical; CSV and Markdown are derived from the
//! same [`ReportBundle`]. Rendering is a pure function of the bundle: field
//! order is fixed and nothing time- or environment-dependent is emitted.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::{FinalizedStats, FinalizedStrata};
use crate::distributions::InversionPoint;
use crate::ingest::PairingReport;
use crate::metrics::MetricConfig;
use crate::records::DialectGapReport;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown report format {0:?} (expected json|csv|md)")]
    UnknownFormat(String),
    #[error("report bundle has no model blocks")]
    NoModels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

/// Footnote attached to every rendered report.
pub const SADHU_PCT_NOTE: &str = "Sadhu Err. Inc. (%) is computed from the unrounded stratum means; \
recomputing it from the rounded Sadhu/Cholito values shown can differ by a few tenths of a point.";

/// Row labels of the metric block, in display order.
pub const ROW_LABELS: [&str; 10] = [
    "Mean Div.",
    "Std Dev.",
    "Sadhu Div.",
    "Cholito Div.",
    "Dialect Gap",
    "Sadhu Err. Inc. (%)",
    "Robustness (%)",
    "Inversions",
    "Inv. Rate (%)",
    "Dir. Bias (En-Bn)",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub metric: String,
    /// Unrounded value.
    pub value: Option<f64>,
    /// Rounded display string.
    pub display: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model_id: String,
    pub all: Option<FinalizedStats>,
    pub sadhu: Option<FinalizedStats>,
    pub cholito: Option<FinalizedStats>,
    pub dialect_gap: Option<DialectGapReport>,
    pub integrity: PairingReport,
    pub table: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub config: MetricConfig,
    pub models: Vec<ModelReport>,
    /// Pairing counters summed over all models.
    pub integrity: PairingReport,
    pub histograms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inversion_series: Option<Vec<InversionPoint>>,
    pub notes: Vec<String>,
}

impl ReportBundle {
    pub fn new(config: MetricConfig, models: Vec<ModelReport>) -> Self {
        let mut integrity = PairingReport::default();
        for m in &models {
            integrity.absorb(&m.integrity);
        }
        Self {
            config,
            models,
            integrity,
            histograms: Vec::new(),
            inversion_series: None,
            notes: vec![SADHU_PCT_NOTE.to_string()],
        }
    }
}

/// Rounds half away from zero to `decimals` places and formats the result.
///
/// Ties are judged on the exact binary value, so `0.125` is a tie at two
/// places (-> `0.13`) while `0.0785`, stored slightly above the tie, goes up
/// regardless.
pub fn format_half_away(x: f64, decimals: usize) -> String {
    let nearest = format!("{:.*}", decimals, x);
    // Exact decimal expansion, far enough out to tell a true tie from a near one.
    let probe = format!("{:.*}", decimals + 30, x.abs());
    let tail = &probe[probe.len() - 30..];
    let is_tie = tail.starts_with('5') && tail[1..].bytes().all(|b| b == b'0');
    let out = if is_tie {
        let truncated = &probe[..probe.len() - 30];
        let bumped = increment_decimal(truncated.trim_end_matches('.'), decimals);
        if x.is_sign_negative() { format!("-{bumped}") } else { bumped }
    } else {
        nearest
    };
    // no negative zero in reports
    if out.starts_with('-') && out[1..].bytes().all(|b| b == b'0' || b == b'.') {
        out[1..].to_string()
    } else {
        out
    }
}

/// Adds one unit in the last place to a non-negative decimal string.
fn increment_decimal(s: &str, decimals: usize) -> String {
    let mut digits: Vec<u8> = s.bytes().filter(|b| *b != b'.').collect();
    let mut i = digits.len();
    loop {
        if i == 0 {
            digits.insert(0, b'1');
            break;
        }
        i -= 1;
        if digits[i] == b'9' {
            digits[i] = b'0';
        } else {
            digits[i] += 1;
            break;
        }
    }
    let mut out = String::from_utf8(digits).expect("ascii digits");
    if decimals > 0 {
        out.insert(out.len() - decimals, '.');
    }
    out
}

fn score_row(label: &str, v: Option<f64>) -> TableRow {
    TableRow { metric: label.into(), value: v, display: v.map(|x| format_half_away(x, 3)) }
}

fn pct_row(label: &str, v: Option<f64>) -> TableRow {
    TableRow { metric: label.into(), value: v, display: v.map(|x| format_half_away(x, 1)) }
}

fn count_row(label: &str, v: Option<u64>) -> TableRow {
    TableRow { metric: label.into(), value: v.map(|c| c as f64), display: v.map(|c| c.to_string()) }
}

/// The ten-row metric block of one model. Missing strata produce `null`
/// entries and a warning.
pub fn render_model_block(
    all: Option<&FinalizedStats>,
    sadhu: Option<&FinalizedStats>,
    cholito: Option<&FinalizedStats>,
    gap: Option<&DialectGapReport>,
) -> Vec<TableRow> {
    for (name, s) in [("all", all.is_none()), ("sadhu", sadhu.is_none()), ("cholito", cholito.is_none())] {
        if s {
            log::warn!("stratum {name} is empty; its rows are reported as null");
        }
    }
    vec![
        score_row(ROW_LABELS[0], all.map(|s| s.mean_divergence)),
        score_row(ROW_LABELS[1], all.and_then(|s| s.std_divergence)),
        score_row(ROW_LABELS[2], sadhu.map(|s| s.mean_divergence)),
        score_row(ROW_LABELS[3], cholito.map(|s| s.mean_divergence)),
        score_row(ROW_LABELS[4], gap.map(|g| g.gap)),
        pct_row(ROW_LABELS[5], gap.and_then(|g| g.gap_pct)),
        pct_row(ROW_LABELS[6], all.map(|s| s.robustness_pct)),
        count_row(ROW_LABELS[7], all.map(|s| s.inversion_count)),
        pct_row(ROW_LABELS[8], all.map(|s| s.inversion_rate_pct)),
        score_row(ROW_LABELS[9], all.map(|s| s.mean_bias)),
    ]
}

/// Assembles a model block from finalized strata.
pub fn model_report(model_id: &str, strata: FinalizedStrata, integrity: PairingReport) -> ModelReport {
    let gap = match (&strata.sadhu, &strata.cholito) {
        (Some(s), Some(c)) => Some(crate::aggregate::dialect_gap(model_id, s, c)),
        _ => None,
    };
    let table = render_model_block(strata.all.as_ref(), strata.sadhu.as_ref(), strata.cholito.as_ref(), gap.as_ref());
    ModelReport {
        model_id: model_id.to_string(),
        all: strata.all,
        sadhu: strata.sadhu,
        cholito: strata.cholito,
        dialect_gap: gap,
        integrity,
        table,
    }
}

pub fn render_audit(bundle: &ReportBundle, format: ReportFormat) -> Result<String, ReportError> {
    if bundle.models.is_empty() {
        return Err(ReportError::NoModels);
    }
    Ok(match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(bundle).expect("bundle serialization cannot fail");
            s.push('\n');
            s
        }
        ReportFormat::Csv => render_csv(bundle),
        ReportFormat::Markdown => render_markdown(bundle),
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_csv(bundle: &ReportBundle) -> String {
    let mut out = String::from("model_id,metric,value,display\n");
    for m in &bundle.models {
        for row in &m.table {
            let value = row.value.map(|v| v.to_string()).unwrap_or_default();
            let display = row.display.clone().unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", csv_field(&m.model_id), csv_field(&row.metric), value, display);
        }
    }
    out
}

fn render_markdown(bundle: &ReportBundle) -> String {
    let mut out = String::from("# Cross-lingual sentiment alignment audit\n\n");
    let _ = writeln!(
        out,
        "tau = {}, robust threshold = {}\n",
        bundle.config.tau, bundle.config.robust_threshold
    );
    for m in &bundle.models {
        let _ = writeln!(out, "## {}\n", m.model_id);
        out.push_str("| Metric | Value |\n|---|---:|\n");
        for row in &m.table {
            let shown = match (&row.display, row.metric.as_str()) {
                (Some(d), "Sadhu Err. Inc. (%)") => format!("{d}\\*"),
                (Some(d), _) => d.clone(),
                (None, _) => "n/a".to_string(),
            };
            let _ = writeln!(out, "| {} | {} |", row.metric, shown);
        }
        let i = &m.integrity;
        let _ = writeln!(
            out,
            "\nPairs: {} of {} records paired; orphaned bn {}, orphaned en {}, dialect conflicts {}, duplicates {}.\n",
            i.paired_count, i.total_records, i.orphaned_bn, i.orphaned_en, i.dialect_conflicts, i.duplicates_rejected
        );
    }
    if let Some(series) = &bundle.inversion_series {
        out.push_str("## Inversion rate by model\n\n| Model | Inv. Rate (%) |\n|---|---:|\n");
        for p in series {
            let _ = writeln!(out, "| {} | {} |", p.model_id, format_half_away(p.inversion_rate_pct, 1));
        }
        out.push('\n');
    }
    if !bundle.histograms.is_empty() {
        out.push_str("Histograms:\n\n");
        for h in &bundle.histograms {
            let _ = writeln!(out, "- {h}");
        }
        out.push('\n');
    }
    for n in &bundle.notes {
        let _ = writeln!(out, "\\* {n}");
    }
    out
}

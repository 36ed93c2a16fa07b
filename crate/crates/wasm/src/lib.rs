//! Browser bindings for the alignment auditor.
//!
//! Every export takes plain numbers or strings and returns a JSON string,
//! so the page needs no generated type glue beyond `wasm-bindgen`.

use std::io::Cursor;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use xlalign::distributions::{Histogram, HistogramConfig};
use xlalign::ingest::{group_by_model, parse_predictions, InputFormat};
use xlalign::oracle::{synth_corpus, SynthParams};
use xlalign::pipeline::{audit_model, AuditOptions};
use xlalign::report::{render_audit, ReportBundle, ReportFormat};
use xlalign::{builtin_schemes, MetricConfig, PredictionRecord, ValidationMode};

#[derive(Serialize)]
struct ModelHistograms {
    model_id: String,
    divergence: Histogram,
    bias: Histogram,
}

#[derive(Serialize)]
struct AuditView {
    report: ReportBundle,
    markdown: String,
    histograms: Vec<ModelHistograms>,
    rejected_lines: Vec<usize>,
}

/// Thresholds and bin counts chosen on the page.
#[derive(Debug, Clone, Copy)]
pub struct ViewSettings {
    pub tau: f64,
    pub robust_threshold: f64,
    pub divergence_bins: usize,
    pub bias_bins: usize,
}

fn audit_view(records: Vec<PredictionRecord>, scheme_id: &str, s: ViewSettings, rejected_lines: Vec<usize>) -> Result<String, String> {
    let config = MetricConfig::new(s.tau, s.robust_threshold).map_err(|e| e.to_string())?;
    if s.divergence_bins == 0 || s.bias_bins == 0 {
        return Err("bin counts must be at least 1".into());
    }
    let registry = builtin_schemes();
    let scheme = registry.lookup(scheme_id).ok_or_else(|| format!("unknown scheme {scheme_id:?}"))?;
    let opts = AuditOptions {
        config,
        histograms: HistogramConfig { divergence_bins: s.divergence_bins, bias_bins: s.bias_bins },
        mode: ValidationMode::Lenient,
        workers: 1,
    };
    let mut reports = Vec::new();
    let mut histograms = Vec::new();
    for (model, recs) in group_by_model(records) {
        let audit = audit_model(&model, recs, scheme, &opts).map_err(|e| e.to_string())?;
        reports.push(audit.report);
        histograms.push(ModelHistograms { model_id: model, divergence: audit.divergence_hist, bias: audit.bias_hist });
    }
    if reports.is_empty() {
        return Err("no prediction records".into());
    }
    let report = ReportBundle::new(config, reports);
    let markdown = render_audit(&report, ReportFormat::Markdown).map_err(|e| e.to_string())?;
    let view = AuditView { report, markdown, histograms, rejected_lines };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Audits pasted JSONL prediction records. Malformed lines are skipped and
/// listed in `rejected_lines`.
pub fn audit_jsonl_text(text: &str, scheme_id: &str, settings: ViewSettings) -> Result<String, String> {
    let outcome = parse_predictions(Cursor::new(text.as_bytes()), InputFormat::Jsonl, ValidationMode::Lenient)
        .map_err(|e| e.to_string())?;
    let rejected = outcome.rejections.iter().map(|r| r.line).collect();
    audit_view(outcome.records, scheme_id, settings, rejected)
}

/// Generates a planted corpus (thresholds fixed at 0.1) and audits it
/// under `settings`.
pub fn audit_synthetic_corpus(
    pairs: usize,
    inversions: usize,
    robust_pairs: usize,
    sadhu_fraction: f64,
    seed: u64,
    settings: ViewSettings,
) -> Result<String, String> {
    let params = SynthParams { pairs, inversions, robust_pairs, sadhu_fraction, ..Default::default() };
    let records = synth_corpus(&params, seed).map_err(|e| e.to_string())?;
    audit_view(records, "3class", settings, Vec::new())
}

/// Signed score of one prediction, plus the class it resolved to.
pub fn normalize_one(scheme_id: &str, label: &str, score: f64) -> Result<String, String> {
    let registry = builtin_schemes();
    let scheme = registry.lookup(scheme_id).ok_or_else(|| format!("unknown scheme {scheme_id:?}"))?;
    if !(0.0..=1.0).contains(&score) {
        return Err(format!("confidence {score} outside [0, 1]"));
    }
    let value = scheme.normalize_label(label, score).map_err(|e| e.to_string())?;
    let class = scheme.resolve(label).map(|c| c.name.clone());
    Ok(serde_json::json!({ "value": value, "class": class }).to_string())
}

/// Scheme definition as JSON, for listing accepted labels.
pub fn scheme_json(scheme_id: &str) -> Result<String, String> {
    builtin_schemes()
        .lookup(scheme_id)
        .map(|s| s.to_json())
        .ok_or_else(|| format!("unknown scheme {scheme_id:?}"))
}

fn js_err(e: String) -> JsValue {
    JsValue::from_str(&e)
}

#[wasm_bindgen]
pub fn audit_jsonl(
    text: &str,
    scheme_id: &str,
    tau: f64,
    robust_threshold: f64,
    divergence_bins: usize,
    bias_bins: usize,
) -> Result<String, JsValue> {
    audit_jsonl_text(text, scheme_id, ViewSettings { tau, robust_threshold, divergence_bins, bias_bins }).map_err(js_err)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn audit_synthetic(
    pairs: usize,
    inversions: usize,
    robust_pairs: usize,
    sadhu_fraction: f64,
    seed: u32,
    tau: f64,
    robust_threshold: f64,
    divergence_bins: usize,
    bias_bins: usize,
) -> Result<String, JsValue> {
    let settings = ViewSettings { tau, robust_threshold, divergence_bins, bias_bins };
    audit_synthetic_corpus(pairs, inversions, robust_pairs, sadhu_fraction, seed as u64, settings).map_err(js_err)
}

#[wasm_bindgen]
pub fn normalize(scheme_id: &str, label: &str, score: f64) -> Result<String, JsValue> {
    normalize_one(scheme_id, label, score).map_err(js_err)
}

#[wasm_bindgen]
pub fn scheme(scheme_id: &str) -> Result<String, JsValue> {
    scheme_json(scheme_id).map_err(js_err)
}

//! Ingest -> normalize -> metrics -> aggregate -> report, for one model.

use thiserror::Error;

use crate::aggregate::{summarize, StratifiedSummary};
use crate::distributions::{metric_histograms, Histogram, HistogramConfig, HistogramError};
use crate::ingest::{pair_streams, IngestError, Pairing};
use crate::metrics::{compute_pair_metrics, MetricConfig};
use crate::normalize::{normalize, LabelScheme, NormalizeError};
use crate::records::{Lang, PairMetrics, PairedObservation, PredictionRecord, RecordError, ValidationMode};
use crate::report::{model_report, ModelReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("pair {pair_id} ({lang}): {source}")]
    Normalize {
        pair_id: String,
        lang: Lang,
        #[source]
        source: NormalizeError,
    },
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Histogram(#[from] HistogramError),
    #[error("model {0} has no complete pairs")]
    NoPairs(String),
}

#[derive(Debug, Clone, Copy)]
pub struct AuditOptions {
    pub config: MetricConfig,
    pub histograms: HistogramConfig,
    pub mode: ValidationMode,
    pub workers: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            config: MetricConfig::default(),
            histograms: HistogramConfig::default(),
            mode: ValidationMode::Strict,
            workers: 1,
        }
    }
}

/// Everything computed for one model.
#[derive(Debug, Clone)]
pub struct ModelAudit {
    pub model_id: String,
    pub pairing: Pairing,
    pub observations: Vec<PairedObservation>,
    pub metrics: Vec<PairMetrics>,
    pub summary: StratifiedSummary,
    pub divergence_hist: Histogram,
    pub bias_hist: Histogram,
    pub report: ModelReport,
}

/// Normalizes both sides of each joined pair.
pub fn observe(
    pairs: &[(PredictionRecord, PredictionRecord)],
    scheme: &LabelScheme,
) -> Result<Vec<PairedObservation>, PipelineError> {
    pairs
        .iter()
        .map(|(bn, en)| {
            let side = |r: &PredictionRecord| {
                normalize(r, scheme).map_err(|source| PipelineError::Normalize {
                    pair_id: r.pair_id.clone(),
                    lang: r.lang,
                    source,
                })
            };
            Ok(PairedObservation::new(bn.pair_id.clone(), bn.dialect, side(bn)?, side(en)?)?)
        })
        .collect()
}

/// Audits one model's records. All records must carry `model_id`.
pub fn audit_model(
    model_id: &str,
    records: Vec<PredictionRecord>,
    scheme: &LabelScheme,
    opts: &AuditOptions,
) -> Result<ModelAudit, PipelineError> {
    let pairing = pair_streams(records, opts.mode)?;
    let observations = observe(&pairing.pairs, scheme)?;
    audit_observations(model_id, pairing, observations, opts)
}

/// Audits already-normalized observations.
pub fn audit_observations(
    model_id: &str,
    pairing: Pairing,
    observations: Vec<PairedObservation>,
    opts: &AuditOptions,
) -> Result<ModelAudit, PipelineError> {
    if observations.is_empty() {
        return Err(PipelineError::NoPairs(model_id.to_string()));
    }
    let metrics: Vec<PairMetrics> = observations.iter().map(|o| compute_pair_metrics(o, &opts.config)).collect();
    let summary = summarize(model_id, &metrics, opts.config, opts.workers);
    let (divergence_hist, bias_hist) = metric_histograms(&metrics, opts.histograms)?;
    let report = model_report(model_id, summary.finalize(), pairing.report.clone());
    Ok(ModelAudit {
        model_id: model_id.to_string(),
        pairing,
        observations,
        metrics,
        summary,
        divergence_hist,
        bias_hist,
        report,
    })
}

/// Per-pair metrics dump, one JSON object per line.
pub fn pair_metrics_jsonl(metrics: &[PairMetrics]) -> String {
    let mut out = String::new();
    for m in metrics {
        out.push_str(&serde_json::to_string(m).expect("metrics serialization cannot fail"));
        out.push('\n');
    }
    out
}

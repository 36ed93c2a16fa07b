//! Cross-lingual sentiment alignment auditing.
//!
//! Paired Bengali/English predictions from one classifier are normalized onto
//! a signed [-1, 1] scale, compared pair by pair (divergence, directional
//! bias, polarity inversion) and aggregated per dialect stratum into
//! population statistics, dialect gaps and distribution data.

pub mod aggregate;
#[cfg(feature = "cli")]
pub mod cli;
pub mod distributions;
pub mod ingest;
pub mod metrics;
pub mod normalize;
pub mod oracle;
pub mod pipeline;
pub mod records;
pub mod report;

pub use aggregate::{AuditSummary, FinalizedStats, StratifiedSummary};
pub use metrics::MetricConfig;
pub use normalize::{builtin_schemes, LabelScheme, SchemeRegistry};
pub use records::{Dialect, Lang, PairMetrics, PairedObservation, PredictionRecord, Stratum, ValidationMode};

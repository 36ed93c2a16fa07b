//! Binned distributions of the per-pair metrics, and the per-model
//! inversion-rate series.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::FinalizedStats;
use crate::records::PairMetrics;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistogramError {
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("invalid range [{0}, {1}]")]
    BadRange(f64, f64),
    #[error("cannot merge histograms with different edges or metrics")]
    EdgeMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Divergence,
    Bias,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Divergence => "divergence",
            MetricKind::Bias => "bias",
        }
    }
}

/// Uniform-width histogram. Bins are half-open `[lo, hi)` except the last,
/// which is closed at the upper end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub metric: MetricKind,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    #[serde(rename = "n")]
    pub n_total: u64,
    #[serde(default)]
    pub underflow: u64,
    #[serde(default)]
    pub overflow: u64,
}

/// Bin layout used for the two metric distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramConfig {
    pub divergence_bins: usize,
    pub bias_bins: usize,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self { divergence_bins: 40, bias_bins: 80 }
    }
}

pub const DIVERGENCE_RANGE: (f64, f64) = (0.0, 2.0);
pub const BIAS_RANGE: (f64, f64) = (-2.0, 2.0);

impl Histogram {
    pub fn empty(metric: MetricKind, lo: f64, hi: f64, bins: usize) -> Result<Self, HistogramError> {
        if bins == 0 {
            return Err(HistogramError::NoBins);
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(HistogramError::BadRange(lo, hi));
        }
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..=bins).map(|k| lo + width * k as f64).collect();
        edges[bins] = hi;
        Ok(Self { metric, edges, counts: vec![0; bins], n_total: 0, underflow: 0, overflow: 0 })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Bin index for `x`, or `None` when it falls outside the range.
    ///
    /// The arithmetic guess is corrected against the stored edges so that
    /// membership is decided by the edges alone.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let bins = self.bins();
        let (lo, hi) = (self.edges[0], self.edges[bins]);
        if !(x >= lo && x <= hi) {
            return None;
        }
        if x == hi {
            return Some(bins - 1);
        }
        let mut k = (((x - lo) / (hi - lo)) * bins as f64).floor() as usize;
        k = k.min(bins - 1);
        while k > 0 && x < self.edges[k] {
            k -= 1;
        }
        while k + 1 < bins && x >= self.edges[k + 1] {
            k += 1;
        }
        Some(k)
    }

    pub fn record(&mut self, x: f64) {
        self.n_total += 1;
        match self.bin_of(x) {
            Some(k) => self.counts[k] += 1,
            None if x < self.edges[0] => self.underflow += 1,
            None => self.overflow += 1,
        }
    }

    /// Bin-wise sum; edges and metric must match exactly.
    pub fn merge(&mut self, other: &Histogram) -> Result<(), HistogramError> {
        if self.metric != other.metric || self.edges != other.edges {
            return Err(HistogramError::EdgeMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n_total += other.n_total;
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("histogram serialization cannot fail")
    }

    /// `edge_lo,edge_hi,count` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge_lo,edge_hi,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[k], self.edges[k + 1], c));
        }
        out
    }
}

pub fn histogram(
    values: &[f64],
    metric: MetricKind,
    range: (f64, f64),
    bins: usize,
) -> Result<Histogram, HistogramError> {
    let mut h = Histogram::empty(metric, range.0, range.1, bins)?;
    values.iter().for_each(|&x| h.record(x));
    Ok(h)
}

/// Divergence and bias histograms over the fixed metric ranges.
pub fn metric_histograms(metrics: &[PairMetrics], config: HistogramConfig) -> Result<(Histogram, Histogram), HistogramError> {
    let mut div = Histogram::empty(MetricKind::Divergence, DIVERGENCE_RANGE.0, DIVERGENCE_RANGE.1, config.divergence_bins)?;
    let mut bias = Histogram::empty(MetricKind::Bias, BIAS_RANGE.0, BIAS_RANGE.1, config.bias_bins)?;
    for pm in metrics {
        div.record(pm.divergence);
        bias.record(pm.bias);
    }
    Ok((div, bias))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionPoint {
    pub model_id: String,
    pub inversion_rate_pct: f64,
}

/// Models ordered by ascending inversion rate, ties broken by model id.
pub fn inversion_series<'a, I>(summaries: I) -> Vec<InversionPoint>
where
    I: IntoIterator<Item = (&'a str, &'a FinalizedStats)>,
{
    let mut series: Vec<InversionPoint> = summaries
        .into_iter()
        .map(|(model_id, s)| InversionPoint { model_id: model_id.to_string(), inversion_rate_pct: s.inversion_rate_pct })
        .collect();
    series.sort_by(|a, b| {
        a.inversion_rate_pct
            .total_cmp(&b.inversion_rate_pct)
            .then_with(|| a.model_id.cmp(&b.model_id))
    });
    series
}

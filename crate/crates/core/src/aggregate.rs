//! Population-level statistics per stratum and the dialect gap.
//!
//! [`AuditSummary`] is a mergeable accumulator: sums use Neumaier
//! compensation and the spread of the divergences is tracked with Welford's
//! update and the Chan et al. pairwise merge. Sharding a pair set, folding
//! each shard and merging the shards in a fixed order finalizes to the same
//! statistics as a single sequential fold, up to rounding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricConfig;
use crate::records::{DialectGapReport, PairMetrics, Stratum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregateError {
    #[error("empty stratum {0}")]
    EmptyStratum(Stratum),
    #[error("cannot merge summaries: {0}")]
    Mismatch(String),
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.compensation += other.compensation;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Streaming mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.count = n;
    }
}

/// Mergeable population statistics for one stratum of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub model_id: String,
    pub stratum: Stratum,
    pub config: MetricConfig,
    count: u64,
    divergence_sum: CompensatedSum,
    divergence_spread: Welford,
    bias_sum: CompensatedSum,
    robust_count: u64,
    inversion_count: u64,
}

/// Finalized P1-P5 statistics of one stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalizedStats {
    pub n: u64,
    pub mean_divergence: f64,
    /// Sample standard deviation (n - 1 divisor); absent for a single pair.
    pub std_divergence: Option<f64>,
    pub robust_count: u64,
    pub robustness_pct: f64,
    pub inversion_count: u64,
    pub inversion_rate_pct: f64,
    pub mean_bias: f64,
}

impl AuditSummary {
    pub fn new(model_id: impl Into<String>, stratum: Stratum, config: MetricConfig) -> Self {
        Self {
            model_id: model_id.into(),
            stratum,
            config,
            count: 0,
            divergence_sum: CompensatedSum::default(),
            divergence_spread: Welford::default(),
            bias_sum: CompensatedSum::default(),
            robust_count: 0,
            inversion_count: 0,
        }
    }

    pub fn n(&self) -> u64 {
        self.count
    }

    pub fn robust_count(&self) -> u64 {
        self.robust_count
    }

    pub fn inversion_count(&self) -> u64 {
        self.inversion_count
    }

    /// Folds one pair in. The caller is responsible for stratum membership.
    pub fn fold(&mut self, pm: &PairMetrics) {
        debug_assert!(self.stratum.admits(pm.dialect));
        self.count += 1;
        self.divergence_sum.add(pm.divergence);
        self.divergence_spread.push(pm.divergence);
        self.bias_sum.add(pm.bias);
        if pm.divergence < self.config.robust_threshold {
            self.robust_count += 1;
        }
        if pm.inverted {
            self.inversion_count += 1;
        }
    }

    pub fn merge(&mut self, other: &AuditSummary) -> Result<(), AggregateError> {
        if self.model_id != other.model_id {
            return Err(AggregateError::Mismatch(format!("model {} vs {}", self.model_id, other.model_id)));
        }
        if self.stratum != other.stratum {
            return Err(AggregateError::Mismatch(format!("stratum {} vs {}", self.stratum, other.stratum)));
        }
        if self.config != other.config {
            return Err(AggregateError::Mismatch("metric configuration differs".into()));
        }
        self.count += other.count;
        self.divergence_sum.merge(&other.divergence_sum);
        self.divergence_spread.merge(&other.divergence_spread);
        self.bias_sum.merge(&other.bias_sum);
        self.robust_count += other.robust_count;
        self.inversion_count += other.inversion_count;
        Ok(())
    }

    pub fn finalize(&self) -> Result<FinalizedStats, AggregateError> {
        if self.count == 0 {
            return Err(AggregateError::EmptyStratum(self.stratum));
        }
        let n = self.count as f64;
        let std_divergence = (self.count >= 2).then(|| (self.divergence_spread.m2.max(0.0) / (n - 1.0)).sqrt());
        Ok(FinalizedStats {
            n: self.count,
            mean_divergence: self.divergence_sum.value() / n,
            std_divergence,
            robust_count: self.robust_count,
            robustness_pct: self.robust_count as f64 / n * 100.0,
            inversion_count: self.inversion_count,
            inversion_rate_pct: self.inversion_count as f64 / n * 100.0,
            mean_bias: self.bias_sum.value() / n,
        })
    }
}

/// Summaries for the three strata of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedSummary {
    pub all: AuditSummary,
    pub sadhu: AuditSummary,
    pub cholito: AuditSummary,
}

impl StratifiedSummary {
    pub fn new(model_id: &str, config: MetricConfig) -> Self {
        Self {
            all: AuditSummary::new(model_id, Stratum::All, config),
            sadhu: AuditSummary::new(model_id, Stratum::Sadhu, config),
            cholito: AuditSummary::new(model_id, Stratum::Cholito, config),
        }
    }

    pub fn fold(&mut self, pm: &PairMetrics) {
        self.all.fold(pm);
        match Stratum::from(pm.dialect) {
            Stratum::Sadhu => self.sadhu.fold(pm),
            _ => self.cholito.fold(pm),
        }
    }

    pub fn merge(&mut self, other: &StratifiedSummary) -> Result<(), AggregateError> {
        self.all.merge(&other.all)?;
        self.sadhu.merge(&other.sadhu)?;
        self.cholito.merge(&other.cholito)
    }

    /// Finalized strata; an empty stratum comes back as `None`.
    pub fn finalize(&self) -> FinalizedStrata {
        FinalizedStrata {
            all: self.all.finalize().ok(),
            sadhu: self.sadhu.finalize().ok(),
            cholito: self.cholito.finalize().ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalizedStrata {
    pub all: Option<FinalizedStats>,
    pub sadhu: Option<FinalizedStats>,
    pub cholito: Option<FinalizedStats>,
}

/// Pairs per shard. Fixed so that the reduction tree, and therefore every
/// rounding step, is the same for any worker count.
pub const SHARD_SIZE: usize = 1024;

/// Folds `metrics` shard by shard on up to `workers` threads and merges the
/// shard summaries in shard order.
pub fn summarize(model_id: &str, metrics: &[PairMetrics], config: MetricConfig, workers: usize) -> StratifiedSummary {
    let fold_shard = |shard: &[PairMetrics]| {
        let mut s = StratifiedSummary::new(model_id, config);
        shard.iter().for_each(|pm| s.fold(pm));
        s
    };
    let shards: Vec<&[PairMetrics]> = metrics.chunks(SHARD_SIZE).collect();
    let workers = workers.max(1).min(shards.len().max(1));

    let partials: Vec<StratifiedSummary> = if workers == 1 {
        shards.iter().map(|s| fold_shard(s)).collect()
    } else {
        let per_worker = shards.len().div_ceil(workers);
        std::thread::scope(|scope| {
            let handles: Vec<_> = shards
                .chunks(per_worker)
                .map(|group| scope.spawn(move || group.iter().map(|s| fold_shard(s)).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
        })
    };

    let mut total = StratifiedSummary::new(model_id, config);
    for p in &partials {
        total.merge(p).expect("shards share model and config");
    }
    total
}

/// `mu_D(sadhu) - mu_D(cholito)` and its size relative to the colloquial mean.
pub fn dialect_gap(model_id: &str, sadhu: &FinalizedStats, cholito: &FinalizedStats) -> DialectGapReport {
    let gap = sadhu.mean_divergence - cholito.mean_divergence;
    let gap_pct = (cholito.mean_divergence > 0.0).then(|| gap / cholito.mean_divergence * 100.0);
    DialectGapReport {
        model_id: model_id.to_string(),
        sadhu_mean_divergence: sadhu.mean_divergence,
        cholito_mean_divergence: cholito.mean_divergence,
        gap,
        gap_pct,
    }
}

//! Sentence-level alignment metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{PairMetrics, PairedObservation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("tau must satisfy 0 <= tau < 1, got {0}")]
    Tau(f64),
    #[error("robust threshold must satisfy 0 < threshold <= 2, got {0}")]
    RobustThreshold(f64),
}

/// Thresholds for inversion detection and the robustness index.
///
/// The two share a default of 0.1 but are independent settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub tau: f64,
    pub robust_threshold: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { tau: 0.1, robust_threshold: 0.1 }
    }
}

impl MetricConfig {
    pub fn new(tau: f64, robust_threshold: f64) -> Result<Self, ConfigError> {
        if !(0.0..1.0).contains(&tau) {
            return Err(ConfigError::Tau(tau));
        }
        if !(robust_threshold > 0.0 && robust_threshold <= 2.0) {
            return Err(ConfigError::RobustThreshold(robust_threshold));
        }
        Ok(Self { tau, robust_threshold })
    }
}

/// `|S_B - S_E|`, in [0, 2].
pub fn divergence(obs: &PairedObservation) -> f64 {
    (obs.s_bengali - obs.s_english).abs()
}

/// `S_E - S_B`; positive when the English side reads more positive.
pub fn directional_bias(obs: &PairedObservation) -> f64 {
    obs.s_english - obs.s_bengali
}

/// Opposite signs with both magnitudes strictly above `tau`.
pub fn is_inversion(obs: &PairedObservation, tau: f64) -> bool {
    let (b, e) = (obs.s_bengali, obs.s_english);
    (b > tau && e < -tau) || (b < -tau && e > tau)
}

pub fn compute_pair_metrics(obs: &PairedObservation, config: &MetricConfig) -> PairMetrics {
    PairMetrics {
        pair_id: obs.pair_id.clone(),
        dialect: obs.dialect,
        divergence: divergence(obs),
        bias: directional_bias(obs),
        inverted: is_inversion(obs, config.tau),
    }
}

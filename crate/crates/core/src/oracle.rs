//! Brute-force reference for every metric, and a synthetic corpus generator
//! with planted ground truth.
//!
//! Nothing here calls into `metrics`, `aggregate` or `distributions`: the
//! reference re-derives each quantity with direct loops and the two-pass
//! mean/variance so that a bug has to be written twice to go unnoticed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::FinalizedStats;
use crate::records::{Dialect, Lang, PairedObservation, PredictionRecord};

/// Reference statistics for each stratum; `None` for an empty stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleAudit {
    pub all: Option<FinalizedStats>,
    pub sadhu: Option<FinalizedStats>,
    pub cholito: Option<FinalizedStats>,
}

fn oracle_stats(pairs: &[&PairedObservation], tau: f64, robust_threshold: f64) -> Option<FinalizedStats> {
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len();
    let mut d = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut robust = 0u64;
    let mut inverted = 0u64;
    for p in pairs {
        let (sb, se) = (p.s_bengali, p.s_english);
        let di = if sb >= se { sb - se } else { se - sb };
        d.push(di);
        b.push(se - sb);
        if di < robust_threshold {
            robust += 1;
        }
        let flipped = if sb > tau {
            se < -tau
        } else if sb < -tau {
            se > tau
        } else {
            false
        };
        if flipped {
            inverted += 1;
        }
    }

    let mut sum_d = 0.0;
    for x in &d {
        sum_d += x;
    }
    let mean_d = sum_d / n as f64;
    let std = if n >= 2 {
        let mut ss = 0.0;
        for x in &d {
            ss += (x - mean_d) * (x - mean_d);
        }
        Some((ss / (n - 1) as f64).sqrt())
    } else {
        None
    };
    let mut sum_b = 0.0;
    for x in &b {
        sum_b += x;
    }
    Some(FinalizedStats {
        n: n as u64,
        mean_divergence: mean_d,
        std_divergence: std,
        robust_count: robust,
        robustness_pct: robust as f64 * 100.0 / n as f64,
        inversion_count: inverted,
        inversion_rate_pct: inverted as f64 * 100.0 / n as f64,
        mean_bias: sum_b / n as f64,
    })
}

pub fn oracle_audit(pairs: &[PairedObservation], tau: f64, robust_threshold: f64) -> OracleAudit {
    let all: Vec<&PairedObservation> = pairs.iter().collect();
    let sadhu: Vec<&PairedObservation> = pairs.iter().filter(|p| p.dialect == Dialect::Sadhu).collect();
    let cholito: Vec<&PairedObservation> = pairs.iter().filter(|p| p.dialect == Dialect::Cholito).collect();
    OracleAudit {
        all: oracle_stats(&all, tau, robust_threshold),
        sadhu: oracle_stats(&sadhu, tau, robust_threshold),
        cholito: oracle_stats(&cholito, tau, robust_threshold),
    }
}

/// Bin counts by scanning the edges `lo + (hi - lo) / bins * k`; the last
/// bin is closed.
pub fn oracle_histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<u64> {
    let width = (hi - lo) / bins as f64;
    let edge = |k: usize| if k == bins { hi } else { lo + width * k as f64 };
    let mut counts = vec![0u64; bins];
    for &x in values {
        for k in 0..bins {
            let inside = if k + 1 == bins {
                x >= edge(k) && x <= edge(k + 1)
            } else {
                x >= edge(k) && x < edge(k + 1)
            };
            if inside {
                counts[k] += 1;
                break;
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("infeasible plant: {0}")]
    Infeasible(String),
}

/// What to plant in a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub pairs: usize,
    pub inversions: usize,
    pub robust_pairs: usize,
    pub sadhu_fraction: f64,
    pub mean_bias_target: f64,
    pub tau: f64,
    pub robust_threshold: f64,
    pub model_id: String,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            pairs: 100,
            inversions: 0,
            robust_pairs: 0,
            sadhu_fraction: 0.5,
            mean_bias_target: 0.0,
            tau: 0.1,
            robust_threshold: 0.1,
            model_id: "synthetic".into(),
        }
    }
}

impl SynthParams {
    /// Number of sadhu pairs the corpus will contain.
    pub fn sadhu_count(&self) -> usize {
        (self.sadhu_fraction * self.pairs as f64).round() as usize
    }
}

/// Margin kept between planted scores and every threshold.
const MARGIN: f64 = 0.05;

enum Kind {
    Inversion,
    Robust,
    Plain,
}

/// Prediction records (3-class labels) whose audit recovers exactly the
/// planted inversion count, robust count and sadhu share.
///
/// Inversions are `(+a, -b)` pairs with `a, b` drawn from `(tau + 0.05, 1]`;
/// robust pairs share a sign and differ by less than the robust threshold;
/// the rest pair a neutral Bengali prediction with an English score whose
/// magnitude clears the robust threshold. Signs are chosen greedily to steer
/// the mean directional bias towards the target.
pub fn synth_corpus(params: &SynthParams, seed: u64) -> Result<Vec<PredictionRecord>, SynthError> {
    let n = params.pairs;
    let k = params.inversions;
    let m = params.robust_pairs;
    let (tau, rt) = (params.tau, params.robust_threshold);
    if k + m > n {
        return Err(SynthError::Infeasible(format!("{k} inversions + {m} robust pairs exceed {n} pairs")));
    }
    if !(0.0..=1.0).contains(&params.sadhu_fraction) {
        return Err(SynthError::Infeasible(format!("sadhu fraction {} not in [0, 1]", params.sadhu_fraction)));
    }
    if !(0.0..1.0).contains(&tau) || !(rt > 0.0 && rt <= 2.0) {
        return Err(SynthError::Infeasible(format!("thresholds tau={tau}, robust={rt} out of range")));
    }
    // each inverted side must clear tau, and their sum must clear the robust threshold
    let inv_lo = (tau + MARGIN).max(rt / 2.0 + MARGIN);
    if k > 0 && inv_lo >= 1.0 {
        return Err(SynthError::Infeasible(format!("no inversion can clear tau={tau} with margin")));
    }
    let plain_lo = rt + MARGIN;
    if n - k - m > 0 && plain_lo >= 1.0 {
        return Err(SynthError::Infeasible(format!("robust threshold {rt} leaves no room for non-robust pairs")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kinds: Vec<Kind> = (0..n)
        .map(|i| if i < k { Kind::Inversion } else if i < k + m { Kind::Robust } else { Kind::Plain })
        .collect();
    kinds.shuffle(&mut rng);
    let mut dialects: Vec<Dialect> =
        (0..n).map(|i| if i < params.sadhu_count() { Dialect::Sadhu } else { Dialect::Cholito }).collect();
    dialects.shuffle(&mut rng);

    let width = n.max(1).to_string().len().max(6);
    let mut bias_sum = 0.0;
    let mut records = Vec::with_capacity(2 * n);
    for (i, (kind, dialect)) in kinds.iter().zip(&dialects).enumerate() {
        // +1 pushes the English side up, which raises the bias
        let want_up = bias_sum <= params.mean_bias_target * (i + 1) as f64;
        let dir = if want_up { 1.0 } else { -1.0 };
        let (s_bn, s_en) = match kind {
            Kind::Inversion => {
                let a = rng.gen_range(inv_lo..=1.0);
                let b = rng.gen_range(inv_lo..=1.0);
                (-dir * a, dir * b)
            }
            Kind::Robust => {
                let delta = rng.gen_range(0.0..(rt * 0.9).min(0.7));
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                // keep both sides on the same sign and inside [-1, 1]
                let base = rng.gen_range(0.2..=1.0 - delta) * sign;
                let moved = base + dir * delta;
                if moved.abs() > 1.0 || moved.signum() != base.signum() {
                    (base, base - dir * delta)
                } else {
                    (base, moved)
                }
            }
            Kind::Plain => (0.0, dir * rng.gen_range(plain_lo..=1.0)),
        };
        bias_sum += s_en - s_bn;

        let pair_id = format!("p{:0width$}", i, width = width);
        for (lang, s) in [(Lang::Bn, s_bn), (Lang::En, s_en)] {
            let (label, score) = if s > 0.0 {
                ("positive", s)
            } else if s < 0.0 {
                ("negative", -s)
            } else {
                ("neutral", rng.gen_range(0.5..=1.0))
            };
            records.push(PredictionRecord {
                pair_id: pair_id.clone(),
                lang,
                dialect: *dialect,
                model_id: params.model_id.clone(),
                label: label.to_string(),
                score,
                text: None,
            });
        }
    }
    Ok(records)
}

/// Records as JSONL, one per line with a trailing newline.
pub fn to_jsonl(records: &[PredictionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_jsonl());
        out.push('\n');
    }
    out
}

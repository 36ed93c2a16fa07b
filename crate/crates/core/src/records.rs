//! Domain data model shared by every stage of the audit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Language stream a prediction belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    Bn,
    En,
}

impl Lang {
    pub fn as_str(self) -> &'static str {
        match self {
            Lang::Bn => "bn",
            Lang::En => "en",
        }
    }
}

impl FromStr for Lang {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bn" => Ok(Lang::Bn),
            "en" => Ok(Lang::En),
            other => Err(RecordError::UnknownLang(other.to_string())),
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Written register of the Bengali side of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    /// Formal/literary register.
    Sadhu,
    /// Colloquial/standard register.
    Cholito,
}

impl Dialect {
    pub fn as_str(self) -> &'static str {
        match self {
            Dialect::Sadhu => "sadhu",
            Dialect::Cholito => "cholito",
        }
    }
}

impl FromStr for Dialect {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sadhu" => Ok(Dialect::Sadhu),
            "cholito" => Ok(Dialect::Cholito),
            other => Err(RecordError::UnknownDialect(other.to_string())),
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Population slice a summary aggregates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stratum {
    All,
    Sadhu,
    Cholito,
}

impl Stratum {
    /// Whether a pair of the given dialect belongs to this stratum.
    pub fn admits(self, dialect: Dialect) -> bool {
        match self {
            Stratum::All => true,
            Stratum::Sadhu => dialect == Dialect::Sadhu,
            Stratum::Cholito => dialect == Dialect::Cholito,
        }
    }
}

impl From<Dialect> for Stratum {
    fn from(d: Dialect) -> Self {
        match d {
            Dialect::Sadhu => Stratum::Sadhu,
            Dialect::Cholito => Stratum::Cholito,
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stratum::All => "all",
            Stratum::Sadhu => "sadhu",
            Stratum::Cholito => "cholito",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    /// Any invariant violation is a hard error.
    #[default]
    Strict,
    /// Out-of-range scores are clamped; malformed lines are skipped and counted.
    Lenient,
}

impl FromStr for ValidationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(ValidationMode::Strict),
            "lenient" => Ok(ValidationMode::Lenient),
            other => Err(format!("unknown validation mode {other:?} (expected strict|lenient)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("score out of range: {0} is not in [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("score is not a finite number")]
    NonFiniteScore,
    #[error("unknown lang token {0:?} (expected bn|en)")]
    UnknownLang(String),
    #[error("unknown dialect token {0:?} (expected sadhu|cholito)")]
    UnknownDialect(String),
    #[error("empty pair_id")]
    EmptyPairId,
    #[error("empty model id")]
    EmptyModel,
    #[error("normalized score {0} outside [-1, 1]")]
    NormalizedOutOfRange(f64),
}

/// Record fields exactly as they appear on the wire, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub pair_id: String,
    pub lang: String,
    pub dialect: String,
    pub model: String,
    pub label: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// One classifier output for one sentence in one language stream.
///
/// The label is kept verbatim; mapping it onto the signed scale is the
/// normalizer's job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub pair_id: String,
    pub lang: Lang,
    pub dialect: Dialect,
    #[serde(rename = "model")]
    pub model_id: String,
    pub label: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl PredictionRecord {
    /// One JSONL line in the ingest wire format (no trailing newline).
    pub fn to_jsonl(&self) -> String {
        serde_json::to_string(self).expect("record serialization cannot fail")
    }
}

/// Non-fatal note produced while validating a record.
#[derive(Debug, Clone, PartialEq)]
pub enum RecordWarning {
    ScoreClamped { original: f64, clamped: f64 },
}

impl fmt::Display for RecordWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordWarning::ScoreClamped { original, clamped } => {
                write!(f, "score {original} clamped to {clamped}")
            }
        }
    }
}

/// Checks every record invariant and produces a typed record.
pub fn validate_record(
    raw: RawRecord,
    mode: ValidationMode,
) -> Result<(PredictionRecord, Option<RecordWarning>), RecordError> {
    if raw.pair_id.trim().is_empty() {
        return Err(RecordError::EmptyPairId);
    }
    if raw.model.trim().is_empty() {
        return Err(RecordError::EmptyModel);
    }
    let lang: Lang = raw.lang.parse()?;
    let dialect: Dialect = raw.dialect.parse()?;
    if !raw.score.is_finite() {
        return Err(RecordError::NonFiniteScore);
    }

    let mut warning = None;
    let mut score = raw.score;
    if !(0.0..=1.0).contains(&score) {
        match mode {
            ValidationMode::Strict => return Err(RecordError::ScoreOutOfRange(score)),
            ValidationMode::Lenient => {
                let clamped = score.clamp(0.0, 1.0);
                log::warn!("pair {}: score {} clamped to {}", raw.pair_id, score, clamped);
                warning = Some(RecordWarning::ScoreClamped { original: score, clamped });
                score = clamped;
            }
        }
    }

    Ok((
        PredictionRecord {
            pair_id: raw.pair_id,
            lang,
            dialect,
            model_id: raw.model,
            label: raw.label,
            score,
            text: raw.text,
        },
        warning,
    ))
}

/// Joined Bengali/English observation on the common signed scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedObservation {
    pub pair_id: String,
    pub dialect: Dialect,
    pub s_bengali: f64,
    pub s_english: f64,
}

impl PairedObservation {
    pub fn new(
        pair_id: impl Into<String>,
        dialect: Dialect,
        s_bengali: f64,
        s_english: f64,
    ) -> Result<Self, RecordError> {
        for s in [s_bengali, s_english] {
            if !(-1.0..=1.0).contains(&s) {
                return Err(RecordError::NormalizedOutOfRange(s));
            }
        }
        Ok(Self { pair_id: pair_id.into(), dialect, s_bengali, s_english })
    }

    /// The same pair with the two language streams exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            pair_id: self.pair_id.clone(),
            dialect: self.dialect,
            s_bengali: self.s_english,
            s_english: self.s_bengali,
        }
    }
}

/// Sentence-level alignment metrics for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub pair_id: String,
    pub dialect: Dialect,
    pub divergence: f64,
    pub bias: f64,
    pub inverted: bool,
}

/// Mean-divergence difference between the formal and colloquial strata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialectGapReport {
    pub model_id: String,
    pub sadhu_mean_divergence: f64,
    pub cholito_mean_divergence: f64,
    pub gap: f64,
    /// Absent when the colloquial mean is zero.
    pub gap_pct: Option<f64>,
}

/// Anything that carries a dialect tag and can be stratified.
pub trait Dialected {
    fn dialect(&self) -> Dialect;
}

impl Dialected for PairedObservation {
    fn dialect(&self) -> Dialect {
        self.dialect
    }
}

impl Dialected for PairMetrics {
    fn dialect(&self) -> Dialect {
        self.dialect
    }
}

impl Dialected for (PredictionRecord, PredictionRecord) {
    fn dialect(&self) -> Dialect {
        self.0.dialect
    }
}

//! Universal score normalizer: maps a `(label, confidence)` prediction onto
//! the signed sentiment scale [-1, 1].
//!
//! Label vocabularies are data. A [`LabelScheme`] lists the canonical classes
//! of one classifier family, their aliases and a signed multiplier; the
//! normalized score is `multiplier(label) * confidence`. Three schemes ship
//! as defaults (2-, 3- and 5-class), loaded from the JSON files under
//! `schemes/`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::PredictionRecord;

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("label {label:?} does not resolve in scheme {scheme:?}")]
    UnknownLabel { label: String, scheme: String },
    #[error("invalid scheme {scheme:?}: {reason}")]
    InvalidScheme { scheme: String, reason: String },
    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),
    #[error("no scheme bound for model {0:?}")]
    UnboundModel(String),
    #[error("cannot read scheme file {path}: {reason}")]
    Load { path: String, reason: String },
}

/// Signed class weight. Only the five values the scale admits are representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Multiplier {
    MinusOne,
    MinusHalf,
    Zero,
    PlusHalf,
    PlusOne,
}

impl Multiplier {
    pub fn value(self) -> f64 {
        match self {
            Multiplier::MinusOne => -1.0,
            Multiplier::MinusHalf => -0.5,
            Multiplier::Zero => 0.0,
            Multiplier::PlusHalf => 0.5,
            Multiplier::PlusOne => 1.0,
        }
    }

    pub fn negated(self) -> Self {
        match self {
            Multiplier::MinusOne => Multiplier::PlusOne,
            Multiplier::MinusHalf => Multiplier::PlusHalf,
            Multiplier::Zero => Multiplier::Zero,
            Multiplier::PlusHalf => Multiplier::MinusHalf,
            Multiplier::PlusOne => Multiplier::MinusOne,
        }
    }
}

impl TryFrom<f64> for Multiplier {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        match v {
            x if x == -1.0 => Ok(Multiplier::MinusOne),
            x if x == -0.5 => Ok(Multiplier::MinusHalf),
            x if x == 0.0 => Ok(Multiplier::Zero),
            x if x == 0.5 => Ok(Multiplier::PlusHalf),
            x if x == 1.0 => Ok(Multiplier::PlusOne),
            other => Err(format!("multiplier {other} not in {{-1, -0.5, 0, 0.5, 1}}")),
        }
    }
}

impl Serialize for Multiplier {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Multiplier::MinusOne => s.serialize_i64(-1),
            Multiplier::Zero => s.serialize_i64(0),
            Multiplier::PlusOne => s.serialize_i64(1),
            Multiplier::MinusHalf | Multiplier::PlusHalf => s.serialize_f64(self.value()),
        }
    }
}

impl<'de> Deserialize<'de> for Multiplier {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Multiplier::try_from(v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.value())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelClass {
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub multiplier: Multiplier,
}

#[derive(Serialize, Deserialize)]
struct SchemeFile {
    scheme_id: String,
    classes: Vec<LabelClass>,
}

/// Declarative mapping from raw label strings to signed multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelScheme {
    scheme_id: String,
    classes: Vec<LabelClass>,
    index: HashMap<String, usize>,
}

/// Canonical form used for alias matching: trimmed, lowercased, with
/// underscores treated as spaces and whitespace runs collapsed.
pub fn canonical_label(label: &str) -> String {
    label
        .to_lowercase()
        .replace('_', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

impl LabelScheme {
    pub fn new(scheme_id: impl Into<String>, classes: Vec<LabelClass>) -> Result<Self, NormalizeError> {
        let scheme_id = scheme_id.into();
        let invalid = |reason: String| NormalizeError::InvalidScheme { scheme: scheme_id.clone(), reason };

        if !classes.iter().any(|c| c.multiplier.value() > 0.0) {
            return Err(invalid("no class with a positive multiplier".into()));
        }
        if !classes.iter().any(|c| c.multiplier.value() < 0.0) {
            return Err(invalid("no class with a negative multiplier".into()));
        }

        let mut index = HashMap::new();
        for (i, class) in classes.iter().enumerate() {
            for alias in std::iter::once(&class.name).chain(&class.aliases) {
                let key = canonical_label(alias);
                if key.is_empty() {
                    return Err(invalid(format!("class {:?} has an empty alias", class.name)));
                }
                match index.insert(key.clone(), i) {
                    Some(prev) if prev != i => {
                        return Err(invalid(format!(
                            "alias {key:?} maps to both {:?} and {:?}",
                            classes[prev].name, class.name
                        )));
                    }
                    _ => {}
                }
            }
        }
        Ok(Self { scheme_id, classes, index })
    }

    pub fn from_json(json: &str) -> Result<Self, NormalizeError> {
        let file: SchemeFile = serde_json::from_str(json).map_err(|e| NormalizeError::InvalidScheme {
            scheme: "<json>".into(),
            reason: e.to_string(),
        })?;
        Self::new(file.scheme_id, file.classes)
    }

    pub fn load(path: &Path) -> Result<Self, NormalizeError> {
        let text = std::fs::read_to_string(path).map_err(|e| NormalizeError::Load {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = SchemeFile { scheme_id: self.scheme_id.clone(), classes: self.classes.clone() };
        serde_json::to_string_pretty(&file).expect("scheme serialization cannot fail")
    }

    pub fn scheme_id(&self) -> &str {
        &self.scheme_id
    }

    pub fn classes(&self) -> &[LabelClass] {
        &self.classes
    }

    pub fn resolve(&self, label: &str) -> Option<&LabelClass> {
        self.index.get(&canonical_label(label)).map(|&i| &self.classes[i])
    }

    /// `multiplier(label) * score`. A zero multiplier yields exactly `0.0`.
    pub fn normalize_label(&self, label: &str, score: f64) -> Result<f64, NormalizeError> {
        let class = self.resolve(label).ok_or_else(|| NormalizeError::UnknownLabel {
            label: label.to_string(),
            scheme: self.scheme_id.clone(),
        })?;
        Ok(match class.multiplier {
            Multiplier::Zero => 0.0,
            m => m.value() * score,
        })
    }
}

/// Normalized score of a validated prediction.
pub fn normalize(record: &PredictionRecord, scheme: &LabelScheme) -> Result<f64, NormalizeError> {
    scheme.normalize_label(&record.label, record.score)
}

/// Schemes by id, plus optional model -> scheme bindings.
#[derive(Debug, Clone, Default)]
pub struct SchemeRegistry {
    schemes: BTreeMap<String, LabelScheme>,
    bindings: BTreeMap<String, String>,
}

const BUILTIN_SCHEME_FILES: [&str; 3] = [
    include_str!("../schemes/2class.json"),
    include_str!("../schemes/3class.json"),
    include_str!("../schemes/5class.json"),
];

/// Registry holding the shipped 2-, 3- and 5-class schemes.
pub fn builtin_schemes() -> SchemeRegistry {
    let mut reg = SchemeRegistry::default();
    for json in BUILTIN_SCHEME_FILES {
        reg.insert(LabelScheme::from_json(json).expect("builtin scheme files are valid"));
    }
    reg
}

impl SchemeRegistry {
    /// Adds or replaces a scheme under its own id.
    pub fn insert(&mut self, scheme: LabelScheme) {
        self.schemes.insert(scheme.scheme_id.clone(), scheme);
    }

    pub fn lookup(&self, scheme_id: &str) -> Option<&LabelScheme> {
        self.schemes.get(scheme_id)
    }

    pub fn scheme_ids(&self) -> impl Iterator<Item = &str> {
        self.schemes.keys().map(String::as_str)
    }

    pub fn bind_model(&mut self, model_id: impl Into<String>, scheme_id: &str) -> Result<(), NormalizeError> {
        if !self.schemes.contains_key(scheme_id) {
            return Err(NormalizeError::UnknownScheme(scheme_id.to_string()));
        }
        self.bindings.insert(model_id.into(), scheme_id.to_string());
        Ok(())
    }

    /// Resolves a builtin id, or failing that a path to a scheme file which
    /// is then registered. Returns the scheme id.
    pub fn resolve_spec(&mut self, spec: &str) -> Result<String, NormalizeError> {
        if self.schemes.contains_key(spec) {
            return Ok(spec.to_string());
        }
        let path = Path::new(spec);
        if path.exists() {
            let scheme = LabelScheme::load(path)?;
            let id = scheme.scheme_id.clone();
            self.insert(scheme);
            return Ok(id);
        }
        Err(NormalizeError::UnknownScheme(spec.to_string()))
    }

    /// Loads a `{model_id: scheme id or scheme file path}` JSON map and binds
    /// every entry. Relative file paths resolve against the map's directory.
    pub fn load_scheme_map(&mut self, path: &Path) -> Result<(), NormalizeError> {
        let load_err = |reason: String| NormalizeError::Load { path: path.display().to_string(), reason };
        let text = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        let map: BTreeMap<String, String> = serde_json::from_str(&text).map_err(|e| load_err(e.to_string()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for (model, spec) in map {
            let id = if self.schemes.contains_key(&spec) {
                spec
            } else {
                self.resolve_spec(&base.join(&spec).display().to_string())?
            };
            self.bind_model(model, &id)?;
        }
        Ok(())
    }

    /// Scheme for a model: its explicit binding, else `default`.
    pub fn for_model(&self, model_id: &str, default: Option<&str>) -> Result<&LabelScheme, NormalizeError> {
        let id = self
            .bindings
            .get(model_id)
            .map(String::as_str)
            .or(default)
            .ok_or_else(|| NormalizeError::UnboundModel(model_id.to_string()))?;
        self.lookup(id).ok_or_else(|| NormalizeError::UnknownScheme(id.to_string()))
    }
}

//! Prediction file parsing, Bengali/English stream pairing and dialect
//! stratification.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{
    validate_record, Dialect, Dialected, Lang, PredictionRecord, RawRecord, RecordWarning,
    ValidationMode,
};

/// Column order of the CSV interchange format. The header row is required.
pub const CSV_HEADER: [&str; 7] = ["pair_id", "lang", "dialect", "model", "label", "score", "text"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl InputFormat {
    /// `.csv` files are CSV, everything else is treated as JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(format!("unknown input format {other:?} (expected jsonl|csv)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("bad CSV header: expected {expected:?}, found {found:?}")]
    CsvHeader { expected: Vec<String>, found: Vec<String> },
    #[error("duplicate record for pair {pair_id:?} lang {lang}")]
    Duplicate { pair_id: String, lang: Lang },
    #[error("records from more than one model in a single pairing: {0:?} and {1:?}")]
    MixedModels(String, String),
}

/// A line that was skipped in lenient mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

/// Result of loading one prediction file.
#[derive(Debug, Clone, Default)]
pub struct LoadOutcome {
    /// Validated records in file order.
    pub records: Vec<PredictionRecord>,
    /// 1-based source line of each entry in `records`.
    pub lines: Vec<usize>,
    pub rejections: Vec<Rejection>,
    pub warnings: Vec<(usize, RecordWarning)>,
}

impl LoadOutcome {
    pub fn iter_with_lines(&self) -> impl Iterator<Item = (usize, &PredictionRecord)> {
        self.lines.iter().copied().zip(self.records.iter())
    }

    fn accept(&mut self, line: usize, raw: RawRecord, mode: ValidationMode) -> Result<(), IngestError> {
        match validate_record(raw, mode) {
            Ok((rec, warn)) => {
                if let Some(w) = warn {
                    self.warnings.push((line, w));
                }
                self.records.push(rec);
                self.lines.push(line);
                Ok(())
            }
            Err(e) => self.reject(line, e.to_string(), mode),
        }
    }

    fn reject(&mut self, line: usize, reason: String, mode: ValidationMode) -> Result<(), IngestError> {
        match mode {
            ValidationMode::Strict => Err(IngestError::Malformed { line, reason }),
            ValidationMode::Lenient => {
                log::warn!("line {line}: skipped: {reason}");
                self.rejections.push(Rejection { line, reason });
                Ok(())
            }
        }
    }
}

pub fn load_predictions(
    path: &Path,
    format: InputFormat,
    mode: ValidationMode,
) -> Result<LoadOutcome, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_predictions(file, format, mode).map_err(|e| match e {
        IngestError::Io { source, .. } => IngestError::Io { path: path.display().to_string(), source },
        other => other,
    })
}

/// Parses predictions from any reader. Blank JSONL lines are ignored.
pub fn parse_predictions<R: Read>(
    reader: R,
    format: InputFormat,
    mode: ValidationMode,
) -> Result<LoadOutcome, IngestError> {
    match format {
        InputFormat::Jsonl => parse_jsonl(reader, mode),
        InputFormat::Csv => parse_csv(reader, mode),
    }
}

fn parse_jsonl<R: Read>(reader: R, mode: ValidationMode) -> Result<LoadOutcome, IngestError> {
    let mut out = LoadOutcome::default();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| IngestError::Io { path: "<input>".into(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawRecord>(&line) {
            Ok(raw) => out.accept(line_no, raw, mode)?,
            Err(e) => out.reject(line_no, format!("malformed JSON record: {e}"), mode)?,
        }
    }
    Ok(out)
}

fn parse_csv<R: Read>(reader: R, mode: ValidationMode) -> Result<LoadOutcome, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| IngestError::Malformed { line: 1, reason: e.to_string() })?
        .clone();
    let found: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    if found != CSV_HEADER {
        return Err(IngestError::CsvHeader {
            expected: CSV_HEADER.iter().map(|s| s.to_string()).collect(),
            found,
        });
    }

    let mut out = LoadOutcome::default();
    let mut record = csv::StringRecord::new();
    loop {
        let line_no = rdr.position().line() as usize;
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line_no = record.position().map(|p| p.line() as usize).unwrap_or(line_no);
                match raw_from_csv(&record) {
                    Ok(raw) => out.accept(line_no, raw, mode)?,
                    Err(reason) => out.reject(line_no, reason, mode)?,
                }
            }
            Err(e) => {
                let line_no = e.position().map(|p| p.line() as usize).unwrap_or(line_no);
                out.reject(line_no, format!("malformed CSV row: {e}"), mode)?;
                if !matches!(e.kind(), csv::ErrorKind::Utf8 { .. } | csv::ErrorKind::UnequalLengths { .. }) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

fn raw_from_csv(row: &csv::StringRecord) -> Result<RawRecord, String> {
    if row.len() != CSV_HEADER.len() {
        return Err(format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()));
    }
    let score: f64 = row[5]
        .trim()
        .parse()
        .map_err(|_| format!("score {:?} is not a number", &row[5]))?;
    Ok(RawRecord {
        pair_id: row[0].to_string(),
        lang: row[1].trim().to_string(),
        dialect: row[2].trim().to_string(),
        model: row[3].to_string(),
        label: row[4].to_string(),
        score,
        text: if row[6].is_empty() { None } else { Some(row[6].to_string()) },
    })
}

/// Writes records in the CSV interchange format, header included.
pub fn write_csv<W: std::io::Write>(records: &[PredictionRecord], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let score = r.score.to_string();
        w.write_record([
            r.pair_id.as_str(),
            r.lang.as_str(),
            r.dialect.as_str(),
            r.model_id.as_str(),
            r.label.as_str(),
            score.as_str(),
            r.text.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Bookkeeping for the join of the two language streams.
///
/// `paired_count * 2 + orphaned_bn + orphaned_en + duplicates_rejected
/// + 2 * dialect_conflicts == total_records` always holds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingReport {
    pub total_records: usize,
    pub paired_count: usize,
    pub orphaned_bn: usize,
    pub orphaned_en: usize,
    pub dialect_conflicts: usize,
    pub duplicates_rejected: usize,
}

impl PairingReport {
    pub fn is_clean(&self) -> bool {
        self.orphaned_bn == 0
            && self.orphaned_en == 0
            && self.dialect_conflicts == 0
            && self.duplicates_rejected == 0
    }

    pub fn absorb(&mut self, other: &PairingReport) {
        self.total_records += other.total_records;
        self.paired_count += other.paired_count;
        self.orphaned_bn += other.orphaned_bn;
        self.orphaned_en += other.orphaned_en;
        self.dialect_conflicts += other.dialect_conflicts;
        self.duplicates_rejected += other.duplicates_rejected;
    }
}

/// Output of [`pair_streams`].
#[derive(Debug, Clone, Default)]
pub struct Pairing {
    /// `(bengali, english)` records in ascending `pair_id` order.
    pub pairs: Vec<(PredictionRecord, PredictionRecord)>,
    pub report: PairingReport,
    /// Pair ids dropped because the two streams disagree on dialect, sorted.
    pub conflict_ids: Vec<String>,
    /// Pair ids that appeared more than once for one language, sorted.
    pub duplicate_ids: Vec<String>,
}

#[derive(Default)]
struct Slot {
    bn: Vec<PredictionRecord>,
    en: Vec<PredictionRecord>,
}

/// Joins the two language streams on `pair_id`.
///
/// Orphans are dropped and counted. Duplicated `(pair_id, lang)` keys are an
/// error in strict mode; in lenient mode every copy of the duplicated key is
/// rejected so the result does not depend on input order.
pub fn pair_streams(records: Vec<PredictionRecord>, mode: ValidationMode) -> Result<Pairing, IngestError> {
    let mut report = PairingReport { total_records: records.len(), ..Default::default() };

    let mut model: Option<String> = None;
    let mut slots: BTreeMap<String, Slot> = BTreeMap::new();
    for rec in records {
        match &model {
            None => model = Some(rec.model_id.clone()),
            Some(m) if *m != rec.model_id => {
                return Err(IngestError::MixedModels(m.clone(), rec.model_id));
            }
            _ => {}
        }
        let slot = slots.entry(rec.pair_id.clone()).or_default();
        match rec.lang {
            Lang::Bn => slot.bn.push(rec),
            Lang::En => slot.en.push(rec),
        }
    }

    let mut pairing = Pairing::default();
    for (pair_id, mut slot) in slots {
        let mut duplicated = false;
        for (lang, recs) in [(Lang::Bn, &mut slot.bn), (Lang::En, &mut slot.en)] {
            if recs.len() > 1 {
                if mode == ValidationMode::Strict {
                    return Err(IngestError::Duplicate { pair_id, lang });
                }
                report.duplicates_rejected += recs.len();
                recs.clear();
                duplicated = true;
            }
        }
        if duplicated {
            log::warn!("pair {pair_id}: duplicate records rejected");
            pairing.duplicate_ids.push(pair_id.clone());
        }
        match (slot.bn.pop(), slot.en.pop()) {
            (Some(bn), Some(en)) => {
                if bn.dialect != en.dialect {
                    log::warn!("pair {pair_id}: dialect conflict ({} vs {})", bn.dialect, en.dialect);
                    report.dialect_conflicts += 1;
                    pairing.conflict_ids.push(pair_id);
                } else {
                    report.paired_count += 1;
                    pairing.pairs.push((bn, en));
                }
            }
            (Some(_), None) => {
                log::warn!("pair {pair_id}: no English counterpart");
                report.orphaned_bn += 1;
            }
            (None, Some(_)) => {
                log::warn!("pair {pair_id}: no Bengali counterpart");
                report.orphaned_en += 1;
            }
            (None, None) => {}
        }
    }
    pairing.report = report;
    Ok(pairing)
}

/// Exhaustive, disjoint split of a pair set by dialect.
#[derive(Debug, Clone, PartialEq)]
pub struct Strata<T> {
    pub sadhu: Vec<T>,
    pub cholito: Vec<T>,
}

pub fn stratify<T: Dialected + Clone>(items: &[T]) -> Strata<T> {
    let (sadhu, cholito) = items.iter().cloned().partition(|x| x.dialect() == Dialect::Sadhu);
    Strata { sadhu, cholito }
}

/// Groups records by model id, preserving per-model input order.
pub fn group_by_model(records: Vec<PredictionRecord>) -> BTreeMap<String, Vec<PredictionRecord>> {
    let mut groups: BTreeMap<String, Vec<PredictionRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.model_id.clone()).or_default().push(r);
    }
    groups
}

/// Counts records per model id.
pub fn model_counts(records: &[PredictionRecord]) -> HashMap<&str, usize> {
    let mut counts = HashMap::new();
    for r in records {
        *counts.entry(r.model_id.as_str()).or_insert(0) += 1;
    }
    counts
}

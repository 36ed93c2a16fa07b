//! Command-line front end.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::distributions::{inversion_series, HistogramConfig};
use crate::ingest::{self, load_predictions, pair_streams, InputFormat, LoadOutcome, PairingReport, Rejection};
use crate::metrics::MetricConfig;
use crate::normalize::{builtin_schemes, SchemeRegistry};
use crate::oracle::{synth_corpus, to_jsonl, SynthParams};
use crate::pipeline::{audit_model, pair_metrics_jsonl, AuditOptions, ModelAudit};
use crate::records::{PredictionRecord, ValidationMode};
use crate::report::{render_audit, ReportBundle, ReportFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "xlalign", version, about = "Cross-lingual sentiment alignment audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Audit one model's paired predictions.
    Audit(AuditArgs),
    /// Audit several models (one prediction file each) side by side.
    Compare(AuditArgs),
    /// Generate a synthetic prediction corpus with planted statistics.
    Synth(SynthArgs),
    /// Check prediction files for schema and pairing problems.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct AuditArgs {
    /// Prediction file (JSONL or CSV); repeatable.
    #[arg(long = "predictions", required = true)]
    predictions: Vec<PathBuf>,
    /// Builtin scheme id (2class, 3class, 5class) or path to a scheme file.
    #[arg(long)]
    scheme: Option<String>,
    /// JSON map of model id -> scheme id or scheme file.
    #[arg(long)]
    scheme_map: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    tau: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    robust_threshold: f64,
    /// Report format: json, csv or md.
    #[arg(long, default_value = "json")]
    format: String,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-pair metrics as JSONL.
    #[arg(long)]
    dump_pairs: Option<PathBuf>,
    /// Directory for histogram files; defaults to the report's directory.
    #[arg(long)]
    hist_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    hist_bins_div: usize,
    #[arg(long, default_value_t = 80)]
    hist_bins_bias: usize,
    /// strict or lenient.
    #[arg(long, default_value = "strict")]
    mode: String,
    /// Force the input format (jsonl or csv) instead of using the extension.
    #[arg(long)]
    input_format: Option<String>,
    /// Worker threads used for aggregation. Output does not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    inversions: usize,
    #[arg(long, default_value_t = 0)]
    robust: usize,
    #[arg(long, default_value_t = 0.5)]
    sadhu_fraction: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mean_bias: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    tau: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    robust_threshold: f64,
    #[arg(long, default_value = "synthetic")]
    model: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// jsonl or csv.
    #[arg(long, default_value = "jsonl")]
    output_format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, default_value = "strict")]
    mode: String,
    #[arg(long)]
    input_format: Option<String>,
    /// Also check that every label resolves in this scheme.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    scheme_map: Option<PathBuf>,
}

/// A failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn data(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_DATA, message: message.into() }
}

/// Runs the CLI with explicit arguments and output streams; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Audit(a) => cmd_audit(&a, false, stdout),
        Command::Compare(a) => cmd_audit(&a, true, stdout),
        Command::Synth(a) => cmd_synth(&a, stdout),
        Command::Validate(a) => cmd_validate(&a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn parse_mode(s: &str) -> Result<ValidationMode, Failure> {
    s.parse().map_err(usage)
}

fn input_format(forced: &Option<String>, path: &Path) -> Result<InputFormat, Failure> {
    match forced {
        Some(f) => f.parse().map_err(usage),
        None => Ok(InputFormat::from_path(path)),
    }
}

fn build_registry(scheme: &Option<String>, scheme_map: &Option<PathBuf>) -> Result<(SchemeRegistry, Option<String>), Failure> {
    let mut registry = builtin_schemes();
    let default = match scheme {
        Some(spec) => Some(registry.resolve_spec(spec).map_err(|e| usage(e.to_string()))?),
        None => None,
    };
    if let Some(map) = scheme_map {
        registry.load_scheme_map(map).map_err(|e| usage(e.to_string()))?;
    }
    if default.is_none() && scheme_map.is_none() {
        return Err(usage("one of --scheme or --scheme-map is required"));
    }
    Ok((registry, default))
}

fn load(path: &Path, forced: &Option<String>, mode: ValidationMode) -> Result<LoadOutcome, Failure> {
    let format = input_format(forced, path)?;
    let outcome = load_predictions(path, format, mode).map_err(|e| data(format!("{}: {e}", path.display())))?;
    for r in &outcome.rejections {
        log::warn!("{}:{}: skipped: {}", path.display(), r.line, r.reason);
    }
    Ok(outcome)
}

/// File-name-safe rendering of a model id.
fn file_stem(model_id: &str) -> String {
    model_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| data(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| data(format!("{}: {e}", path.display())))
}

/// `pairs.jsonl` -> `pairs.<model>.jsonl`.
fn with_model_suffix(path: &Path, model_id: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{}.{}", file_stem(model_id), ext.to_string_lossy()),
        None => format!("{stem}.{}", file_stem(model_id)),
    };
    path.with_file_name(name)
}

fn cmd_audit(args: &AuditArgs, compare: bool, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let config = MetricConfig::new(args.tau, args.robust_threshold).map_err(|e| usage(e.to_string()))?;
    let format: ReportFormat = args.format.parse().map_err(|e: crate::report::ReportError| usage(e.to_string()))?;
    let mode = parse_mode(&args.mode)?;
    if args.hist_bins_div == 0 || args.hist_bins_bias == 0 {
        return Err(usage("histogram bin counts must be at least 1"));
    }
    if compare && args.predictions.len() < 2 {
        return Err(usage("compare needs at least two --predictions files"));
    }
    let (registry, default_scheme) = build_registry(&args.scheme, &args.scheme_map)?;
    let opts = AuditOptions {
        config,
        histograms: HistogramConfig { divergence_bins: args.hist_bins_div, bias_bins: args.hist_bins_bias },
        mode,
        workers: args.workers.max(1),
    };

    // model id -> (records, source file)
    let mut models: BTreeMap<String, (Vec<PredictionRecord>, PathBuf)> = BTreeMap::new();
    for path in &args.predictions {
        let outcome = load(path, &args.input_format, mode)?;
        let mut seen_in_file: Vec<String> = ingest::model_counts(&outcome.records).keys().map(|s| s.to_string()).collect();
        seen_in_file.sort();
        if compare && seen_in_file.len() > 1 {
            return Err(data(format!("{}: compare expects one model per file, found {:?}", path.display(), seen_in_file)));
        }
        for model in &seen_in_file {
            let scheme = registry
                .for_model(model, default_scheme.as_deref())
                .map_err(|e| usage(e.to_string()))?;
            for (line, rec) in outcome.iter_with_lines().filter(|(_, r)| &r.model_id == model) {
                if scheme.resolve(&rec.label).is_none() {
                    return Err(data(format!(
                        "{}:{line}: label {:?} does not resolve in scheme {:?}",
                        path.display(),
                        rec.label,
                        scheme.scheme_id()
                    )));
                }
            }
            if compare {
                if let Some((_, first)) = models.get(model) {
                    return Err(data(format!(
                        "model {model:?} appears in both {} and {}",
                        first.display(),
                        path.display()
                    )));
                }
            }
        }
        for (model, recs) in ingest::group_by_model(outcome.records) {
            models.entry(model).or_insert_with(|| (Vec::new(), path.clone())).0.extend(recs);
        }
    }
    if models.is_empty() {
        return Err(data("no prediction records found"));
    }
    if !compare && models.len() > 1 {
        let ids: Vec<_> = models.keys().cloned().collect();
        return Err(data(format!("audit covers one model, found {ids:?}; use compare")));
    }

    let mut audits: Vec<ModelAudit> = Vec::new();
    for (model, (records, _)) in models {
        let scheme = registry.for_model(&model, default_scheme.as_deref()).map_err(|e| usage(e.to_string()))?;
        let audit = audit_model(&model, records, scheme, &opts).map_err(|e| data(format!("{model}: {e}")))?;
        if mode == ValidationMode::Strict && !audit.pairing.conflict_ids.is_empty() {
            return Err(data(format!("{model}: dialect conflicts in pairs {:?}", audit.pairing.conflict_ids)));
        }
        audits.push(audit);
    }

    let mut bundle = ReportBundle::new(config, audits.iter().map(|a| a.report.clone()).collect());
    if compare {
        let all: Vec<_> = audits
            .iter()
            .filter_map(|a| a.report.all.as_ref().map(|s| (a.model_id.as_str(), s)))
            .collect();
        bundle.inversion_series = Some(inversion_series(all));
    }

    let hist_dir = args
        .hist_dir
        .clone()
        .or_else(|| args.out.as_ref().map(|o| o.parent().map(Path::to_path_buf).unwrap_or_default()));
    if let Some(dir) = &hist_dir {
        for a in &audits {
            let stem = file_stem(&a.model_id);
            for h in [&a.divergence_hist, &a.bias_hist] {
                let json = dir.join(format!("{stem}.{}.json", h.metric.as_str()));
                let csv = dir.join(format!("{stem}.{}.csv", h.metric.as_str()));
                write_file(&json, &h.to_json())?;
                write_file(&csv, &h.to_csv())?;
                bundle.histograms.push(json.display().to_string());
                bundle.histograms.push(csv.display().to_string());
            }
        }
    }

    if let Some(dump) = &args.dump_pairs {
        for a in &audits {
            let path = if audits.len() == 1 { dump.clone() } else { with_model_suffix(dump, &a.model_id) };
            write_file(&path, &pair_metrics_jsonl(&a.metrics))?;
        }
    }

    let rendered = render_audit(&bundle, format).map_err(|e| data(e.to_string()))?;
    match &args.out {
        Some(path) => write_file(path, &rendered)?,
        None => stdout.write_all(rendered.as_bytes()).map_err(|e| data(e.to_string()))?,
    }
    Ok(EXIT_OK)
}

fn cmd_synth(args: &SynthArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let params = SynthParams {
        pairs: args.pairs,
        inversions: args.inversions,
        robust_pairs: args.robust,
        sadhu_fraction: args.sadhu_fraction,
        mean_bias_target: args.mean_bias,
        tau: args.tau,
        robust_threshold: args.robust_threshold,
        model_id: args.model.clone(),
    };
    let records = synth_corpus(&params, args.seed).map_err(|e| usage(e.to_string()))?;
    let text = match args.output_format.as_str() {
        "jsonl" => to_jsonl(&records),
        "csv" => {
            let mut buf = Vec::new();
            ingest::write_csv(&records, &mut buf).map_err(|e| data(e.to_string()))?;
            String::from_utf8(buf).expect("csv writer emits UTF-8")
        }
        other => return Err(usage(format!("unknown output format {other:?} (expected jsonl|csv)"))),
    };
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => stdout.write_all(text.as_bytes()).map_err(|e| data(e.to_string()))?,
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct FileCheck {
    path: String,
    records: usize,
    rejections: Vec<Rejection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct LabelIssue {
    path: String,
    line: usize,
    label: String,
}

#[derive(Serialize)]
struct ModelCheck {
    model_id: String,
    pairing: PairingReport,
    conflict_ids: Vec<String>,
    duplicate_ids: Vec<String>,
    unknown_labels: Vec<LabelIssue>,
}

#[derive(Serialize)]
struct ValidationReport {
    ok: bool,
    files: Vec<FileCheck>,
    models: Vec<ModelCheck>,
}

fn cmd_validate(args: &ValidateArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let mode = parse_mode(&args.mode)?;
    let registry = if args.scheme.is_some() || args.scheme_map.is_some() {
        Some(build_registry(&args.scheme, &args.scheme_map)?)
    } else {
        None
    };

    let mut files = Vec::new();
    let mut by_model: BTreeMap<String, Vec<PredictionRecord>> = BTreeMap::new();
    let mut label_issues: BTreeMap<String, Vec<LabelIssue>> = BTreeMap::new();
    for path in &args.files {
        let format = input_format(&args.input_format, path)?;
        match load_predictions(path, format, mode) {
            Ok(outcome) => {
                if let Some((reg, default)) = &registry {
                    for (line, rec) in outcome.iter_with_lines() {
                        let resolved = reg
                            .for_model(&rec.model_id, default.as_deref())
                            .map(|s| s.resolve(&rec.label).is_some())
                            .unwrap_or(false);
                        if !resolved {
                            label_issues.entry(rec.model_id.clone()).or_default().push(LabelIssue {
                                path: path.display().to_string(),
                                line,
                                label: rec.label.clone(),
                            });
                        }
                    }
                }
                files.push(FileCheck {
                    path: path.display().to_string(),
                    records: outcome.records.len(),
                    rejections: outcome.rejections.clone(),
                    error: None,
                });
                for (model, recs) in ingest::group_by_model(outcome.records) {
                    by_model.entry(model).or_default().extend(recs);
                }
            }
            Err(e) => files.push(FileCheck {
                path: path.display().to_string(),
                records: 0,
                rejections: Vec::new(),
                error: Some(e.to_string()),
            }),
        }
    }

    let mut models = Vec::new();
    for (model, recs) in by_model {
        // collect every pairing problem instead of stopping at the first duplicate
        let pairing = pair_streams(recs, ValidationMode::Lenient).map_err(|e| data(e.to_string()))?;
        models.push(ModelCheck {
            unknown_labels: label_issues.remove(&model).unwrap_or_default(),
            model_id: model,
            pairing: pairing.report,
            conflict_ids: pairing.conflict_ids,
            duplicate_ids: pairing.duplicate_ids,
        });
    }

    let ok = files.iter().all(|f| f.error.is_none() && f.rejections.is_empty())
        && models.iter().all(|m| m.pairing.is_clean() && m.unknown_labels.is_empty());
    let report = ValidationReport { ok, files, models };
    let mut text = serde_json::to_string_pretty(&report).expect("validation report serializes");
    text.push('\n');
    stdout.write_all(text.as_bytes()).map_err(|e| data(e.to_string()))?;
    Ok(if ok { EXIT_OK } else { EXIT_DATA })
}

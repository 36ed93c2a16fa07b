#![allow(dead_code)]

pub mod table1;

use std::ffi::OsString;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use xlalign::{Dialect, Lang, PredictionRecord};

/// Runs the CLI in-process and returns (exit code, stdout, stderr).
pub fn run_cli<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv: Vec<OsString> = std::iter::once(OsString::from("xlalign")).chain(args.into_iter().map(Into::into)).collect();
    let code = xlalign::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

pub fn record(pair_id: &str, lang: Lang, dialect: Dialect, model: &str, label: &str, score: f64) -> PredictionRecord {
    PredictionRecord {
        pair_id: pair_id.into(),
        lang,
        dialect,
        model_id: model.into(),
        label: label.into(),
        score,
        text: None,
    }
}

/// Random complete corpus for one model under `scheme_id`.
///
/// With `grid` set, confidences are multiples of 0.05 so that normalized
/// scores regularly land on thresholds drawn from the same grid.
pub fn random_corpus(rng: &mut ChaCha8Rng, n: usize, scheme_id: &str, grid: bool) -> Vec<PredictionRecord> {
    let labels: &[&str] = match scheme_id {
        "2class" => &["positive", "negative"],
        "3class" => &["positive", "neutral", "negative"],
        _ => &["very positive", "positive", "neutral", "negative", "very negative"],
    };
    let mut recs = Vec::with_capacity(2 * n);
    for i in 0..n {
        let dialect = if rng.gen_bool(0.5) { Dialect::Sadhu } else { Dialect::Cholito };
        for lang in [Lang::Bn, Lang::En] {
            let label = labels[rng.gen_range(0..labels.len())];
            let score = if grid { rng.gen_range(0..=20) as f64 / 20.0 } else { rng.gen_range(0.0..=1.0) };
            recs.push(record(&format!("r{i:04}"), lang, dialect, "rand", label, score));
        }
    }
    recs
}

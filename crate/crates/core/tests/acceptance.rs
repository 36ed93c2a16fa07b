//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Value;

use xlalign::aggregate::FinalizedStats;
use xlalign::distributions::HistogramConfig;
use xlalign::ingest::{parse_predictions, InputFormat};
use xlalign::metrics::compute_pair_metrics;
use xlalign::oracle::{oracle_audit, oracle_histogram, to_jsonl};
use xlalign::pipeline::{audit_model, AuditOptions};
use xlalign::report::format_half_away;
use xlalign::{builtin_schemes, Dialect, MetricConfig, PairedObservation, ValidationMode};

use common::{random_corpus, record, run_cli, table1};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    rel_close_scaled(a, b, 0.0)
}

/// Relative closeness, with `scale` as the magnitude floor for quantities
/// that can cancel to zero.
fn rel_close_scaled(a: f64, b: f64, scale: f64) -> bool {
    a == b || (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(scale)
}

fn compare_stats(label: &str, got: Option<&FinalizedStats>, want: Option<&FinalizedStats>) -> Result<(), String> {
    let (g, w) = match (got, want) {
        (None, None) => return Ok(()),
        (Some(g), Some(w)) => (g, w),
        _ => return Err(format!("{label}: stratum presence differs: {got:?} vs {want:?}")),
    };
    ensure(g.n == w.n && g.robust_count == w.robust_count && g.inversion_count == w.inversion_count, || {
        format!("{label}: counts differ: {g:?} vs {w:?}")
    })?;
    let pairs = [
        ("mean_divergence", g.mean_divergence, w.mean_divergence),
        ("robustness_pct", g.robustness_pct, w.robustness_pct),
        ("inversion_rate_pct", g.inversion_rate_pct, w.inversion_rate_pct),
    ];
    for (name, a, b) in pairs {
        ensure(rel_close(a, b), || format!("{label}.{name}: {a:e} vs oracle {b:e}"))?;
    }
    // |bias| equals divergence pair by pair, so mean divergence bounds the
    // size of the terms whose signed mean can cancel to zero
    let (a, b) = (g.mean_bias, w.mean_bias);
    ensure(rel_close_scaled(a, b, w.mean_divergence), || format!("{label}.mean_bias: {a:e} vs oracle {b:e}"))?;
    match (g.std_divergence, w.std_divergence) {
        (None, None) => Ok(()),
        (Some(a), Some(b)) => ensure(rel_close(a, b), || format!("{label}.std_divergence: {a:e} vs oracle {b:e}")),
        (a, b) => Err(format!("{label}.std_divergence presence differs: {a:?} vs {b:?}")),
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let registry = builtin_schemes();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a11_9e);
    let mut total_pairs = 0usize;
    for c in 0..1000usize {
        let n = rng.gen_range(1..=500);
        let grid = c % 2 == 0;
        let tau = if grid { rng.gen_range(0..10) as f64 / 20.0 } else { rng.gen_range(0.0..0.5) };
        let rt = if grid { rng.gen_range(1..=10) as f64 / 20.0 } else { rng.gen_range(0.01..=0.5) };
        let scheme_id = ["2class", "3class", "5class"][c % 3];
        let recs = random_corpus(&mut rng, n, scheme_id, grid);
        let histograms = HistogramConfig { divergence_bins: rng.gen_range(1..=60), bias_bins: rng.gen_range(1..=120) };
        let opts = AuditOptions {
            config: MetricConfig::new(tau, rt).map_err(|e| e.to_string())?,
            histograms,
            mode: ValidationMode::Strict,
            workers: 1 + c % 4,
        };
        let scheme = registry.lookup(scheme_id).expect("builtin scheme");
        let audit = audit_model("rand", recs, scheme, &opts).map_err(|e| format!("corpus {c}: {e}"))?;
        total_pairs += audit.observations.len();

        let oracle = oracle_audit(&audit.observations, tau, rt);
        let fin = audit.summary.finalize();
        let tag = format!("corpus {c} (n={n}, tau={tau}, rt={rt})");
        compare_stats(&format!("{tag} all"), fin.all.as_ref(), oracle.all.as_ref())?;
        compare_stats(&format!("{tag} sadhu"), fin.sadhu.as_ref(), oracle.sadhu.as_ref())?;
        compare_stats(&format!("{tag} cholito"), fin.cholito.as_ref(), oracle.cholito.as_ref())?;

        let div: Vec<f64> = audit.observations.iter().map(|o| (o.s_bengali - o.s_english).abs()).collect();
        let bias: Vec<f64> = audit.observations.iter().map(|o| o.s_english - o.s_bengali).collect();
        let want_div = oracle_histogram(&div, 0.0, 2.0, histograms.divergence_bins);
        let want_bias = oracle_histogram(&bias, -2.0, 2.0, histograms.bias_bins);
        ensure(audit.divergence_hist.counts == want_div, || format!("{tag}: divergence histogram differs"))?;
        ensure(audit.bias_hist.counts == want_bias, || format!("{tag}: bias histogram differs"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("1000 corpora, {total_pairs} pairs, {secs:.2}s"))
}

fn table1_fixture() -> Outcome {
    let registry = builtin_schemes();
    let mut notes = Vec::new();
    for t in table1::models() {
        let jsonl = to_jsonl(&table1::build(&t));
        let loaded = parse_predictions(Cursor::new(jsonl), InputFormat::Jsonl, ValidationMode::Strict)
            .map_err(|e| e.to_string())?;
        let scheme = registry.lookup(t.scheme).expect("builtin scheme");
        let audit = audit_model(t.model, loaded.records, scheme, &AuditOptions::default()).map_err(|e| e.to_string())?;
        ensure(audit.pairing.report.is_clean(), || format!("{}: fixture pairing not clean", t.model))?;

        let rendered: Vec<String> = audit.report.table.iter().map(|r| r.display.clone().unwrap_or_default()).collect();
        for (i, (got, want)) in rendered.iter().zip(t.printed.iter()).enumerate() {
            ensure(got == want, || format!("{} row {i} ({}): rendered {got}, printed {want}", t.model, audit.report.table[i].metric))?;
        }
        let all = audit.report.all.as_ref().expect("all stratum");
        ensure(all.n == table1::PAIRS as u64, || format!("{}: n = {}", t.model, all.n))?;

        // (a) inversion count over n reproduces the printed rate
        let printed_count: u64 = t.printed[7].parse().unwrap();
        let printed_rate: f64 = t.printed[8].parse().unwrap();
        let rate = printed_count as f64 / table1::PAIRS as f64 * 100.0;
        ensure((rate - printed_rate).abs() <= 0.05 && format_half_away(rate, 1) == t.printed[8], || {
            format!("{}: {printed_count}/{} = {rate:.4}% vs printed {printed_rate}", t.model, table1::PAIRS)
        })?;

        // (b) printed sadhu minus printed cholito is the printed gap
        let sadhu: f64 = t.printed[2].parse().unwrap();
        let cholito: f64 = t.printed[3].parse().unwrap();
        let gap = format_half_away(sadhu - cholito, 3);
        ensure(gap == t.printed[4], || format!("{}: {sadhu} - {cholito} = {gap}, printed {}", t.model, t.printed[4]))?;

        // (c) relative sadhu error increase from the printed means
        let pct = (sadhu - cholito) / cholito * 100.0;
        let printed_pct: f64 = t.printed[5].parse().unwrap();
        ensure((pct - printed_pct).abs() <= 0.3 + 1e-9, || {
            format!("{}: recomputed {pct:.3}% vs printed {printed_pct}%", t.model)
        })?;
        notes.push(format!("{} gap {} (+{:.2}%)", t.model, gap, pct));
    }
    Ok(notes.join("; "))
}

#[derive(Deserialize)]
struct GoldenCase {
    scheme: String,
    label: String,
    score: f64,
    expected: f64,
}

fn normalizer_conformance() -> Outcome {
    let cases: Vec<GoldenCase> =
        serde_json::from_str(include_str!("fixtures/normalizer_golden.json")).map_err(|e| e.to_string())?;
    let registry = builtin_schemes();
    let mut schemes_seen = std::collections::BTreeSet::new();
    for c in &cases {
        let scheme = registry.lookup(&c.scheme).ok_or_else(|| format!("unknown scheme {}", c.scheme))?;
        let via_label = scheme.normalize_label(&c.label, c.score).map_err(|e| e.to_string())?;
        let rec = record("g", xlalign::Lang::Bn, Dialect::Sadhu, "golden", &c.label, c.score);
        let via_record = xlalign::normalize::normalize(&rec, scheme).map_err(|e| e.to_string())?;
        for got in [via_label, via_record] {
            ensure(got == c.expected, || {
                format!("{} ({:?}, {}) -> {got}, expected {}", c.scheme, c.label, c.score, c.expected)
            })?;
        }
        schemes_seen.insert(c.scheme.clone());
    }
    ensure(cases.len() >= 12, || format!("only {} golden cases", cases.len()))?;
    ensure(schemes_seen.len() == 3, || format!("schemes covered: {schemes_seen:?}"))?;
    Ok(format!("{} cases over {} schemes", cases.len(), schemes_seen.len()))
}

fn inversion_boundaries() -> Outcome {
    const EPS: f64 = 1e-9;
    let mut checked = 0usize;
    for tau in [0.0, 0.05, 0.1, 0.25, 0.3, 0.45] {
        let config = MetricConfig::new(tau, 0.1).map_err(|e| e.to_string())?;
        let mut cases = vec![
            (tau, -tau, false),
            (tau + EPS, -(tau + EPS), true),
            (tau + EPS, -tau, false),
            (tau, -(tau + EPS), false),
            (tau + 0.5, -(tau + EPS), true),
        ];
        if tau >= EPS {
            cases.push((tau - EPS, -(tau - EPS), false));
            cases.push((tau + EPS, -(tau - EPS), false));
        }
        let mut observations = Vec::new();
        let mut expected_inversions = 0u64;
        for (sb, se, want) in cases {
            let variants = [(sb, se), (-sb, -se), (se, sb), (-se, -sb)];
            for (i, (b, e)) in variants.into_iter().enumerate() {
                let obs = PairedObservation::new(format!("b{checked}"), Dialect::Cholito, b, e).map_err(|e| e.to_string())?;
                let got = compute_pair_metrics(&obs, &config).inverted;
                ensure(got == want, || format!("tau={tau}: ({b}, {e}) variant {i} inverted={got}, want {want}"))?;
                expected_inversions += want as u64;
                observations.push(obs);
                checked += 1;
            }
        }
        let oracle = oracle_audit(&observations, tau, 0.1);
        let got = oracle.all.map(|s| s.inversion_count).unwrap_or(0);
        ensure(got == expected_inversions, || format!("tau={tau}: oracle counts {got}, want {expected_inversions}"))?;
    }
    Ok(format!("{checked} boundary cases"))
}

fn report_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn stratum_n(v: &Value) -> u64 {
    v.get("n").and_then(Value::as_u64).unwrap_or(0)
}

fn planted_recovery() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for cfg in 0..50u64 {
        let n: usize = rng.gen_range(1..=2000);
        let k = rng.gen_range(0..=n / 2);
        let m = rng.gen_range(0..=n - k);
        let f: f64 = if cfg % 10 == 0 { [0.0, 1.0][(cfg / 10 % 2) as usize] } else { rng.gen_range(0.0..=1.0) };
        let tau: f64 = rng.gen_range(0.0..0.4);
        let rt: f64 = rng.gen_range(0.02..0.6);
        let bias: f64 = rng.gen_range(-0.3..0.3);
        let csv = cfg % 3 == 0;
        let corpus = dir.path().join(format!("synth{cfg}.{}", if csv { "csv" } else { "jsonl" }));
        let report = dir.path().join(format!("report{cfg}.json"));
        let s = |x: f64| x.to_string();
        let (code, _, err) = run_cli([
            "synth".to_string(), "--pairs".into(), n.to_string(), "--inversions".into(), k.to_string(),
            "--robust".into(), m.to_string(), "--sadhu-fraction".into(), s(f), "--mean-bias".into(), s(bias),
            "--tau".into(), s(tau), "--robust-threshold".into(), s(rt), "--seed".into(), (1000 + cfg).to_string(),
            "--output-format".into(), if csv { "csv" } else { "jsonl" }.into(),
            "--out".into(), corpus.display().to_string(),
        ]);
        ensure(code == 0, || format!("config {cfg}: synth exited {code}: {err}"))?;
        let (code, _, err) = run_cli([
            "audit".to_string(), "--predictions".into(), corpus.display().to_string(), "--scheme".into(), "3class".into(),
            "--tau".into(), s(tau), "--robust-threshold".into(), s(rt), "--out".into(), report.display().to_string(),
        ]);
        ensure(code == 0, || format!("config {cfg}: audit exited {code}: {err}"))?;
        let v = report_json(&report)?;
        let model = &v["models"][0];
        let sadhu_want = (f * n as f64).round() as u64;
        let got = (
            stratum_n(&model["all"]),
            model["all"]["inversion_count"].as_u64().unwrap_or(u64::MAX),
            model["all"]["robust_count"].as_u64().unwrap_or(u64::MAX),
            stratum_n(&model["sadhu"]),
            stratum_n(&model["cholito"]),
        );
        let want = (n as u64, k as u64, m as u64, sadhu_want, n as u64 - sadhu_want);
        ensure(got == want, || {
            format!("config {cfg} (n={n}, k={k}, m={m}, f={f}, tau={tau}, rt={rt}): got {got:?}, planted {want:?}")
        })?;
    }
    Ok("50 configs recovered".into())
}

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let bytes = std::fs::read(entry.path()).map_err(|e| e.to_string())?;
        out.insert(entry.file_name().to_string_lossy().into_owned(), bytes);
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut corpora = Vec::new();
    for (model, seed) in [("det-a", "11"), ("det-b", "12")] {
        let path = dir.path().join(format!("{model}.jsonl"));
        let (code, _, err) = run_cli([
            "synth", "--pairs", "10000", "--inversions", "1234", "--robust", "4321", "--sadhu-fraction", "0.45",
            "--mean-bias", "0.03", "--model", model, "--seed", seed, "--out", path.to_str().unwrap(),
        ]);
        ensure(code == 0, || format!("synth failed: {err}"))?;
        corpora.push(path.display().to_string());
    }
    let out_dir = dir.path().join("out");
    let mut runs = 0;
    for command in ["audit", "compare"] {
        for format in ["json", "md", "csv"] {
            let mut baseline: Option<BTreeMap<String, Vec<u8>>> = None;
            for workers in [1, 2, 4, 8, 1, 8] {
                if out_dir.exists() {
                    std::fs::remove_dir_all(&out_dir).map_err(|e| e.to_string())?;
                }
                let mut args: Vec<String> = vec![command.into()];
                let inputs = if command == "audit" { &corpora[..1] } else { &corpora[..] };
                for c in inputs {
                    args.extend(["--predictions".into(), c.clone()]);
                }
                args.extend([
                    "--scheme".into(), "3class".into(), "--format".into(), format.into(),
                    "--workers".into(), workers.to_string(),
                    "--out".into(), out_dir.join("report").display().to_string(),
                    "--dump-pairs".into(), out_dir.join("pairs.jsonl").display().to_string(),
                ]);
                let (code, _, err) = run_cli(args);
                ensure(code == 0, || format!("{command} --workers {workers} exited {code}: {err}"))?;
                let snap = snapshot(&out_dir)?;
                match &baseline {
                    None => baseline = Some(snap),
                    Some(b) => {
                        for (name, bytes) in b {
                            ensure(snap.get(name) == Some(bytes), || {
                                format!("{command} {format}: {name} differs with --workers {workers}")
                            })?;
                        }
                        ensure(snap.len() == b.len(), || format!("{command} {format}: file set differs"))?;
                    }
                }
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} runs over 10000 pairs byte-identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 6] = [
        ("oracle-equivalence", oracle_equivalence),
        ("four-model-table-fixture", table1_fixture),
        ("normalizer-conformance", normalizer_conformance),
        ("inversion-boundaries", inversion_boundaries),
        ("planted-parameter-recovery", planted_recovery),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.2}s): {detail}"),
            Err(reason) => {
                failures += 1;
                println!("FAIL {name} ({secs:.2}s): {reason}");
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}

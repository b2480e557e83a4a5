use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy").join(name)
}

fn tkgforge(run_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tkgforge"))
        .arg("--run-dir")
        .arg(run_dir)
        .args(args)
        .env_remove("TKGF_API_ENDPOINT")
        .env_remove("TKGF_API_TOKEN")
        .env_remove("TKGF_API_MODEL")
        .output()
        .expect("binary runs")
}

fn ok(run_dir: &Path, args: &[&str]) -> Output {
    let out = tkgforge(run_dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const OUTPUTS: [&str; 9] = [
    "facts.tsv",
    "rules.json",
    "forecast.tsv",
    "forecast.tsv.diagnostics.json",
    "clusters.json",
    "matrix.csv",
    "multi.jsonl",
    "single.jsonl",
    "report.json",
];

/// ingest -> mine -> forecast -> cluster -> describe (both setups) -> evaluate.
fn pipeline(dir: &Path, seed: &str) {
    let (schema, labels, defs) = (fixture("schema.json"), fixture("labels.tsv"), fixture("definitions.json"));
    let at = |name: &str| dir.join(name);
    ok(
        dir,
        &["ingest", "--intervals", s(&fixture("intervals.tsv")), "--point-relations", "collaboratesWith,award"],
    );
    ok(dir, &["--seed", seed, "mine", "--facts", s(&at("facts.tsv")), "--lengths", "1,2,3", "--walks", "200"]);
    ok(
        dir,
        &[
            "--seed", seed, "forecast", "--facts", s(&at("facts.tsv")), "--rules", s(&at("rules.json")),
            "--schema", s(&schema), "--from", "2026-01-01", "--to", "2026-01-30", "--weights-year", "2025",
        ],
    );
    ok(
        dir,
        &["cluster", "--facts", s(&at("forecast.tsv")), "--schema", s(&schema), "--matrix-out", "matrix.csv"],
    );
    for (setup, out) in [("multi", "multi.jsonl"), ("single", "single.jsonl")] {
        ok(
            dir,
            &[
                "--seed", seed, "describe", "--input", s(&at("clusters.json")), "--setup", setup, "--labels",
                s(&labels), "--definitions", s(&defs), "--out", out,
            ],
        );
        let manifest = json(&at("describe.manifest.json"));
        assert_eq!(manifest["counts"]["coverage_flagged"], 0);
        assert!(manifest["counts"]["examples"].as_u64().unwrap() > 0);
    }
    ok(dir, &["evaluate", "--candidates", s(&at("multi.jsonl")), "--references", s(&at("multi.jsonl"))]);
}

#[test]
fn toy_pipeline_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path(), "11");
    pipeline(b.path(), "11");
    for name in OUTPUTS {
        let (x, y) = (std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
        assert!(x == y, "{name} differs between runs");
    }
    // manifests differ only in the run directory they mention
    for stage in ["ingest", "mine", "forecast", "cluster", "describe", "evaluate"] {
        let file = format!("{stage}.manifest.json");
        let x = std::fs::read_to_string(a.path().join(&file)).unwrap();
        let y = std::fs::read_to_string(b.path().join(&file)).unwrap();
        let strip = |text: &str, dir: &Path| text.replace(s(dir), "RUN");
        assert_eq!(strip(&x, a.path()), strip(&y, b.path()), "{file}");
    }

    let report = json(&a.path().join("report.json"));
    for mode in ["strict", "exact", "type", "partial"] {
        assert_eq!(report["system"]["modes"][mode]["f1"], 1.0, "{mode}");
    }
    let diagnostics = json(&a.path().join("forecast.tsv.diagnostics.json"));
    for day in diagnostics["days"].as_array().unwrap() {
        assert_eq!(day["generated"], day["target"], "{day}");
    }
    let manifest = json(&a.path().join("forecast.manifest.json"));
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 3);
    assert!(manifest["settings"]["generator"]["k"].is_u64());
}

#[test]
fn another_seed_changes_the_forecast() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path(), "1");
    pipeline(b.path(), "2");
    let x = std::fs::read(a.path().join("forecast.tsv")).unwrap();
    let y = std::fs::read(b.path().join("forecast.tsv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn missing_rules_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent/rules.json");
    let out = tkgforge(
        dir.path(),
        &[
            "forecast", "--facts", s(&fixture("intervals.tsv")), "--rules", s(&missing), "--schema",
            s(&fixture("schema.json")), "--from", "2026-01-01", "--to", "2026-01-02",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(s(&missing)));
}

#[test]
fn malformed_facts_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let facts = dir.path().join("bad.tsv");
    std::fs::write(&facts, "A\tr\tB\t2020-01-01\nA\tr\tB\n").unwrap();
    let out = tkgforge(dir.path(), &["mine", "--facts", s(&facts)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("{}:2", facts.display())), "{err}");
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "[cluster]\nalpah = 0.5\n").unwrap();
    let out = tkgforge(dir.path(), &["--config", s(&config), "mine"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpah"));

    let out = tkgforge(dir.path(), &["mine", "--walks", "many"]);
    assert_eq!(out.status.code(), Some(1));

    let out = tkgforge(dir.path(), &["evaluate", "--candidates", "x", "--references", "y", "--modes", "fuzzy"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_supplies_settings_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["ingest", "--intervals", s(&fixture("intervals.tsv")), "--point-relations", "collaboratesWith,award"],
    );
    let config = dir.path().join("c.toml");
    std::fs::write(
        &config,
        format!(
            "seed = 5\n[paths]\nfacts = {:?}\n[mine]\nlengths = [1]\nwalks = 50\n",
            s(&dir.path().join("facts.tsv"))
        ),
    )
    .unwrap();
    ok(dir.path(), &["--config", s(&config), "mine", "--walks", "20"]);
    let manifest = json(&dir.path().join("mine.manifest.json"));
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["settings"]["walks"], 20);
    assert_eq!(manifest["settings"]["lengths"], serde_json::json!([1]));
    let rules = json(&dir.path().join("rules.json"));
    assert!(rules.as_array().unwrap().iter().all(|r| r["body"].as_array().unwrap().len() == 1));
}

#[test]
fn http_backend_without_endpoint_is_a_backend_error() {
    let dir = tempfile::tempdir().unwrap();
    let facts = dir.path().join("f.tsv");
    std::fs::write(&facts, "A01\tcollaboratesWith\tA02\t2026-01-01\n").unwrap();
    let out = tkgforge(
        dir.path(),
        &["describe", "--input", s(&facts), "--definitions", s(&fixture("definitions.json")), "--backend", "http"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("TKGF_API_ENDPOINT"));
}

#[test]
fn retime_and_resample_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    std::fs::write(p("f.tsv"), "A01\tcollaboratesWith\tA02\t2026-01-01\nA02\taward\tW1\t2026-03-05\n").unwrap();
    ok(
        dir.path(),
        &["describe", "--input", s(&p("f.tsv")), "--definitions", s(&fixture("definitions.json")), "--out", "d.jsonl"],
    );
    ok(dir.path(), &["retime", "--input", s(&p("d.jsonl")), "--year", "2022", "--out", "d22.jsonl"]);
    ok(dir.path(), &["retime", "--input", s(&p("d22.jsonl")), "--year", "2026", "--out", "back.jsonl"]);
    assert_eq!(std::fs::read(p("d.jsonl")).unwrap(), std::fs::read(p("back.jsonl")).unwrap());
    ok(dir.path(), &["retime", "--input", s(&p("f.tsv")), "--year", "2023", "--out", "f23.tsv"]);
    assert!(std::fs::read_to_string(p("f23.tsv")).unwrap().contains("2023-03-05"));

    ok(dir.path(), &["resample", "--a", s(&p("d.jsonl")), "--b", s(&p("d22.jsonl"))]);
    let lines = |n: &str| std::fs::read_to_string(p(n)).unwrap().lines().count();
    assert_eq!(lines("resampled_a.jsonl"), 2);
    assert_eq!(lines("resampled_b.jsonl"), 2);
}

#[test]
fn permutation_test_needs_a_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    std::fs::write(p("f.tsv"), "A01\tcollaboratesWith\tA02\t2026-01-01\nA02\taward\tW1\t2026-03-05\n").unwrap();
    ok(
        dir.path(),
        &["describe", "--input", s(&p("f.tsv")), "--definitions", s(&fixture("definitions.json")), "--out", "d.jsonl"],
    );
    let out = tkgforge(
        dir.path(),
        &["evaluate", "--candidates", s(&p("d.jsonl")), "--references", s(&p("d.jsonl")), "--permutation-test", "100"],
    );
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(p("empty.jsonl"), "{\"id\": \"single-000000\"}\n{\"id\": \"single-000001\"}\n").unwrap();
    ok(
        dir.path(),
        &[
            "--seed", "4", "evaluate", "--candidates", s(&p("d.jsonl")), "--references", s(&p("d.jsonl")),
            "--baseline", s(&p("empty.jsonl")), "--permutation-test", "1000",
        ],
    );
    let report = json(&p("report.json"));
    // n = 2 paired scores allow only 4 sign patterns
    assert!(report["system"]["p_values"]["strict"].as_f64().unwrap() >= 0.25);
    assert_eq!(report["baseline"]["modes"]["strict"]["f1"], 0.0);

    std::fs::write(p("wrong.jsonl"), "{\"id\": \"other\"}\n").unwrap();
    let out = tkgforge(dir.path(), &["evaluate", "--candidates", s(&p("wrong.jsonl")), "--references", s(&p("d.jsonl"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("single-000000"));
}

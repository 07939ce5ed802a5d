use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use stepsense::signal::read_signal_set;

const TINY: &str = r#"{
  "population": {"persons": 3, "minutes_per_person": 1.0},
  "features": {"cwt_image": [16, 32], "hht_image": [16, 32]},
  "evaluation": {
    "target_minutes": 0.4,
    "targets": ["p00"],
    "general": {"epochs": 2},
    "pruning": {"warmup_epochs": 1, "prune_epochs": 1, "finetune_epochs": 1},
    "fine_tune": {"epochs": 1}
  }
}"#;

fn stepsense(ws: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stepsense"))
        .arg("--workspace")
        .arg(ws)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(ws: &Path, args: &[&str]) -> String {
    let out = stepsense(ws, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn tiny_workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.json"), TINY).unwrap();
    dir
}

fn prepare(ws: &Path, extra: &[&str]) {
    for cmd in ["synth", "preprocess", "extract"] {
        let args: Vec<&str> = [cmd].iter().chain(extra).copied().collect();
        ok(ws, &args);
    }
}

#[test]
fn bad_config_exits_2_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"evaluation": {"pruning": {"warmup_epochs": "ten"}}}"#).unwrap();
    let out = stepsense(dir.path(), &["--config", cfg.to_str().unwrap(), "synth"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("evaluation.pruning.warmup_epochs"));

    std::fs::write(&cfg, r#"{"population": {"persons": 3, "colour": 1}}"#).unwrap();
    let out = stepsense(dir.path(), &["--config", cfg.to_str().unwrap(), "synth"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("population"));

    std::fs::write(&cfg, r#"{"evaluation": {"pruning": {"warmup_epochs": 0}}}"#).unwrap();
    let out = stepsense(dir.path(), &["--config", cfg.to_str().unwrap(), "synth"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("evaluation.pruning"));
}

#[test]
fn missing_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(stepsense(dir.path(), &["preprocess"]).status.code(), Some(3));
    assert_eq!(stepsense(dir.path(), &["evaluate"]).status.code(), Some(3));
    let out = stepsense(dir.path(), &["--config", "/nonexistent/config.json", "synth"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn numerical_abort_exits_4() {
    let dir = tiny_workspace();
    prepare(dir.path(), &[]);
    let cfg = TINY.replace(r#""general": {"epochs": 2}"#, r#""general": {"epochs": 2, "learning_rate": 1e300}"#);
    std::fs::write(dir.path().join("config.json"), cfg).unwrap();
    let out = stepsense(dir.path(), &["train-general"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_counts_persons_and_trials() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["synth", "--persons", "20", "--minutes", "1"]);
    let signals = read_signal_set(Path::new(stdout.trim())).unwrap();
    let persons: BTreeSet<&str> = signals.iter().map(|s| s.meta().person_id.as_str()).collect();
    let trials: BTreeSet<String> = signals
        .iter()
        .map(|s| s.meta().trajectory_id.rsplit_once('-').unwrap().0.to_string())
        .collect();
    assert_eq!(persons.len(), 20);
    assert_eq!(trials.len(), 20 * 9);
    assert!(signals.iter().all(|s| s.meta().label.is_some()));
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn full_run_reports_and_is_reproducible() {
    let run = || {
        let dir = tiny_workspace();
        prepare(dir.path(), &[]);
        ok(dir.path(), &["train-general"]);
        ok(dir.path(), &["personalize"]);
        let report = ok(dir.path(), &["evaluate", "--scenario", "B"]);
        let json: serde_json::Value = serde_json::from_slice(&std::fs::read(report.trim()).unwrap()).unwrap();
        let persons = json[0]["persons"].as_array().unwrap();
        assert_eq!(persons.len(), 1);
        assert!(persons[0]["metrics"]["valence"]["mae"].as_f64().unwrap() >= 0.0);
        assert_eq!(json[0]["scenario"], "B");
        assert!(json[0]["fingerprint"].is_string());
        ok(dir.path(), &["heatmap"]);
        let tree = read_tree(dir.path());
        (dir, tree)
    };
    let (_a, first) = run();
    let (_b, second) = run();
    assert_eq!(first.len(), second.len());
    for (x, y) in first.iter().zip(&second) {
        assert_eq!(x.0, y.0);
        assert!(x.1 == y.1, "{} differs", x.0);
    }
}

#[test]
fn evaluate_refuses_mixed_fingerprints() {
    let dir = tiny_workspace();
    prepare(dir.path(), &[]);
    ok(dir.path(), &["train-general"]);
    // Features from another seed, model from the first one.
    prepare(dir.path(), &["--seed", "9"]);
    let model = dir.path().join("models/general-p00.vibm");
    let out = stepsense(
        dir.path(),
        &["evaluate", "--seed", "9", "--model", model.to_str().unwrap(), "--target", "p00"],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fingerprint"));
}

#[test]
fn config_prints_effective_json() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["config", "--seed", "42"]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["seed"], 42);
}

use std::path::Path;
use std::process::{Command, Output};

fn bmkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmkit")).args(args).env("BMKIT_THREADS", "2").output().expect("bmkit runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const UNIT: &str = r#"{"dim":1,"J":3,"origin":[0],"shape":[8],"values":[[1,0],[1,0],[1,0],[1,0],[1,0],[1,0],[1,0],[1,0]]}"#;
const PARAMS: &str = r#"{"p":[2],"t":3,"r":6}"#;

#[test]
fn norm_prints_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", UNIT);
    let out = bmkit(&["norm", "bm", "--params", PARAMS, "--in", &f]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let total = v["total"].as_f64().unwrap();
    assert!((total - 3f64.powf(1.0 / 6.0)).abs() < 1e-9);
}

#[test]
fn boundary_norm_serializes_infinity() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", UNIT);
    let out = bmkit(&["norm", "bm", "--params", r#"{"p":[2],"t":2,"r":4}"#, "--in", &f]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["total"], "inf");
}

#[test]
fn verify_duality_sandwich_passes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = bmkit(&["verify", "duality-sandwich", "--seed", "7", "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["suite"], "duality-sandwich");
    assert_eq!(v["environment"]["seed"], 7);
    assert_eq!(v["pass"], true);
    assert_eq!(out.stdout, format!("{}", std::fs::read_to_string(&report).unwrap()).into_bytes());
}

#[test]
fn empty_corpus_is_vacuous_success() {
    let out = bmkit(&["verify", "embeddings", "--count", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["vacuous"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(bmkit(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bmkit(&["verify", "no-such-suite"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"dim":1,"J":3,"origin":[0],"shape":[8],"values":[[1,0],"#);
    let out = bmkit(&["norm", "bm", "--params", PARAMS, "--in", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1 column"));
    assert!(out.stdout.is_empty());
}

#[test]
fn precondition_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", UNIT);
    let out = bmkit(&["norm", "bm", "--params", r#"{"p":[2,2],"t":3,"r":6}"#, "--in", &f]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("precondition"));
}

#[test]
fn apply_and_estimate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", UNIT);
    let g = dir.path().join("g.json");
    let out = bmkit(&["apply", "maximal", "--in", &f, "--out", g.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let out = bmkit(&[
        "estimate-norm", "--op", r#"{"kind":"identity"}"#,
        "--norm-in", r#"{"kind":"morrey","params":{"p":[2],"t":3,"r":6}}"#,
        "--in", g.to_str().unwrap(), "--budget", "20",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["ratio"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn corpus_is_reproducible() {
    let a = bmkit(&["corpus", "--family", "blocks", "--count", "3", "--seed", "5"]);
    let b = bmkit(&["corpus", "--family", "blocks", "--count", "3", "--seed", "5"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(bmkit(&["corpus", "--family", "nope"]).status.code(), Some(2));
}

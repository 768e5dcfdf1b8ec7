use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn steep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steep")).args(args).output().expect("runs the binary")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = steep(&["needles", "--out", path(&dir.path().join("run"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let o = steep(&["needles", "--seed", "1", "--config", path(&cfg), "--out", path(&dir.path().join("run"))]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn oversized_exact_conductance_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.json");
    fs::write(&cfg, r#"{"scan": {"full_conductance": true}}"#).unwrap();
    let o = steep(&["spectral-scan", "--seed", "1", "--config", path(&cfg), "--out", path(&dir.path().join("run"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn spectral_scan_passes_and_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = steep(&["spectral-scan", "--seed", "3", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.json", "seed.txt", "scan.csv", "summary.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn summarize_round_trip_and_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = steep(&["needles", "--seed", "5", "--reps", "2", "--iters", "500", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let written = fs::read_to_string(out.join("summary.json")).unwrap();

    let o = steep(&["summarize", path(&out)]);
    assert_eq!(code(&o), 0);
    let rebuilt: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let original: serde_json::Value = serde_json::from_str(&written).unwrap();
    assert_eq!(rebuilt, original);

    assert_eq!(code(&steep(&["summarize", path(&dir.path().join("absent"))])), 1);

    fs::write(out.join("trace.csv"), "garbage\n").unwrap();
    let o = steep(&["summarize", path(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("trace.csv:1"));
}

use std::process::{Command, Output};

use serde_json::Value;

fn gwgames(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwgames"))
        .args(args)
        .env_remove("GWGAMES_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn outcomes_report_echoes_config() {
    let v = json(&gwgames(&["outcomes", "finite:0.15,0,0.85"]));
    assert_eq!(v["config"]["command"], "outcomes");
    assert_eq!(v["config"]["dist"], "finite:0.15,0,0.85");
    let n = v["result"]["outcomes"]["n"].as_f64().unwrap();
    let p = v["result"]["outcomes"]["p"].as_f64().unwrap();
    assert!((n + p - 1.0).abs() < 1e-11);
}

#[test]
fn dist_flag_and_positional_agree() {
    let a = gwgames(&["outcomes", "poisson:2"]);
    let b = gwgames(&["outcomes", "--dist", "poisson:2"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["simulate", "family:binary@0.7", "--samples", "500", "--depth", "15", "--seed", "9"];
    let a = gwgames(&args);
    let b = gwgames(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["result"].as_array().unwrap().len(), 3);
}

#[test]
fn seed_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_gwgames"))
        .args(["simulate", "poisson:1", "--samples", "50", "--game", "normal"])
        .env("GWGAMES_SEED", "17")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["seed"], 17);
}

#[test]
fn curve_csv() {
    let out = gwgames(&["curve", "--dist", "finite:0.5,0,0.5", "--map", "F2", "--res", "10", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: "));
    assert_eq!(lines.next().unwrap(), "x,residual");
    assert_eq!(lines.count(), 11);
}

#[test]
fn scan_table_csv() {
    let out = gwgames(&[
        "scan", "--family", "binary", "--game", "normal", "--points", "4", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "t,N,P,D,Nm,Pm,Dm,S1,S2,E1,E2");
    assert_eq!(lines.len(), 2 + 5);
}

#[test]
fn scan_finds_binary_threshold() {
    let v = json(&gwgames(&["scan", "--family", "binary", "--game", "normal"]));
    let t = v["result"]["t"].as_f64().unwrap();
    assert!((t - 3f64.sqrt() / 2.0).abs() < 1e-6);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("audit.json");
    let out = gwgames(&["audit", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["result"]["suite"]["pass"], true);
}

#[test]
fn exit_codes() {
    assert_eq!(gwgames(&["outcomes", "finite:0.5,0.6"]).status.code(), Some(2));
    assert_eq!(gwgames(&["outcomes", "nonsense"]).status.code(), Some(2));
    assert_eq!(gwgames(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(gwgames(&["outcomes", "poisson:1", "--format", "csv"]).status.code(), Some(2));
    // no transition inside [0, 0.5]
    let out = gwgames(&["scan", "--family", "binary", "--game", "normal", "--lo", "0", "--hi", "0.5"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(gwgames(&["--help"]).status.code(), Some(0));
}

#[test]
fn timing_goes_to_stderr() {
    let out = gwgames(&["outcomes", "poisson:2"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("elapsed"));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("elapsed"));
}

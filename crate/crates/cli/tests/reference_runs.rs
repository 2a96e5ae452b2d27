//! The documented command lines on Example 1 and their expected outcomes.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run_ok(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_abdr")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn sweep_rows(dir: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("sweep.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn example1_run_recovers_two_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    run_ok(&["run", "--dataset", "example1", "--gamma", "1", "--k", "auto", "--out", out.to_str().unwrap()]);
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["estimated_k"], 2, "metrics: {m}");
    assert_eq!(m["clustering_error"], 0.0, "metrics: {m}");
}

#[test]
fn example1_sweep_two_blocks_at_every_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    run_ok(&["sweep", "--dataset", "example1", "--gammas", "0.001,1,10,1000", "--out", out.to_str().unwrap()]);
    let rows = sweep_rows(&out);
    assert_eq!(rows.len(), 4);
    let ks: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(ks, ["2", "2", "2", "2"]);
}

#[test]
fn example1_simultaneous_fusion_leaks_least() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    run_ok(&[
        "sweep", "--dataset", "example1", "--gammas", "1", "--modes", "both,column_only,row_only",
        "--out", out.to_str().unwrap(),
    ]);
    let obm: Vec<f64> = sweep_rows(&out).iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(obm[0] <= obm[1] && obm[0] <= obm[2], "off-block mass both/column/row = {obm:?}");
}

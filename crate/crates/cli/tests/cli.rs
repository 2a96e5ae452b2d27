use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn abdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abdr"))
        .args(args)
        .output()
        .expect("spawn abdr")
}

fn ok(args: &[&str]) {
    let out = abdr(args);
    assert!(
        out.status.success(),
        "abdr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&["run", "--dataset", "example2", "--gamma", "0.5", "--out", s(&out)]);
    for name in ["Z.csv", "W.csv", "W.pgm", "trace.csv", "labels.csv", "metrics.json", "run.json"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let m = json(&out.join("metrics.json"));
    for key in ["clustering_error", "off_block_mass", "estimated_k", "true_k", "iterations", "final_objective"] {
        assert!(m.get(key).is_some(), "metrics.json lacks {key}");
    }
    assert_eq!(m["true_k"], 2);
    let z = fs::read_to_string(out.join("Z.csv")).unwrap();
    assert_eq!(z.lines().count(), 30);
    assert_eq!(z.lines().next().unwrap().split(',').count(), 30);
    let pgm = fs::read(out.join("W.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n30 30\n255\n"));
    assert_eq!(fs::read_to_string(out.join("labels.csv")).unwrap().lines().count(), 30);

    let run = json(&out.join("run.json"));
    assert!(run["graph"]["phi"].is_f64());
    assert!(run["solver"]["alpha"].is_f64());
    assert!(run["cluster"]["k"].is_u64());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&["run", "--dataset", "example3", "--gamma", "1", "--seed", "5", "--out", s(out)]);
    }
    for name in ["metrics.json", "labels.csv", "Z.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn run_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["run", "--dataset", "subspaces", "--counts", "8,8,8", "--gamma", "0.3", "--seed", "2", "--out", s(&a)]);
    ok(&["run", "--config", s(&a.join("run.json")), "--out", s(&b)]);
    for name in ["metrics.json", "labels.csv", "Z.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let mut ra = json(&a.join("run.json"));
    let mut rb = json(&b.join("run.json"));
    ra["out"] = Value::Null;
    rb["out"] = Value::Null;
    assert_eq!(ra, rb);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"dataset": {"kind": "example2"}, "solver": {"gamma": 5, "max_iter": 7}}"#).unwrap();
    let out = dir.path().join("o");
    ok(&["run", "--config", s(&cfg), "--max-iter", "3", "--out", s(&out)]);
    let run = json(&out.join("run.json"));
    assert_eq!(run["solver"]["gamma"], 5.0);
    assert_eq!(run["solver"]["max_iter"], 3);
    assert_eq!(run["dataset"]["kind"], "example2");
    assert_eq!(json(&out.join("metrics.json"))["iterations"], 3);
}

#[test]
fn gamma_zero_reaches_zero_objective() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    ok(&["run", "--dataset", "example1", "--gamma", "0", "--out", s(&out)]);
    let f = json(&out.join("metrics.json"))["final_objective"].as_f64().unwrap();
    assert!(f <= 1e-8, "final objective {f}");
}

#[test]
fn missing_csv_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no_such_data.csv");
    let out = abdr(&["run", "--dataset", "csv", "--data", s(&missing), "--out", s(&dir.path().join("o"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no_such_data.csv"), "stderr: {err}");
}

#[test]
fn invalid_field_is_named() {
    let out = abdr(&["run", "--rel-threshold", "1.5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("rel_threshold"));
    let out = abdr(&["run", "--gamma", "-1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn csv_round_trip_through_gen() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    ok(&["gen", "--dataset", "example2", "--seed", "3", "--out", s(&g)]);
    let out = dir.path().join("o");
    ok(&[
        "run", "--dataset", "csv", "--data", s(&g.join("X.csv")), "--labels", s(&g.join("labels.csv")),
        "--gamma", "1", "--out", s(&out),
    ]);
    let m = json(&out.join("metrics.json"));
    assert_eq!(m["true_k"], 2);
    assert_eq!(fs::read_to_string(out.join("Z.csv")).unwrap().lines().count(), 30);

    let bare = dir.path().join("bare");
    ok(&["run", "--dataset", "csv", "--data", s(&g.join("X.csv")), "--out", s(&bare)]);
    let m = json(&bare.join("metrics.json"));
    assert!(m["clustering_error"].is_null() && m["true_k"].is_null());
}

#[test]
fn single_gamma_sweep_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let sw = dir.path().join("sweep");
    ok(&["run", "--dataset", "example3", "--gamma", "0.7", "--out", s(&run)]);
    ok(&["sweep", "--dataset", "example3", "--gammas", "0.7", "--out", s(&sw)]);
    let m = json(&run.join("metrics.json"));
    let text = fs::read_to_string(sw.join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "gamma,estimated_k,clustering_error,off_block_mass,iterations,final_objective"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[1], m["estimated_k"].to_string());
    assert_eq!(row[2].parse::<f64>().unwrap(), m["clustering_error"].as_f64().unwrap());
    assert_eq!(row[3].parse::<f64>().unwrap(), m["off_block_mass"].as_f64().unwrap());
    assert_eq!(row[4], m["iterations"].to_string());
    assert_eq!(row[5].parse::<f64>().unwrap(), m["final_objective"].as_f64().unwrap());
}

#[test]
fn sweep_rows_and_kept_runs() {
    let dir = tempfile::tempdir().unwrap();
    let sw = dir.path().join("sweep");
    ok(&[
        "sweep", "--dataset", "example2", "--gammas", "0.1,1", "--modes", "both,column_only,row_only",
        "--keep-runs", "--out", s(&sw),
    ]);
    let text = fs::read_to_string(sw.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 7);
    assert!(rows[0].starts_with("mode,gamma,"));
    assert!(rows[1].starts_with("both,0.1,") && rows[6].starts_with("row_only,1,"));
    for idx in 0..6 {
        assert!(sw.join(format!("run_{idx:03}")).join("metrics.json").is_file());
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(threads);
        let status = Command::new(env!("CARGO_BIN_EXE_abdr"))
            .args(["sweep", "--dataset", "example2", "--gammas", "0.1,1,10", "--out", s(&out)])
            .env("ABDR_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let bad = Command::new(env!("CARGO_BIN_EXE_abdr"))
        .args(["gen"])
        .env("ABDR_THREADS", "many")
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nahm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nahm")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn e2(dir: &Path) -> PathBuf {
    write_config(
        dir,
        "e2.json",
        r#"{"points": [[1,0,0],[-1,0,0]], "s_grid": {"start": 0.5, "stop": 5, "count": 10}}"#,
    )
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("error JSON on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn solve_e2_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = e2(dir.path());
    let v = stdout_json(&nahm(&["solve", "--config", cfg.to_str().unwrap()]));
    let recs = v["records"].as_array().unwrap();
    assert_eq!(recs.len(), 10);
    let s: Vec<f64> = recs.iter().map(|r| r["s"].as_f64().unwrap()).collect();
    assert!(s.windows(2).all(|w| w[0] < w[1]));
    assert!(recs.iter().all(|r| r["within_tolerance"] == Value::Bool(true)));
    assert!(recs.iter().all(|r| r["wall_time"].is_null()));
    // complex entries are [re, im] pairs in row-major 2x2 matrices
    let t1 = &recs[0]["nahm"][1];
    assert_eq!(t1.as_array().unwrap().len(), 2);
    assert_eq!(t1[0][1].as_array().unwrap().len(), 2);
}

#[test]
fn output_is_deterministic_and_order_independent() {
    let dir = tempfile::tempdir().unwrap();
    let serial = write_config(dir.path(), "a.json", r#"{"points": [[0.3,-0.4,0.2],[-0.7,0.5,-0.1],[0.6,0.8,0.9]], "seed": 7}"#);
    let parallel = write_config(
        dir.path(),
        "b.json",
        r#"{"points": [[0.3,-0.4,0.2],[-0.7,0.5,-0.1],[0.6,0.8,0.9]], "seed": 7, "parallel": true}"#,
    );
    let grid = ["--s-grid", "0.5:3:4"];
    let a = nahm(&[&["solve", "--config", serial.to_str().unwrap()][..], &grid[..]].concat());
    let b = nahm(&[&["solve", "--config", serial.to_str().unwrap()][..], &grid[..]].concat());
    let c = nahm(&[&["solve", "--config", parallel.to_str().unwrap()][..], &grid[..]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn floats_carry_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = e2(dir.path());
    let out = nahm(&["solve", "--config", cfg.to_str().unwrap(), "--s", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"s\":1.0000000000000000e0"));
}

#[test]
fn writes_to_file_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = e2(dir.path());
    let path = dir.path().join("out.csv");
    let out = nahm(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--s-grid",
        "1:2:2",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read_to_string(&path).unwrap();
    let mut lines = body.lines();
    assert!(lines.next().unwrap().starts_with("s,nahm_residual"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn duplicate_points_exit_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dup.json", r#"{"points": [[1,0,0],[1,0,0]]}"#);
    let out = nahm(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["code"], "DuplicatePoints");
    assert_eq!(err["class"], "validation");
}

#[test]
fn malformed_and_missing_config() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", r#"{"points": [[1,0,0]], "s_grid": {"start": 0, "stop": 1, "count": 2}}"#);
    assert_eq!(nahm(&["solve", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    let missing = dir.path().join("nope.json");
    let out = nahm(&["solve", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["class"], "io");
}

#[test]
fn unwritable_output_exit_io() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = e2(dir.path());
    let target = dir.path().join("missing").join("out.json");
    let out = nahm(&["solve", "--config", cfg.to_str().unwrap(), "--s", "1", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oracle_e2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = e2(dir.path());
    let v = stdout_json(&nahm(&["oracle", "--config", cfg.to_str().unwrap(), "--s-grid", "0.5:5:4"]));
    assert!(v["max_deviation"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn perturb_order_zero_is_annihilator_basis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = e2(dir.path());
    let v = stdout_json(&nahm(&["perturb", "--config", cfg.to_str().unwrap(), "--order", "0", "--s", "2"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for (l, row) in rows.iter().enumerate() {
        let terms = row["terms"].as_array().unwrap();
        assert_eq!(terms.len(), 1);
        let sheets = terms[0]["sheets"].as_array().unwrap();
        for (j, sheet) in sheets.iter().enumerate() {
            let nonzero = sheet.as_array().unwrap().iter().any(|c| c[0].as_f64().unwrap() != 0.0 || c[1].as_f64().unwrap() != 0.0);
            assert_eq!(nonzero, j == l);
        }
    }
}

#[test]
fn zeromode_at_source_and_generic_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = e2(dir.path());
    let out = nahm(&["zeromode", "--config", cfg.to_str().unwrap(), "--s", "1", "--x", "1,0,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["code"], "AtSource");

    let v = stdout_json(&nahm(&["zeromode", "--config", cfg.to_str().unwrap(), "--s", "1", "--x", "0.3,-1.2,0.5"]));
    let rec = &v["records"][0];
    assert!(rec["nahm_side"]["w"].as_f64().unwrap() < 1e-6);
    for m in rec["modes"].as_array().unwrap() {
        assert!(m["residual"].as_f64().unwrap() < 1e-4);
        assert_eq!(m["spinor"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn zeromode_requires_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = e2(dir.path());
    assert_eq!(nahm(&["zeromode", "--config", cfg.to_str().unwrap(), "--s", "1"]).status.code(), Some(1));
}

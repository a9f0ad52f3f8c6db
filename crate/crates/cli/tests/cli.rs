use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn jobshop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jobshop"))
        .args(args)
        .env("JOBSHOP_WORKERS", "1")
        .output()
        .unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = jobshop(args);
    assert!(
        out.status.success(),
        "jobshop {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exact_solve_of_tiny_instance() {
    let v = ok_json(&["solve", s(&fixture("tiny2x2.txt")), "--exact", "--time-limit", "5"]);
    assert_eq!(v["makespan"], 7);
    assert_eq!(v["proved_optimal"], true);
}

#[test]
fn heuristics_report_every_rule() {
    let v = ok_json(&["heuristic", s(&fixture("ft06.txt"))]);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r["makespan"].as_u64().unwrap() >= 55));
}

#[test]
fn recover_leaves_feasible_schedule_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let out = jobshop(&["solve", s(&fixture("ft06.txt")), "--exact", "--out", s(&sol)]);
    assert!(out.status.success());
    let solved: Value = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    let v = ok_json(&["recover", s(&fixture("ft06.txt")), s(&sol), "--key", "start"]);
    assert_eq!(v["feasible"], true);
    assert_eq!(v["path"], "ordering");
    assert_eq!(v["starts"], solved["starts"]);
    assert_eq!(v["makespan"], 55);
}

#[test]
fn mse_and_zero_step_lagrangian_write_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let out = jobshop(&[
        "--seed", "3", "gen", s(&fixture("gen6x4.txt")), "--samples", "20", "--time-limit", "2", "--out", s(&data),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let common = ["--epochs", "5", "--batch-size", "4"];
    let mut mse = vec!["train", s(&data), "--loss", "mse", "--out", s(&a)];
    mse.extend(common);
    let mut lag = vec!["train", s(&data), "--loss", "lagrangian", "--rho", "0", "--out", s(&b)];
    lag.extend(common);
    assert!(jobshop(&mse).status.success());
    assert!(jobshop(&lag).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let report = ok_json(&["eval", s(&a), s(&data)]);
    assert_eq!(report["samples"], 4);
    assert!(report["optimality_gap"].as_f64().unwrap() >= 0.0);

    let pred = dir.path().join("pred.json");
    assert!(jobshop(&["predict", s(&a), s(&fixture("gen6x4.txt")), "--out", s(&pred)]).status.success());
    let rec = ok_json(&["recover", s(&fixture("gen6x4.txt")), s(&pred)]);
    assert_eq!(rec["feasible"], true);
}

#[test]
fn exit_codes() {
    // Usage errors.
    assert_eq!(jobshop(&["solve"]).status.code(), Some(2));
    assert_eq!(jobshop(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        jobshop(&["heuristic", s(&fixture("ft06.txt")), "--rule", "fifo"]).status.code(),
        Some(2)
    );
    assert_eq!(
        jobshop(&["solve", s(&fixture("ft06.txt")), "--time-limit", "0"]).status.code(),
        Some(2)
    );
    // Domain errors.
    assert_eq!(jobshop(&["parse", "/nonexistent/instance.txt"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "2 2\n0 3 1\n").unwrap();
    let out = jobshop(&["parse", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn parse_reports_summary() {
    let v = ok_json(&["parse", s(&fixture("ft06.txt"))]);
    assert_eq!(v["jobs"], 6);
    assert_eq!(v["machines"], 6);
}

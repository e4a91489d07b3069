use std::process::Command;

use grpadmm_harness::compare::Summary;
use grpadmm_harness::trace::{load_csv, IterateDump, CSV_COLUMNS};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_grpadmm"))
}

#[test]
fn run_writes_trace_summary_and_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lasso/alg2.csv");
    let status = bin()
        .args(["run", "--problem", "lasso", "--size", "20x60", "--algo", "alg2", "--iters", "50", "--seed", "3"])
        .args(["--param", "beta=5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    let rows = load_csv(&out).unwrap();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r.rel_gap.is_none() && r.psnr.is_none()));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("lasso/alg2.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["rule"]["beta"], 5.0);
    let dump: IterateDump = serde_json::from_slice(&std::fs::read(dir.path().join("lasso/alg2.final.json")).unwrap()).unwrap();
    assert_eq!(dump.shape, vec![60]);
}

#[test]
fn compare_writes_four_runs() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["compare", "--problem", "uot", "--size", "6x5", "--iters", "30", "--seed", "1", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let summary: Summary = serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.runs.len(), 4);
    for name in ["alg1", "alg2", "grp-fixed", "padmm"] {
        let rows = load_csv(&dir.path().join(format!("{name}.csv"))).unwrap();
        assert!(rows.iter().all(|r| r.rel_gap.is_some()));
        let dump: IterateDump =
            serde_json::from_slice(&std::fs::read(dir.path().join(format!("{name}.final.json"))).unwrap()).unwrap();
        assert_eq!(dump.shape, vec![6, 5]);
    }
}

#[test]
fn norm_prints_gradient_norm() {
    let out = bin().args(["norm", "--problem", "rof", "--size", "16x16"]).output().unwrap();
    assert!(out.status.success());
    let v: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((v - 8f64.sqrt()).abs() < 1e-3);
}

#[test]
fn invalid_parameters_are_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--problem", "lasso", "--size", "5x8", "--algo", "alg1", "--param", "mu=5", "--out"])
        .arg(dir.path().join("x.csv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn nonfinite_run_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--problem", "lasso", "--size", "10x30", "--algo", "grp-fixed", "--iters", "400"])
        .args(["--param", "tau=1e6", "--out"])
        .arg(dir.path().join("x.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

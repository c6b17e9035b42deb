use std::path::Path;
use std::process::{Command, Output};

use metriclab::verify::{Report, Status};
use serde_json::Value;

const DISK: &str = r#"{"kind":"disk","radius":1.0}"#;
const ANNULUS: &str = r#"{"kind":"annulus","inner":0.5,"outer":1.0}"#;

fn metriclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metriclab")).args(args).output().expect("run metriclab")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let cfg = serde_json::json!({
        "points": 1,
        "checks": ["simply_connected_pinch", "domain_monotonicity"],
        "include_whole_plane": true,
        "optimizer": {"degree": 1, "restarts": 1, "boundary_samples": 256, "margin": 1e-6},
    });
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

#[test]
fn hurwitz_on_the_disk_uses_the_closed_form() {
    let v = stdout_json(&metriclab(&["hurwitz", "--domain", DISK, "--at", "0.5,0"]));
    assert!((v["radius"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert!((v["eta"].as_f64().unwrap() - 8.0 / 3.0).abs() < 1e-12);
}

#[test]
fn cara_reports_ordered_bounds() {
    let v = stdout_json(&metriclab(&[
        "cara", "--omega", ANNULUS, "--base", DISK, "--s", "0,0", "--at", "0,0.75", "--degree", "1", "--restarts", "1",
    ]));
    let (lo, hi) = (v["lower"].as_f64().unwrap(), v["upper"].as_f64().unwrap());
    assert!(lo > 0.0 && lo <= hi, "{lo} {hi}");
}

#[test]
fn distance_writes_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let out = metriclab(&[
        "distance",
        "--omega",
        DISK,
        "--base",
        DISK,
        "--from",
        "0,0",
        "--to",
        "0.5,0",
        "--grid",
        "64",
        "--path-csv",
        csv.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    let exact = 2.0 * 0.5f64.atanh();
    assert!((v["value"].as_f64().unwrap() - exact).abs() / exact < 0.02);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("re,im\n"));
    assert_eq!(text.lines().count() - 1, v["vertices"].as_u64().unwrap() as usize);
}

#[test]
fn density_writes_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let out = metriclab(&["density", "--domain", DISK, "--grid", "32", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("re,im,lambda\n"));
    assert!(text.lines().count() > 100);
}

#[test]
fn bad_domains_exit_with_an_error() {
    let out = metriclab(&["hurwitz", "--domain", r#"{"kind":"disk","radius":-1}"#, "--at", "0,0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = metriclab(&["hurwitz", "--domain", DISK, "--at", "2,0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_passes_a_small_suite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let report = dir.path().join("r.json");
    let out = metriclab(&["verify", "--config", cfg.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    let rep: Report = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(rep.checks.len(), 3);
    assert!(rep.checks.iter().all(|c| c.status == Status::Pass), "{:?}", rep.checks);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn negative_tolerance_fails_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let report = dir.path().join("r.json");
    let out = metriclab(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--tol",
        "-1",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let rep: Report = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert!(rep.checks.iter().all(|c| c.status == Status::Fail));
    assert_eq!(rep.exit_code, 2);
}

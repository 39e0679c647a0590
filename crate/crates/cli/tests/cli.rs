use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use netrisk::RiskReport;

fn netrisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netrisk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "../core/fixtures/fig1", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn assess_fig1_writes_report_and_importance() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let importance = dir.path().join("importance.csv");
    let out = netrisk(&[
        "assess",
        "--network",
        &fixture("edges.csv"),
        "--od",
        &fixture("od.csv"),
        "--assets",
        &fixture("assets.csv"),
        "--normalize",
        "--oracle",
        "enumerate",
        "--output",
        report.to_str().unwrap(),
        "--importance",
        importance.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = RiskReport::<f64>::read(&report).unwrap();
    assert_eq!(r.method, "tmcmc");
    assert!((r.estimated_risk - 0.0402).abs() < 0.01);
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle risk: 0.0402"));
    let csv = fs::read_to_string(&importance).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("asset_id,beta,importance"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn same_seed_gives_identical_stdout() {
    let args = [
        "assess",
        "--generate",
        "case2:n=12:rel=3:seed=7",
        "--seed",
        "4",
        "--samples",
        "1000",
    ];
    let a = netrisk(&args);
    let b = netrisk(&[&["--threads", "1"], &args[..]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn baselines_need_a_budget() {
    let out = netrisk(&[
        "assess",
        "--generate",
        "case1:n=5:seed=1",
        "--method",
        "mcs",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = netrisk(&[
        "assess",
        "--generate",
        "case1:n=5:seed=1",
        "--method",
        "magic",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = netrisk(&[
        "assess",
        "--generate",
        "case1:n=5:seed=1",
        "--method",
        "bound",
        "--budget",
        "32",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = RiskReport::<f64>::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(r.unique_states, 32);
}

#[test]
fn malformed_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let assets = write(dir.path(), "assets.csv", "asset_id,beta\nX,not-a-number\n");
    let out = netrisk(&[
        "assess",
        "--network",
        &fixture("edges.csv"),
        "--od",
        &fixture("od.csv"),
        "--assets",
        &assets,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = netrisk(&["assess", "--generate", "hexagon:7"]);
    assert_eq!(out.status.code(), Some(2));
    let out = netrisk(&["validate", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tmcmc.toml", "cov_target = -1.0\n");
    let out = netrisk(&["assess", "--generate", "case1:n=5:seed=1", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sampler_abort_exits_with_4_and_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let edges = write(
        dir.path(),
        "edges.csv",
        "from,to,capacity,asset_id,failed_capacity\nO,D,1,X,0\n",
    );
    let od = write(dir.path(), "od.csv", "origin,destination\nO,D\n");
    let assets = write(dir.path(), "assets.csv", "asset_id,beta\nX,6.0\n");
    let diag = dir.path().join("diag.json");
    let out = netrisk(&[
        "assess",
        "--network",
        &edges,
        "--od",
        &od,
        "--assets",
        &assets,
        "--samples",
        "100",
        "--chains",
        "2",
        "--diagnostics",
        diag.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&diag).unwrap()).unwrap();
    assert!(doc["error"].as_str().unwrap().contains("zero-likelihood"));
    assert_eq!(doc["config"]["samples_per_stage"], 100);
}

#[test]
fn bench_writes_summary_and_raw_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = netrisk(&[
        "bench",
        "case1:n=5:seed=42",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--repeats",
        "2",
        "--samples",
        "500",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), summary);
    let raw = fs::read_to_string(dir.path().join("raw.csv")).unwrap();
    assert_eq!(raw.lines().count(), 7);
}

#[test]
fn validate_fig1_passes() {
    let out = netrisk(&["validate", "fig1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("6 of 6 checks passed"), "{text}");
}

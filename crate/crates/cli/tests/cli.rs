use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn twophase(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twophase"))
        .args(args)
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn selftest_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = twophase(dir.path(), &["selftest"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("criterion")).count(), 11);
    let doc = read_json(&dir.path().join("selftest.json"));
    assert_eq!(doc["result"]["criteria"].as_array().unwrap().len(), 11);
}

#[test]
fn certify_reports_zero_free() {
    let dir = tempfile::tempdir().unwrap();
    let out = twophase(dir.path(), &["lopatinskii", "certify", "--variant", "s22", "--rmax", "1e3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = read_json(&dir.path().join("lopatinskii_certify.json"));
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["result"]["verdict"]["verdict"], "zero_free");
    assert_eq!(doc["result"]["winding"], 0);
    assert_eq!(doc["config"]["symbol"]["rmax"], 1e3);
}

#[test]
fn two_balls_have_one_positive_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let out = twophase(dir.path(), &["spectrum", "compute", "--m", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&dir.path().join("spectrum_compute.json"));
    assert_eq!(doc["result"]["positive_count"], 1);
    assert_eq!(doc["result"]["gates"]["grid_independent"], true);
    let csv = fs::read_to_string(dir.path().join("dispersion.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("curve,l,lambda,b"));
    assert!(csv.lines().any(|l| l.starts_with("block,0,")));
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(twophase(dir.path(), &["equilibrium", "--geometry.radius", "2"]).status.code(), Some(1));
    assert_eq!(twophase(dir.path(), &["equilibrium", "--c0", "2"]).status.code(), Some(1));
    assert_eq!(twophase(dir.path(), &["equilibrium", "--geometry.n"]).status.code(), Some(1));
    assert_eq!(twophase(dir.path(), &["frobnicate"]).status.code(), Some(1));
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[geometry]\nR_outer = 3.0\n").unwrap();
    assert_eq!(twophase(dir.path(), &["equilibrium", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[geometry]\nm = 2\n\n[run]\nseed = 11\n").unwrap();
    let out = twophase(dir.path(), &["equilibrium", "--config", cfg.to_str().unwrap(), "--run.seed", "12"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = read_json(&dir.path().join("equilibrium.json"));
    assert_eq!(doc["config"]["geometry"]["m"], 2);
    assert_eq!(doc["config"]["run"]["seed"], 12);
    assert_eq!(doc["result"]["manifold_dim"], 6);
    assert!(doc["config"]["run"]["margin"].is_f64(), "resolved config materializes defaults");
}

#[test]
fn outputs_are_deterministic_apart_from_metadata() {
    let strip = |p: &Path| -> String {
        fs::read_to_string(p).unwrap().lines().filter(|l| !l.contains("\"timestamp\"")).collect::<Vec<_>>().join("\n")
    };
    for args in [&["entropy", "probe", "--m", "2"][..], &["symbols", "scan"][..]] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert_eq!(twophase(a.path(), args).status.code(), Some(0));
        assert_eq!(twophase(b.path(), args).status.code(), Some(0));
        let name = format!("{}_{}.json", args[0], args[1]);
        assert_eq!(strip(&a.path().join(&name)), strip(&b.path().join(&name)));
    }
}

#[test]
fn help_documents_csv_columns() {
    let out = Command::new(env!("CARGO_BIN_EXE_twophase")).args(["symbols", "scan", "--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("re_r1r2"));
    let out = Command::new(env!("CARGO_BIN_EXE_twophase")).args(["spectrum", "compute", "--help"]).output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("curve, l, lambda, b"));
}

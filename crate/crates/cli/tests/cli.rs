use std::path::Path;
use std::process::{Command, Output};

use fclt_core::conditions::ConditionReport;
use fclt_core::harness::DecayReport;
use fclt_core::ned::NedScan;
use fclt_core::process_sim::Path as SamplePath;
use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fclt-lab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const GARCH: &str = r#"{"model":"garch","omega":0.1,"alpha":[0.1],"beta":[0.8]}"#;

#[test]
fn estimate_three_points() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "p.csv", "x\n1\n2\n3\n");
    let out = lab(&["estimate", "--input", &input, "--p", "0.5", "--r", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["q_hat"].as_f64(), Some(2.0));
    assert!((v["m_hat"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn check_garch_is_satisfied() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "g.json", GARCH);
    let out = lab(&["check", "--spec", &spec, "--r", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let reports: Vec<ConditionReport> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!reports.is_empty());
    assert!(reports.iter().all(|r| r.satisfied));
    let ps = reports.iter().find(|r| r.condition_name == "P_s").unwrap();
    assert!((ps.computed_value - 0.9).abs() < 1e-9);
}

#[test]
fn non_causal_config_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"experiment":"clt","spec":{"model":"arma","phi":[-1.2]},"p":0.5,"r":2,"n":100,"reps":50,"seed":1}"#,
    );
    let out = lab(&["mc", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("root modulus"), "{err}");
    assert!(err.contains("0.8333"), "{err}");
}

#[test]
fn usage_and_io_errors_exit_2() {
    assert_eq!(lab(&["estimate", "--bogus"]).status.code(), Some(2));
    assert_eq!(lab(&["estimate", "--input", "/nonexistent/p.csv"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "s.json", r#"{"model":"nope"}"#);
    assert_eq!(lab(&["check", "--spec", &spec]).status.code(), Some(2));
}

#[test]
fn simulate_round_trips_through_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "g.json", GARCH);
    let csv = dir.path().join("path.csv");
    let out = lab(&["simulate", "--spec", &spec, "--n", "500", "--seed", "3", "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read(&csv).unwrap();
    assert!(!text.contains(&b'\r'));
    let path = SamplePath::read_csv(&text[..]).unwrap();
    assert_eq!(path.len(), 500);

    let manifest: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("path.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["outputs"][0]["path"], s(&csv));

    let est = dir.path().join("est.json");
    let out = lab(&["estimate", "--input", s(&csv), "--p", "0.9", "--r", "1", "--out", s(&est)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&std::fs::read(&est).unwrap()).unwrap();
    let m: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("est.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(v["manifest_hash"], m["manifest_hash"]);
    let direct = fclt_core::estimators::estimator_vector(&path.values, 0.9, 1).unwrap();
    assert_eq!(v["q_hat"].as_f64(), Some(direct.q_hat));
    assert_eq!(v["m_hat"].as_f64(), Some(direct.m_hat));
}

#[test]
fn ned_scan_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "a.json", r#"{"model":"arma","phi":[-0.5]}"#);
    let csv = dir.path().join("ned.csv");
    let out = lab(&[
        "ned-scan", "--spec", &spec, "--functional", "abs_pow:2", "--kmax", "6", "--reps", "16", "--n", "256",
        "--out", s(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("k,nu_hat,se,nu_hat_jk\n"));
    let rows = NedScan::read_csv_rows(text.as_bytes()).unwrap();
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), (1..=6).collect::<Vec<_>>());
    assert!(rows[5].1 < rows[0].1);
}

fn decay_config(dir: &Path) -> String {
    write(
        dir,
        "bahadur.json",
        r#"{"experiment":"bahadur","spec":{"model":"iid"},"p":0.5,"r":2,"n_ladder":[200,800],"reps":40,"seed":11}"#,
    )
}

#[test]
fn mc_writes_report_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = decay_config(dir.path());
    let out_path = dir.path().join("rep.json");
    let out = lab(&["mc", "--config", &cfg, "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(report["experiment"], "bahadur");
    let decay: DecayReport = serde_json::from_value(report.clone()).unwrap();
    let table = std::fs::read_to_string(dir.path().join("rep.csv")).unwrap();
    assert!(table.starts_with("n,median,p90,std,se\n"));
    let rows = DecayReport::read_csv_rows(table.as_bytes()).unwrap();
    assert_eq!(rows.len(), decay.rows.len());
    assert_eq!(rows[1].n, 800);
    let m: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("rep.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(report["manifest_hash"], m["manifest_hash"]);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = decay_config(dir.path());
    let mut bodies = Vec::new();
    let mut printed = Vec::new();
    for threads in ["1", "3"] {
        let out_path = dir.path().join(format!("rep{threads}.json"));
        let out = lab(&["--threads", threads, "mc", "--config", &cfg, "--out", s(&out_path)]);
        assert_eq!(out.status.code(), Some(0));
        let mut v: Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("manifest_hash");
        bodies.push(v);
        let stdout = lab(&["--threads", threads, "mc", "--config", &cfg]).stdout;
        printed.push(stdout);
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(printed[0], printed[1]);
}

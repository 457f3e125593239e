use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qubus::cli::GATE_NAMES;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qubus"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn qubus")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn amp(v: &Value, k: usize) -> (f64, f64) {
    let a = &v["amplitudes"][k];
    (a[0].as_f64().unwrap(), a[1].as_f64().unwrap())
}

#[test]
fn toffoli_flips_vvh() {
    let v = json(&run(&["gate", "toffoli", "--input", "VVH"]));
    let (re, im) = amp(&v, 7);
    assert!(((re * re + im * im) - 1.0).abs() < 1e-9);
    assert!((v["report"]["success_probability"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn every_gate_name_runs() {
    for (name, _) in GATE_NAMES {
        let v = json(&run(&["gate", name, "--seed", "2"]));
        assert_eq!(v["gate"], *name);
        let p = v["report"]["success_probability"].as_f64().unwrap();
        assert!((p - 1.0).abs() < 1e-8, "{name}: success {p}");
    }
}

#[test]
fn output_is_deterministic() {
    let a = run(&["gate", "multi-qubit", "--seed", "5"]);
    let b = run(&["gate", "multi-qubit", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["gate", "multi-qubit", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn decompose_identity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("id.json");
    std::fs::write(&path, "[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]").unwrap();
    let v = json(&run(&["decompose", path.to_str().unwrap()]));
    assert!(v["reconstruction_error"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["mesh"]["modes"], 4);
}

#[test]
fn decompose_rejects_non_unitary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "[[1,1],[0,1]]").unwrap();
    let out = run(&["decompose", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn fig2_files_and_peak_means() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fig2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    for f in ["fig2a.csv", "fig2b_k1.csv", "fig2b_k4.csv", "fig2.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("fig2a.csv")).unwrap();
    assert!(csv.starts_with("n,probability\n"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig2.json")).unwrap()).unwrap();
    let means: Vec<f64> = v["peak_means"].as_array().unwrap().iter().map(|m| m.as_f64().unwrap()).collect();
    for (m, want) in means.iter().zip([12.50, 49.96, 112.3, 199.3]) {
        assert!((m - want).abs() / want < 5e-4, "{m} vs {want}");
    }
}

#[test]
fn sweep_csv_has_header_and_rows() {
    let out = run(&["sweep", data("sweep_pe.json").to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,theta,gamma,theta_probe,eta,beta_sq,index,value"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn run_program_file() {
    let v = json(&run(&["run", data("cn_uk.json").to_str().unwrap()]));
    let (re, im) = amp(&v, 6);
    assert!((re * re + im * im - 1.0).abs() < 1e-9);
}

#[test]
fn verify_golden_dir() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("golden");
    let out = run(&["verify", golden.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 6);
}

#[test]
fn verify_reports_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("golden").join("toffoli.json");
    let mut g: Value = serde_json::from_str(&std::fs::read_to_string(golden).unwrap()).unwrap();
    g["program"]["input"] = Value::String("VVV".into());
    std::fs::write(dir.path().join("bad.json"), g.to_string()).unwrap();
    let out = run(&["verify", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL bad.json"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"gamma": 50.0, "theta_probe": 0.1}"#).unwrap();
    let v = json(&run(&["fig2", "--config", cfg.to_str().unwrap()]));
    assert_eq!(v["gamma"], 50.0);
    assert_eq!(v["theta_probe"], 0.1);
    let v = json(&run(&["fig2", "--config", cfg.to_str().unwrap(), "--gamma", "80"]));
    assert_eq!(v["gamma"], 80.0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["gate", "no-such-gate"]).status.code(), Some(1));
    assert_eq!(run(&["run", "/nonexistent/program.json"]).status.code(), Some(1));
    assert_eq!(run(&["gate", "parity", "--format", "csv"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn validation_errors_exit_two() {
    let out = run(&["gate", "parity", "--theta=-1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["gate", "two-qubit", "--matrix", "[[1,1],[0,1]]"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&run(&["gate", "parity", "--input", "HVH"]).stderr).to_string();
    assert!(msg.contains("parity"), "{msg}");
}

use std::path::Path;
use std::process::{Command, Output};

fn vqelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exactdiag_ising_five() {
    let o = vqelab(&["exactdiag", "--model", "ising", "--qubits", "5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "-4.0");
}

#[test]
fn exactdiag_hubbard_dimer_json() {
    let o = vqelab(&["--format", "json", "exactdiag", "--model", "hubbard", "--sites", "2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let e0 = v["e0"].as_f64().unwrap();
    assert!((e0 - (1.0 - 17f64.sqrt()) / 2.0).abs() < 1e-9);
}

#[test]
fn missing_config_is_a_config_error() {
    let o = vqelab(&["optimize", "--config", "missing.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.toml"));
}

#[test]
fn unknown_subcommand_and_flag_exit_one() {
    assert_eq!(vqelab(&["frobnicate"]).status.code(), Some(1));
    let o = vqelab(&["exactdiag", "--model", "ising", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(vqelab(&["--help"]).status.code(), Some(0));
}

#[test]
fn energy_reports_exact_value() {
    let o = vqelab(&["--format", "json", "energy", "--model", "ising", "--qubits", "3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["value"].as_f64(), Some(-2.0));
    assert_eq!(vqelab(&["energy", "--model", "ising", "--theta", "1,2"]).status.code(), Some(1));
}

fn read_matrix(path: &Path) -> (Vec<f64>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut rows = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>());
    let header = rows.next().unwrap();
    (header, rows.collect())
}

#[test]
fn h2_scan_has_false_minima() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = vqelab(&[
        "--seed", "1", "--out-dir", out, "scan", "--model", "h2", "--shots", "512", "--grid", "81",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let path = dir.path().join("scan-h2-512-81.dat");
    let (header, rows) = read_matrix(&path);
    assert_eq!(header.len(), 82);
    assert_eq!(header[0], 81.0);
    assert_eq!(rows.len(), 81);
    assert!(rows.iter().all(|r| r.len() == 82));
    let e0 = -1.137306035753;
    let below = rows.iter().flat_map(|r| &r[1..]).filter(|&&v| v < e0).count();
    assert!(below > 0);
}

const CONFIG: &str = r#"
name = "ising3-cma"
n_runs = 2
seed = 4
budget = 400
[hamiltonian]
model = "ising"
qubits = 3
[optimizer]
algorithm = "cma_es"
[noise]
mode = "sampled"
shots = 128
"#;

#[test]
fn optimize_then_summarize_and_bias() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("runs");
    let o = vqelab(&[
        "--out-dir",
        out.to_str().unwrap(),
        "--format",
        "csv",
        "optimize",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert!(csv.starts_with("label,config_hash"));
    assert!(csv.contains("ising3-cma"));

    let o = vqelab(&["summarize", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("ising3-cma"));

    let trace = std::fs::read_dir(out.join("traces"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let o = vqelab(&["--format", "json", "bias", "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["bias"]["predicted_bias"].as_f64().unwrap() < 0.0);
    assert!(v["bias"]["sigma_noise"].as_f64().unwrap() > 0.0);
}

#[test]
fn hessian_at_h2_optimum_is_psd() {
    let o = vqelab(&["--format", "json", "hessian", "--model", "h2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["lambda_min"].as_f64().unwrap() >= -1e-6);
    assert!(v["eta_max"].as_f64().unwrap() > 0.0);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn fracmag(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracmag"))
        .args(args)
        .env("FRACMAG_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&out.stderr)))
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

const SMALL_1D: &str = r#"{
  "domain": {"kind": "interval", "bounds": [-1, 1]},
  "resolution": 12, "s": 0.4,
  "potential": {"family": "constant", "a": [1.0]},
  "m_max": 5, "courant_trials": 50, "output_dir": "run"
}"#;

#[test]
fn spectrum_writes_sorted_csv_and_embeds_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL_1D);
    let out = fracmag(&["spectrum", "-c", &cfg], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("run");
    let csv = std::fs::read_to_string(dir.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("# config_hash: "));
    let rows = data_lines(&csv);
    assert_eq!(rows[0], "m,beta,multiplicity_cluster");
    assert_eq!(rows.len(), 1 + 5);
    let betas: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(betas.windows(2).all(|w| w[0] <= w[1]));

    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["resolution"], 12);
    assert_eq!(json["config_hash"].as_str().unwrap().len(), 64);
    let courant: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("courant_report.json")).unwrap()).unwrap();
    assert_eq!(courant["courant"]["total_violations"], 0);
}

#[test]
fn reproducible_runs_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL_1D);
    let run = || {
        let out = fracmag(&["spectrum", "-c", &cfg, "--reproducible"], tmp.path());
        assert!(out.status.success());
        std::fs::read(tmp.path().join("run/spectrum.csv")).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
}

#[test]
fn rejects_n_le_2s_with_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL_1D);
    let out = fracmag(&["spectrum", "-c", &cfg, "--s", "0.6"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("N > 2s violated"));
}

#[test]
fn missing_or_malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fracmag(&["solve", "-c", "/nonexistent/config.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["exit_code"], 2);
    let cfg = write_config(tmp.path(), "c.json", r#"{"domain": {"kind": "interval", "bounds": [-1, 1]}, "resolution": 8, "s": 0.3, "typo": 1}"#);
    assert_eq!(fracmag(&["spectrum", "-c", &cfg], tmp.path()).status.code(), Some(2));
}

#[test]
fn zero_family_finds_only_trivial() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("zero_family_1d.json");
    let out = fracmag(&["solve", "-c", cfg.to_str().unwrap()], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("zero_family_1d/summary.csv")).unwrap();
    let rows = data_lines(&csv);
    assert_eq!(rows.len(), 2, "{csv}");
    assert!(rows[1].contains(",trivial,"));
    assert!(tmp.path().join("zero_family_1d/linking_diagnostics.json").exists());
}

#[test]
fn multiplicity_demo_lists_two_orbits() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("multiplicity_1d.json");
    let out = fracmag(&["solve", "-c", cfg.to_str().unwrap()], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["nontrivial_orbits"].as_u64().unwrap() >= 2);
    let sol: Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("multiplicity_1d/solutions.json")).unwrap(),
    )
    .unwrap();
    let n = sol["result"]["solutions"]["solutions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["trivial"] == false)
        .count();
    assert!(n >= 2);
}

#[test]
fn resonant_beta_inf_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL_1D);
    let out = fracmag(&["spectrum", "-c", &cfg], tmp.path());
    let beta2 = serde_json::from_slice::<Value>(&out.stdout).unwrap()["eigenvalues"][1].as_f64().unwrap();
    let text = SMALL_1D.replace(
        r#""m_max": 5,"#,
        r#""m_max": 5, "problem": {"beta_inf": {"mode": "absolute", "value": 0}, "nonlinearity": {"family": "zero"}},"#,
    );
    let cfg = write_config(tmp.path(), "p.json", &text);
    let out = fracmag(&["solve", "-c", &cfg, "--beta-inf", &format!("{beta2:e}")], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_json(&out)["error"], "precondition");
}

#[test]
fn sweep_s_shape_and_empty_list() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("sweep_s_2d.json");
    let cfg = cfg.to_str().unwrap();
    let out = fracmag(&["sweep-s", "-c", cfg, "--resolution", "5"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("sweep_s_2d/beta_vs_s.csv")).unwrap();
    let rows = data_lines(&csv);
    assert_eq!(rows[0], "s,beta1,abs_diff_local,kind");
    assert_eq!(rows.len(), 1 + 4 + 1);
    assert!(rows[5].starts_with("1,") && rows[5].ends_with(",local"));
    assert!(tmp.path().join("sweep_s_2d/beta_vs_s_long.csv").exists());

    let empty = write_config(
        tmp.path(),
        "e.json",
        r#"{"domain": {"kind": "rectangle", "bounds": [[-1, 1], [-1, 1]]}, "resolution": 5, "s": 0.5}"#,
    );
    assert_eq!(fracmag(&["sweep-s", "-c", &empty], tmp.path()).status.code(), Some(2));
    let out = fracmag(&["sweep-s", "-c", &empty, "--s-list", "0.5,1.2"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_passes_demo_and_flags_constant_family() {
    let tmp = tempfile::tempdir().unwrap();
    let demo = configs().join("multiplicity_1d.json");
    let out = fracmag(&["validate", "-c", demo.to_str().unwrap(), "--resolution", "24"], tmp.path());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{report:#}");
    let checks = report["validation"]["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["check"] == "assembly_vs_reference"));
    let oracle = checks.iter().find(|c| c["check"] == "eigensolver_vs_reference").unwrap();
    assert_eq!(oracle["detail"]["resolution"], 8);

    let text = std::fs::read_to_string(&demo)
        .unwrap()
        .replace(r#""family": "rational""#, r#""family": "constant""#);
    let bad = write_config(tmp.path(), "bad.json", &text);
    let out = fracmag(&["validate", "-c", &bad, "--resolution", "12"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let nl = report["validation"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["check"] == "nonlinearity")
        .unwrap();
    assert_eq!(nl["passed"], false);
}

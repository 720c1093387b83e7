use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const ROTATION: &str = r#"{
  "space": { "dim": 2 },
  "operator": { "name": "rotation", "theta": 1.5707963267948966 },
  "start": [1.0, 0.0],
  "schedule": { "family": { "name": "classical_km", "beta": 0.5 } },
  "run": { "horizon": 35000, "k_max": 15 }
}"#;

const IDENTITY: &str = r#"{
  "space": { "dim": 2 },
  "operator": { "name": "identity" },
  "start": [1.0, 0.0],
  "schedule": { "family": { "name": "classical_km", "beta": 0.5 } }
}"#;

const EXAMPLE2: &str = r#"{
  "space": { "dim": 3 },
  "operator": { "name": "ball_projection", "center": [0.0, 0.0, 0.0], "radius": 1.0 },
  "start": [2.0, 0.0, 0.0],
  "schedule": { "family": { "name": "example2", "lambda": 0.5, "j": 2, "l": 1 } },
  "run": { "k_max": 5 }
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_km-rates"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn phi_column(csv: &str) -> Vec<u128> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn catalog_lists_operators_and_families() {
    let o = run(&["catalog"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    for n in ["rotation", "ball_projection", "example2", "anchor"] {
        assert!(names.contains(&n), "{n} missing");
    }
    let o = run(&["catalog", "--format", "csv"]);
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .starts_with("kind,name,description"));
}

#[test]
fn certify_rotation_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rot.json", ROTATION);
    let o = run(&[
        "certify",
        "--config",
        cfg.to_str().unwrap(),
        "--k-max",
        "3",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        phi_column(&String::from_utf8(o.stdout).unwrap()),
        vec![132, 516, 1156, 2052]
    );
}

#[test]
fn certify_identity_gives_same_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "id.json", IDENTITY);
    let o = run(&[
        "certify",
        "--config",
        cfg.to_str().unwrap(),
        "--k-max",
        "3",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        phi_column(&String::from_utf8(o.stdout).unwrap()),
        vec![132, 516, 1156, 2052]
    );
}

#[test]
fn certify_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e2.json", EXAMPLE2);
    let out = dir.path().join("out");
    let o = run(&[
        "certify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v: Value =
        serde_json::from_str(&fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    let c = &v["instance"]["constants"];
    assert_eq!(
        (c["b"].as_u64(), c["m0"].as_u64(), c["m"].as_u64()),
        (Some(1), Some(3), Some(4))
    );
    assert_eq!((c["m_ab"].as_u64(), c["m_r"].as_u64()), (Some(2), Some(0)));
    assert_eq!(v["certificate"]["formula_tag"], "Example2");
    assert_eq!(v["certificate"]["rows"][0]["phi"].as_u64(), Some(1291));
    assert_eq!(v["certificate"]["rows"].as_array().unwrap().len(), 6);
    let csv = fs::read_to_string(out.join("certificate.csv")).unwrap();
    assert_eq!(phi_column(&csv)[0], 1291);
}

#[test]
fn run_rotation_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rot.json", ROTATION);
    let out = dir.path().join("out");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--horizon",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,res_T,res_step,K_zn,norm_xn,dist_xz"
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    for (n, r) in rows.iter().enumerate() {
        let res: f64 = r[1].parse().unwrap();
        let want = 2f64.sqrt() * (0.5f64.sqrt()).powi(n as i32);
        assert!((res - want).abs() <= 1e-9, "n={n}");
    }
    let audit: Value =
        serde_json::from_str(&fs::read_to_string(out.join("audit.json")).unwrap()).unwrap();
    assert_eq!(audit["audit"]["violations"].as_array().unwrap().len(), 0);
    assert_eq!(audit["horizon"].as_u64(), Some(100));
}

#[test]
fn run_identity_at_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "id.json",
        &IDENTITY.replace("[1.0, 0.0]", "[0.0, 0.0]"),
    );
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--horizon",
        "50",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for l in text.lines().skip(1) {
        let res: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(res, 0.0);
    }
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e2.json", EXAMPLE2);
    let read = |sub: &str| {
        let out = dir.path().join(sub);
        let o = run(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--horizon",
            "2000",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        (
            fs::read(out.join("trajectory.csv")).unwrap(),
            fs::read(out.join("audit.json")).unwrap(),
        )
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn corrupted_schedule_rejected_before_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{
          "space": { "dim": 2 },
          "operator": { "name": "identity" },
          "start": [1.0, 0.0],
          "schedule": { "family": { "name": "custom",
            "alpha": [0.5, 0.5, 0.5, 0.5, 0.5, 0.0, 0.5],
            "beta":  [0.5, 0.5, 0.5, 0.5, 0.5, 1.2, 0.5],
            "sigma2": { "mul": 4, "add": 0 } } }
        }"#,
    );
    let out = dir.path().join("out");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(!out.join("trajectory.csv").exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("n = 5"));
}

#[test]
fn malformed_config_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{ not json");
    assert_eq!(
        code(&run(&["certify", "--config", cfg.to_str().unwrap()])),
        2
    );
    assert_eq!(
        code(&run(&["certify", "--config", "/nonexistent/config.json"])),
        2
    );
    let cfg = write_config(
        dir.path(),
        "dim.json",
        &ROTATION.replace("[1.0, 0.0]", "[1.0]"),
    );
    assert_eq!(code(&run(&["run", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn overflow_is_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "lp64.json",
        r#"{
          "space": { "dim": 2, "norm_kind": { "lp": 64.0 } },
          "operator": { "name": "coordinate_shrink", "factors": [0.5, 0.5] },
          "start": [3.0, 0.0],
          "schedule": { "family": { "name": "classical_km", "beta": 0.5 } },
          "certificate": { "formula": "general" }
        }"#,
    );
    let o = run(&["certify", "--config", cfg.to_str().unwrap(), "--k-max", "0"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_rotation_passes_with_slack() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rot.json", ROTATION);
    let out = dir.path().join("out");
    let o = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value =
        serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    let rows = v["res_t"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    for r in rows {
        assert_eq!(r["pass"], true);
        assert!(r["slack_factor"].as_f64().unwrap() >= 10.0);
    }
    let csv = fs::read_to_string(out.join("soundness_res_T.csv")).unwrap();
    assert!(csv.starts_with("k,bound,empirical_first_index,max_excess,pass,truncated"));
    assert!(out.join("soundness_res_step.csv").exists());
}

#[test]
fn verify_example2_auto_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e2.json", EXAMPLE2);
    let o = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let h = v["horizon"].as_u64().unwrap();
    assert!((40_000..=50_000).contains(&h), "horizon {h}");
    assert_eq!(v["res_t"]["rows"][0]["bound"].as_u64(), Some(1291));
}

#[test]
fn verify_negative_control_phi_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = ROTATION.replace(
        "\"run\": {",
        "\"certificate\": { \"phi_constant\": 0 },\n  \"run\": {",
    );
    let cfg = write_config(dir.path(), "neg.json", &text);
    let o = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--horizon",
        "1000",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 5);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], false);
    let failing: Vec<u64> = v["res_t"]["rows"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["pass"] == false)
        .map(|r| r["k"].as_u64().unwrap())
        .collect();
    assert!(failing.contains(&1));
}

#[test]
fn audit_command_reports_all_parts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rot.json", ROTATION);
    let o = run(&[
        "audit",
        "--config",
        cfg.to_str().unwrap(),
        "--horizon",
        "5000",
        "--seed",
        "7",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["hypotheses"]["findings"].as_array().unwrap().is_empty());
    assert!(v["nonexpansive"]["first_violation"].is_null());
    assert_eq!(v["inequalities"]["violations"].as_array().unwrap().len(), 0);
}

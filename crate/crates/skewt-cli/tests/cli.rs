//! End-to-end tests of the `skewt` binary: exit codes, output schemas,
//! determinism, and the documented numeric examples.

#![allow(clippy::excessive_precision)] // frozen reference digits

use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn skewt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn constants_cauchy_values() {
    let out = skewt(&["constants", "--eta", "1", "--rho", "0", "--theta1", "0", "--theta2", "0"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!((v["c1"].as_f64().unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-12);
    assert!((v["d1"].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-12);
    for key in [
        "lambda1", "lambda2", "c1", "d1", "c2", "d2", "ratio", "first_order", "a21", "a12",
        "L1", "L2", "lambda_L", "k21", "k12", "k", "prefactor",
    ] {
        assert!(v.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(v["manifest"]["command"], "constants");
}

#[test]
fn constants_symmetric_lambda() {
    let out = skewt(&["constants", "--eta", "2", "--rho", "0"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!((v["lambda_L"].as_f64().unwrap() - 0.18169011381620932).abs() < 1e-6);
}

#[test]
fn constants_equiskew_first_order_vanishes() {
    let out = skewt(&["constants", "--eta", "3", "--rho", "0.4", "--theta1", "1", "--theta2", "1"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["first_order"].as_f64().unwrap(), 0.0);
}

#[test]
fn constants_requires_eta() {
    let out = skewt(&["constants", "--rho", "0.2"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn invalid_parameters_exit_2() {
    let out = skewt(&["constants", "--eta", "-1"]);
    assert_eq!(code(&out), 2);
    let out = skewt(&["constants", "--eta", "2", "--rho", "1.5"]);
    assert_eq!(code(&out), 2);
    let out = skewt(&["rate", "--eta", "2", "--points", "3"]);
    assert_eq!(code(&out), 2);
    let out = skewt(&["rate", "--eta", "2", "--u-hi", "0.5"]);
    assert_eq!(code(&out), 2);
    let out = skewt(&["lambda", "--eta", "2", "--u", "1.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn numerical_failure_exits_3() {
    // A depth budget of 1 cannot meet the default tolerances.
    let out = skewt(&["lambda", "--eta", "2", "--u", "0.01", "--max-depth", "1"]);
    assert_eq!(code(&out), 3);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("lambda"), "stderr names the failing step: {msg}");
}

#[test]
fn rate_summary_matches_theory() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("rate.csv");
    let out = skewt(&[
        "rate", "--eta", "2", "--rho", "0.5", "--u-lo", "1e-3", "--u-hi", "1e-2",
        "--points", "4", "--out", csv_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!((v["slope"].as_f64().unwrap() - 1.0).abs() < 0.15);
    assert_eq!(v["theory_slope"].as_f64().unwrap(), 1.0);
    assert!(v["r_squared"].as_f64().unwrap() > 0.99);

    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "u,lambda_u,abs_diff,log_u,log_abs_diff");
    assert_eq!(lines.count(), 4);
}

#[test]
fn quantile_cauchy_row_and_regime_warning() {
    let out = skewt(&["quantile", "--eta", "1", "--margin", "1", "--u", "0.01,0.5"]);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8_lossy(&out.stdout);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "u,numeric,asymptotic,rel_err");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let numeric: f64 = first[1].parse().unwrap();
    let asym: f64 = first[2].parse().unwrap();
    assert!((numeric - -31.820515953773958).abs() < 1e-5);
    assert!((asym - -31.820516642867101).abs() < 1e-9);
    // Report lands on stderr when the CSV takes stdout.
    let report: Value = serde_json::from_slice(&out.stderr).unwrap();
    let warnings = report["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("0.5")));
}

#[test]
fn quantile_rel_err_shrinks_into_the_tail() {
    let out = skewt(&[
        "quantile", "--eta", "2", "--rho", "0.5", "--theta1", "1", "--theta2", "1",
        "--u", "1e-2,1e-3,1e-4",
    ]);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8_lossy(&out.stdout);
    let errs: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errs.len(), 3);
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "rel_err not shrinking: {errs:?}");
}

#[test]
fn sample_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = skewt(&[
            "sample", "--eta", "3", "--rho", "0.4", "--theta1", "1", "--theta2", "-0.5",
            "-n", "2000", "--seed", "7", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        let v = stdout_json(&out);
        assert_eq!(v["manifest"]["seed"].as_u64().unwrap(), 7);
        assert!(v["manifest"]["generator"]
            .as_str()
            .unwrap()
            .contains("chacha12"));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn sample_validation_and_io_errors() {
    let out = skewt(&["sample", "--eta", "2", "-n", "0"]);
    assert_eq!(code(&out), 2);
    let out = skewt(&[
        "sample", "--eta", "2", "-n", "10", "--out", "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(code(&out), 4);
}

#[test]
fn csv_numbers_reformat_to_identity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = skewt(&[
        "sample", "--eta", "2", "--rho", "0.3", "-n", "50", "--seed", "3",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&path).unwrap();
    for line in text.lines().skip(1) {
        for field in line.split(',') {
            let x: f64 = field.parse().unwrap();
            assert_eq!(format!("{x:.16e}"), field);
        }
    }
}

fn write_csv(path: &Path, rows: &[(f64, f64)]) {
    let mut s = String::from("x1,x2\n");
    for (a, b) in rows {
        s.push_str(&format!("{a:.16e},{b:.16e}\n"));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn empirical_comonotone_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("in.csv");
    let rows: Vec<(f64, f64)> = (0..5000).map(|i| (i as f64 * 0.01 - 2.0, i as f64 * 0.01 - 2.0)).collect();
    write_csv(&path, &rows);
    let out = skewt(&["empirical", path.to_str().unwrap(), "--u", "0.05,0.2"]);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8_lossy(&out.stdout);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "u,lambda_hat,count,std_err");
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), 1.0);
        assert_eq!(fields[3].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn empirical_matches_constants_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("draws.csv");
    let out = skewt(&[
        "sample", "--eta", "3", "--rho", "0.4", "--theta1", "1", "--theta2", "-0.5",
        "-n", "200000", "--seed", "12", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);

    let out = skewt(&["empirical", path.to_str().unwrap(), "--u", "0.02"]);
    assert_eq!(code(&out), 0);
    let line = String::from_utf8_lossy(&out.stdout);
    let fields: Vec<&str> = line.lines().nth(1).unwrap().split(',').collect();
    let lambda_hat: f64 = fields[1].parse().unwrap();
    let std_err: f64 = fields[3].parse().unwrap();

    let out = skewt(&[
        "lambda", "--eta", "3", "--rho", "0.4", "--theta1", "1", "--theta2", "-0.5",
        "--u", "0.02",
    ]);
    assert_eq!(code(&out), 0);
    let line = String::from_utf8_lossy(&out.stdout);
    let lambda_u: f64 = line.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(
        (lambda_hat - lambda_u).abs() <= 4.0 * std_err,
        "empirical {lambda_hat} vs quadrature {lambda_u} (se {std_err})"
    );
}

#[test]
fn empirical_malformed_csv_exits_2_naming_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "x1,x2\n1.0,2.0\noops\n").unwrap();
    let out = skewt(&["empirical", path.to_str().unwrap(), "--u", "0.1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn empirical_warns_on_thin_tail() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("thin.csv");
    let rows: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, -(i as f64))).collect();
    write_csv(&path, &rows);
    let out = skewt(&["empirical", path.to_str().unwrap(), "--u", "0.05"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(report["warnings"][0].as_str().unwrap().contains("unreliable"));
}

#[test]
fn config_file_defaults_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("skewt.conf");
    fs::write(&path, "eta = 1\nrho = 0\n# comment\ntheta1 = 0\ntheta2 = 0\n").unwrap();
    let out = skewt(&["constants", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!((v["c1"].as_f64().unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-12);

    // Flag wins over the file.
    let out = skewt(&["constants", "--config", path.to_str().unwrap(), "--eta", "2"]);
    let v = stdout_json(&out);
    assert_eq!(v["manifest"]["parameters"]["eta"].as_f64().unwrap(), 2.0);
    assert!((v["d1"].as_f64().unwrap() + 1.5).abs() < 1e-12);
}

#[test]
fn json_format_emits_array_rows() {
    let out = skewt(&["quantile", "--eta", "2", "--u", "0.01,0.02", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let rows: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["numeric"].as_f64().unwrap() < 0.0);
    assert!(rows[0]["rel_err"].as_f64().unwrap() >= 0.0);
}

#[test]
fn sample_json_format() {
    let out = skewt(&["sample", "--eta", "2", "-n", "5", "--seed", "9", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let rows: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows[0]["x1"].is_f64() && rows[0]["x2"].is_f64());
}

#[test]
fn reruns_are_identical_except_duration() {
    let args = ["constants", "--eta", "2.5", "--rho", "-0.3", "--theta1", "0.7", "--theta2", "0.1"];
    let mut a = stdout_json(&skewt(&args));
    let mut b = stdout_json(&skewt(&args));
    a["manifest"]
        .as_object_mut()
        .unwrap()
        .remove("duration_seconds");
    b["manifest"]
        .as_object_mut()
        .unwrap()
        .remove("duration_seconds");
    assert_eq!(a, b);
}

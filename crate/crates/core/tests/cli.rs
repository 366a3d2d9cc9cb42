use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ncfbm::cli::REPORT_SCHEMA;
use ncfbm::integrators::CSV_HEADER;
use serde_json::Value;

fn ncfbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncfbm")).args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn validate(report: &Value) {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn dual_check_example_exits_zero() {
    let out = ncfbm(&["check", "dual", "--hurst", "0.5", "--degree", "3", "--trials", "50", "--tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
}

#[test]
fn ito_strato_example_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("strato");
    let out = ncfbm(&[
        "experiment", "ito-strato", "--p", "x^2", "--q", "x", "--hurst", "0.4", "--interval", "0:1", "--levels", "4:9",
        "--out", prefix.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("strato.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 6);
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
    let json = read_json(&dir.path().join("strato.json"));
    validate(&json);
    assert_eq!(json["command"], "experiment ito-strato");
    assert_eq!(json["rows"].as_array().unwrap().len(), 6);
    assert!(json["rows"][0]["diff_prev_l2"].is_null());
    assert_eq!(json["config"]["p"], "x^2");
}

#[test]
fn young_regime_guard() {
    let out = ncfbm(&["integrate", "--kind", "young", "--hurst", "0.4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("regime violation: young requires H>1/2"));
}

#[test]
fn verdict_failure_exits_one() {
    let out = ncfbm(&["integrate", "rough", "--hurst", "0.4", "--p", "x", "--levels", "2:3", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out.stdout));
}

#[test]
fn grammar_errors_exit_two_with_offsets() {
    for (args, offset) in [
        (vec!["integrate", "rough", "--hurst", "0.4", "--p", "x^^2"], "offset 2"),
        (vec!["trace", "--hurst", "0.5", "--word", "X(0.5"], "offset 5"),
        (vec!["trace", "--hurst", "0.5", "--word", "X(2,1)"], "domain error"),
        (vec!["trace", "--hurst", "0.5"], "--word"),
        (vec!["trace", "--hurst", "0.5", "--word", "X(1)", "--bogus"], "--bogus"),
    ] {
        let out = ncfbm(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(text(&out.stderr).contains(offset), "{args:?}: {}", text(&out.stderr));
    }
}

#[test]
fn config_file_with_cli_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# trace setup\nhurst = 0.9\nword = X(0.5) X(1)\nformat = json\n").unwrap();
    let prefix = dir.path().join("t");
    let args = ["trace", "--config", cfg.to_str().unwrap(), "--hurst", "0.5", "--out", prefix.to_str().unwrap()];
    let out = ncfbm(&args);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(!dir.path().join("t.csv").exists());
    let json = read_json(&dir.path().join("t.json"));
    validate(&json);
    assert_eq!(json["config"]["hurst"], 0.5);
    // R_{1/2}(0.5, 1) = 0.5.
    assert!((json["results"]["trace"].as_f64().unwrap() - 0.5).abs() < 1e-15);

    fs::write(&cfg, "hurst = 0.5\nlevels = 4\ncolour = red\n").unwrap();
    let out = ncfbm(&["trace", "--config", cfg.to_str().unwrap(), "--word", "X(1)"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("unknown config key"));
}

#[test]
fn snapping_warning_on_stderr() {
    let out = ncfbm(&["trace", "--hurst", "0.5", "--word", "X(0.1) X(0.1)"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stderr).contains("snapped"));
}

#[test]
fn matrix_crosscheck_small() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("m");
    let out = ncfbm(&[
        "matrix-crosscheck", "--hurst", "0.6", "--word", "X(1) X(1)", "--dim", "8", "--samples", "200", "--seed", "5",
        "--out", prefix.to_str().unwrap(), "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    let json = read_json(&dir.path().join("m.json"));
    validate(&json);
    assert_eq!(json["results"]["wick"], 1.0);
    let out = ncfbm(&["matrix-crosscheck", "--hurst", "0.6", "--word", "X(0.5,1)"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identify_ito_and_rough_case() {
    let out = ncfbm(&["check", "identify-ito", "--hurst", "0.5", "--p", "x^2", "--q", "x", "--levels", "3:4"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    let out = ncfbm(&["experiment", "rough-case", "--hurst", "0.45", "--levels", "2:5", "--area-extra", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    assert!(text(&out.stdout).starts_with(CSV_HEADER));
    let out = ncfbm(&["experiment", "rough-case", "--hurst", "0.6"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    let out = ncfbm(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("matrix-crosscheck"));
}

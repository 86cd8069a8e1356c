//! The `peakload` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn peakload(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peakload"))
        .arg("run")
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bundled_scenario_passes_and_writes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("paper_table1.json");
    let o = peakload(&[path.to_str().unwrap(), "--counterfactual"], dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}{}",
        stdout(&o),
        String::from_utf8_lossy(&o.stderr)
    );
    for f in ["operating.csv", "capacity.csv", "checks.json", "price_series.csv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let operating = std::fs::read_to_string(dir.path().join("operating.csv")).unwrap();
    let mut lines = operating.lines();
    assert_eq!(lines.next(), Some("scenario,period,lambda,ell,q_P,q_B,q_plus,q_minus"));
    assert_eq!(lines.count(), 4);
    let capacity = std::fs::read_to_string(dir.path().join("capacity.csv")).unwrap();
    assert_eq!(capacity.lines().next(), Some("scenario,K_P,K_B,K_s,E"));
    let checks: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("checks.json")).unwrap()).unwrap();
    assert_eq!(checks["passed"], true);
    assert!(checks["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["name"] == "price_decomposition"));
}

#[test]
fn no_storage_only_emits_the_counterfactual_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("paper_table1.json");
    let o = peakload(&[path.to_str().unwrap(), "--no-storage-only"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let capacity = std::fs::read_to_string(dir.path().join("capacity.csv")).unwrap();
    let rows: Vec<&str> = capacity.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("without_storage,"));
    let series = std::fs::read_to_string(dir.path().join("price_series.csv")).unwrap();
    assert!(!series.contains("difference,"));
}

#[test]
fn malformed_json_names_the_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"cycles_n\": 365,\n  \"periods\": [,]\n}\n").unwrap();
    let o = peakload(&[bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    // the stray comma is at byte 35
    assert!(err.contains("byte 35"), "{err}");
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = peakload(&["/nonexistent/scenario.json"], dir.path());
    assert_eq!(o.status.code(), Some(6));
}

#[test]
fn tight_price_tolerance_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("paper_table1.json");
    let o = peakload(&[path.to_str().unwrap(), "--tolerance-prices", "0.01"], dir.path());
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reference.lambda_onp"));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn text_and_json_render_the_same_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("paper_table1.json");
    let text = stdout(&peakload(&[path.to_str().unwrap(), "--counterfactual"], dir.path()));
    let json = stdout(&peakload(
        &[path.to_str().unwrap(), "--counterfactual", "--format", "json"],
        dir.path(),
    ));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for row in v["tables"]["operating"].as_array().unwrap() {
        let lambda = row["lambda"].as_f64().unwrap();
        let ell = row["ell"].as_f64().unwrap();
        assert!(text.contains(&format!("{lambda:.4}")), "{lambda} not in text output");
        assert!(text.contains(&format!("{ell:.4}")));
    }
}

#[test]
fn csv_format_prints_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("no_storage.json");
    let o = peakload(&[path.to_str().unwrap(), "--format", "csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("scenario,period,lambda,ell,q_P,q_B,q_plus,q_minus\n"));
    assert!(out.contains("scenario,K_P,K_B,K_s,E\n"));
}

#[test]
fn bad_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = peakload(&["x.json", "--format", "xml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

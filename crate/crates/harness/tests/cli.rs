use std::process::Command;

use improper_harness::experiments::RatioRow;
use improper_harness::output::read_csv;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_improper-ic"))
}

#[test]
fn ratio_writes_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ratio.csv");
    let status = cli()
        .args([
            "ratio", "--count", "3", "--trials", "50", "--grid", "7,4,12,1", "--out",
        ])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# improper-ic "));
    let rows: Vec<RatioRow> = read_csv(&text).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.bound_ok && r.ratio > 0.0));
}

#[test]
fn table_emits_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.json");
    let status = cli()
        .args(["table", "--trials", "100", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["meta"]["units"], "bits");
    assert!(
        v["result"]["separate"]["sum"].as_f64().unwrap()
            > v["result"]["proper"]["sum"].as_f64().unwrap()
    );
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"kind": "ratio", "unknown_field": 1}"#).unwrap();
    let out = cli()
        .args(["ratio", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = cli()
        .args(["convert", "to-complex", "--q", "1,2,3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = cli().args(["ratio", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn convert_roundtrip() {
    let out = cli()
        .args([
            "convert",
            "to-real",
            "--c",
            "10",
            "--ct-mag",
            "9.546",
            "--ct-phase",
            "0.5512",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let got: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    let want = [9.0660, 2.4998, 2.4998, 0.9340];
    assert_eq!(got.len(), 4);
    assert!(
        got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 2e-3),
        "{text}"
    );
}

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subdiffcq")).args(args).output().unwrap()
}

fn error_kind(out: &Output) -> String {
    assert!(!out.status.success());
    let line = String::from_utf8(out.stderr.clone()).unwrap();
    let value: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    value["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn scalar_study_prints_csv() {
    let out = run(&["study", "--case", "scalar", "--alpha", "0.5", "--k", "2", "--m", "2", "--N", "16,32,64"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,error,rate");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("16,") && lines[1].ends_with(','));
    let rate: f64 = lines[3].rsplit(',').next().unwrap().parse().unwrap();
    assert!((rate - 2.0).abs() < 0.3, "{rate}");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("case.json");
    let out_path = dir.path().join("rows.md");
    std::fs::write(
        &config,
        r#"{"case": "scalar", "alpha": 0.5, "k": 1, "m": 1, "N": [8, 16], "format": "csv", "prec-bits": 128}"#,
    )
    .unwrap();
    let out = run(&[
        "study",
        "--config",
        config.to_str().unwrap(),
        "--format",
        "markdown",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("N=8") && text.contains("N=16") && text.contains("| rate |"));
}

#[test]
fn oracle_compare_on_scalar_case() {
    let out = run(&["oracle-compare", "--case", "scalar", "--alpha", "0.5", "--k", "3", "--m", "3", "--N", "16,32"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn weights_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    let out = run(&["weights", "--k", "1", "--order", "1", "--n", "4", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "j,weight");
    // δ(ξ) = 1 - ξ
    assert!(lines[1].starts_with("0,1"));
    assert!(lines[2].starts_with("1,-1"));
    assert_eq!(lines.len(), 6);
}

#[test]
fn errors_are_reported_as_json() {
    assert_eq!(error_kind(&run(&["weights", "--k", "7", "--order", "0.5", "--n", "4"])), "invalid-order");
    assert_eq!(error_kind(&run(&["study", "--case", "nope", "--alpha", "0.5", "--k", "1", "--m", "1"])), "parse");
    assert_eq!(error_kind(&run(&["study", "--case", "b-prod", "--alpha", "0.5", "--k", "1", "--m", "1"])), "config");
    assert_eq!(error_kind(&run(&["study", "--alpha", "0.5", "--k", "1"])), "config");
    assert_eq!(
        error_kind(&run(&["study", "--case", "scalar", "--alpha", "0.5", "--k", "1", "--m", "1", "--N", "8,20"])),
        "config"
    );
}

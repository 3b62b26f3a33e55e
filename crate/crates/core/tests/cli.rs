use std::process::{Command, Output};

use serde_json::Value;

fn roe_kms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roe-kms")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn zsweep_on_squares_matches_basel_partial_sum() {
    let out = roe_kms(&["zsweep", "--space", "squares:200", "--beta", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let z = json(&out)["result"][0]["z"].as_f64().unwrap();
    let partial: f64 = (1..=200).map(|k| 1.0 / (k as f64 * k as f64)).sum();
    assert!((z - partial).abs() < 1e-12, "{z} vs {partial}");
    assert!((z - std::f64::consts::PI.powi(2) / 6.0).abs() < 0.005);
}

#[test]
fn kms_audit_passes_on_gibbs_state() {
    let out = roe_kms(&["kms-audit", "--space", "tree:2:5", "--beta", "1", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["result"]["passes"], true);
    assert!(v["result"]["report"]["defect_direct"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn kms_audit_writes_weights_and_fails_below_rounding() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weights.csv");
    let out = roe_kms(&["kms-audit", "--space", "tree:2:5", "--beta", "1", "--tol", "0", "--weights", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["result"]["passes"], false);
    let mut rows = csv::Reader::from_path(&path).unwrap();
    let total: f64 = rows.records().map(|r| r.unwrap()[2].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let args = ["kms-audit", "--space", "interval:30", "--beta", "0.5", "--seed", "3"];
    assert_eq!(roe_kms(&args).stdout, roe_kms(&args).stdout);
    let args = ["critical", "--family", "tree:2", "--beta-min", "0", "--beta-max", "1.5", "--steps", "16", "--depths", "64,128,256"];
    assert_eq!(roe_kms(&args).stdout, roe_kms(&args).stdout);
}

#[test]
fn thread_count_does_not_change_output() {
    let base = ["tree-report", "-n", "3", "--beta-min", "0.5", "--beta-max", "2", "--steps", "31"];
    let one: Vec<&str> = base.iter().copied().chain(["--threads", "1"]).collect();
    let four: Vec<&str> = base.iter().copied().chain(["--threads", "4"]).collect();
    let (a, b) = (roe_kms(&one), roe_kms(&four));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let audit = ["kms-audit", "--space", "squares:40", "--beta", "1.2", "--seed", "9"];
    let a = roe_kms(&[&audit[..], &["--threads", "1"]].concat());
    let b = roe_kms(&[&audit[..], &["--threads", "3"]].concat());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(roe_kms(&["--bogus"]).status.code(), Some(2));
    assert_eq!(roe_kms(&["zsweep", "--space", "nowhere:3", "--beta", "1"]).status.code(), Some(2));
    assert_eq!(roe_kms(&["tree-report", "-n", "0", "--beta", "1"]).status.code(), Some(2));
}

#[test]
fn overflow_exits_with_three() {
    let out = roe_kms(&["zsweep", "--space", "interval:10", "--potential", "label", "--beta", "-800"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("overflow"));
}

#[test]
fn output_flag_writes_file_and_csv_has_provenance_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = roe_kms(&[
        "--format", "csv", "--output", path.to_str().unwrap(),
        "tree-report", "-n", "2", "--beta", "0.5,0.6931471805599453,1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# tool"));
    assert!(text.contains("no-state"));
    assert!(text.contains("critical"));
    assert!(text.contains("unique-gibbs"));
}

#[test]
fn space_summary_reports_growth() {
    let out = roe_kms(&["space", "--space", "interval:10", "--radii", "1,2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("interval"));
}

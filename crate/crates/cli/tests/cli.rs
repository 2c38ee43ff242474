use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ellipk"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let (code, stdout, stderr) = run(&full);
    assert_eq!(code, 0, "{stderr}");
    serde_json::from_str(&stdout).unwrap()
}

const KEYS: [&str; 8] = [
    "command",
    "digits_per_term",
    "elapsed_seconds",
    "oracle_agreement_digits",
    "target_digits",
    "terms_used",
    "value_digits",
    "warnings",
];

fn keys(v: &Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

#[test]
fn constant_report_schema_and_value() {
    let v = json(&["constant", "gamma-quarter", "--digits", "50"]);
    assert_eq!(keys(&v), KEYS);
    assert!(v["value_digits"]
        .as_str()
        .unwrap()
        .starts_with("2.3606811980"));
    assert!(v["oracle_agreement_digits"].as_i64().unwrap() >= 45);
    let warnings = v["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("1/8")));
    assert!(warnings
        .iter()
        .any(|w| w.as_str().unwrap().contains("2^(7/3)")));
    // round trip through a generic parser
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);
}

#[test]
fn identical_runs_give_identical_digits() {
    let a = json(&["constant", "gamma-quarter", "--digits", "300"]);
    let b = json(&["constant", "gamma-quarter", "--digits", "300"]);
    assert_eq!(a["value_digits"], b["value_digits"]);
    let a = json(&["elliptic", "E", "--r", "5/2", "--digits", "80"]);
    let b = json(&["elliptic", "E", "--r", "5/2", "--digits", "80"]);
    assert_eq!(a["value_digits"], b["value_digits"]);
}

#[test]
fn elliptic_both_methods_agree() {
    let k = json(&[
        "elliptic", "K", "--r", "4", "--digits", "200", "--method", "both",
    ]);
    assert!(k["oracle_agreement_digits"].as_i64().unwrap() >= 195);
    let e = json(&[
        "elliptic", "E", "--r", "2", "--digits", "100", "--method", "both",
    ]);
    assert!(e["oracle_agreement_digits"].as_i64().unwrap() >= 95);
    let agm = json(&[
        "elliptic", "K", "--r", "1", "--digits", "60", "--method", "agm",
    ]);
    assert!(agm["value_digits"]
        .as_str()
        .unwrap()
        .starts_with("1.8540746773013719184338503471952600462175988235"));
    assert!(agm["digits_per_term"].is_null());
}

#[test]
fn exit_codes() {
    assert_eq!(
        run(&["elliptic", "K", "--r", "1", "--method", "series"]).0,
        2
    );
    assert_eq!(run(&["constant", "bogus", "--digits", "50"]).0, 1);
    assert_eq!(run(&["verify", "--digits", "5"]).0, 2);
    assert_eq!(run(&["bench", "--digits", "50"]).0, 2);
    assert_eq!(run(&["elliptic", "K", "--r", "-3"]).0, 1);
    assert_eq!(run(&["elliptic", "K", "--r", "x/2"]).0, 1);
    assert_eq!(run(&["constant", "gamma-quarter", "--digits", "many"]).0, 1);
    assert_eq!(run(&["verify", "--selection", "nothing"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
    let (code, _, stderr) = run(&["elliptic", "K", "--r", "1", "--method", "series"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("--method agm"));
}

#[test]
fn verify_chain_reports_printed_forms() {
    let (code, stdout, _) = run(&["verify", "--selection", "chain", "--digits", "80"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("2^(7/3)"));
    assert!(stdout.contains("printed prefactor 1/8"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn verify_all_passes() {
    let v = json(&["verify", "--digits", "100"]);
    assert_eq!(keys(&v), KEYS);
    assert!(v["oracle_agreement_digits"].as_i64().unwrap() >= 95);
}

#[test]
fn bench_rows() {
    let (code, stdout, _) = run(&["bench", "--digits", "500,1000,2000", "--format", "json"]);
    assert_eq!(code, 0);
    let rows: Vec<Value> = serde_json::from_str(&stdout).unwrap();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        assert_eq!(keys(row), KEYS);
        let rate = row["digits_per_term"].as_f64().unwrap();
        if row["command"].as_str().unwrap().starts_with("constant") {
            assert!((100.0..=130.0).contains(&rate), "{rate}");
        } else {
            assert!((rate - 12.44).abs() < 0.2, "{rate}");
        }
    }
}

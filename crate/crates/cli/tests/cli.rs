use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn awlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_awlab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn moment(args: &[&str]) -> (f64, f64) {
    let out = awlab(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    (v["value"][0].as_f64().unwrap(), v["value"][1].as_f64().unwrap())
}

#[test]
fn classify_third() {
    let out = awlab(&["classify", "--rep", &fixture("third.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["type"], "III_lambda");
    assert!((v["lambda"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(v["s_invariant"], serde_json::json!(["2"]));
    assert_eq!(v["config"]["command"], "classify");
}

#[test]
fn classify_table() {
    for (file, tag) in [("trivial3.json", "II_1"), ("two_block.json", "III_1")] {
        let v = json(&awlab(&["classify", "--rep", &fixture(file)]));
        assert_eq!(v["type"], tag, "{file}");
    }
}

#[test]
fn classify_csv() {
    let out = awlab(&["classify", "--rep", &fixture("third.json"), "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config: "));
    assert_eq!(lines[1], "type,lambda,s_invariant");
    assert_eq!(lines[2], "III_lambda,0.5,2");
}

#[test]
fn moments_of_generalized_circular() {
    for lambda in ["0.25", "0.9"] {
        let (re, im) = moment(&["moments", "y* y", "--lambda", lambda]);
        assert!((re - 1.0).abs() < 1e-12 && im.abs() < 1e-12);
        let (re, _) = moment(&["moments", "y", "y*", "--lambda", lambda]);
        assert!((re - lambda.parse::<f64>().unwrap()).abs() < 1e-12);
    }
}

#[test]
fn moments_of_creation_and_fields() {
    let two = fixture("two_block.json");
    let (re, _) = moment(&["moments", "l*(2) l(2)", "--rep", &two]);
    assert!((re - 1.0).abs() < 1e-15);
    let (re, _) = moment(&["moments", "l*(0) l(1)", "--rep", &two]);
    assert_eq!(re, 0.0);
    let (re, _) = moment(&["moments", "s(0)^4", "--rep", &two]);
    assert!((re - 2.0 / 16.0).abs() < 1e-14);
}

#[test]
fn moments_errors_are_coded() {
    let out = awlab(&["moments", "x(0)"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], "unknown_generator");

    let out = awlab(&["moments", "s(3)"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], "dimension_mismatch");

    let out = awlab(&["moments", "s(0) s(0", "--lambda", "0.5"]);
    assert_eq!(json(&out)["error"]["code"], "parse_error");

    let out = awlab(&["moments", "s(0)^8", "--rep", &fixture("two_block.json"), "--max-dim", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["code"], "budget_exceeded");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(awlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(awlab(&["verify", "everything"]).status.code(), Some(2));
    assert_eq!(awlab(&["classify"]).status.code(), Some(2));
}

#[test]
fn verify_semicircle_passes() {
    let out = awlab(&["verify", "semicircle", "--depth", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "PASS");
    assert!(v["max_error"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn verify_barnett_passes_with_margin() {
    let out = awlab(&["verify", "barnett", "--seed", "7", "--samples", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "PASS");
    assert!(v["summary"]["min_margin"].as_f64().unwrap() > 0.0);
    assert_eq!(v["unit_norm_e"].as_f64(), Some(14.0));
    assert_eq!(v["tracial"]["entries"].as_array().unwrap().len(), 200);
}

#[test]
fn verify_freeness_and_kms_pass() {
    let out = awlab(&["verify", "freeness", "--depth", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let out = awlab(&["verify", "kms", "--rep", &fixture("third.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["reps"][0]["periodicity_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn verify_tla_short_sweep() {
    let out = awlab(&["verify", "tla", "--depth", "8", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("k,l,depth,defect"));
    // 16 table entries for each of the depths 6, 7, 8.
    assert_eq!(text.lines().filter(|l| !l.starts_with('#') && !l.starts_with('k')).count(), 48);
}

#[test]
fn matrix_model_csv() {
    let out = awlab(&["matrix-model", "--family", "gue_pair", "--n", "64", "--samples", "8", "--seed", "5", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("k,estimate,stderr,target"));
    assert!(text.contains("word,mean,stderr,band,pass"));
    assert!(text.contains("\"seed\":5"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let args = ["matrix-model", "--family", "gue_single", "--n", "32", "--samples", "4", "--seed", "11"];
    let (a, b) = (awlab(&args), awlab(&args));
    assert_eq!(a.stdout, b.stdout);
    let args = ["verify", "barnett", "--seed", "3", "--samples", "20"];
    assert_eq!(awlab(&args).stdout, awlab(&args).stdout);
}

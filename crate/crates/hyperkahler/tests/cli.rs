use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperkahler"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn matrix(v: &Value) -> Vec<f64> {
    v["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn standard_triple_is_hyperkahler_with_identity_metric() {
    let path = fixture("standard_triple.json");
    let out = run(&["--json-only", "reconstruct", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "reconstruct");
    assert_eq!(v["details"]["verdict"], "hyper-Kähler");
    let g = matrix(&v["details"]["result"]["metric"]);
    let id: Vec<f64> = (0..16).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect();
    assert_eq!(g, id);
    assert_eq!(v["summary"]["failed"], 0);
}

#[test]
fn flipped_triple_reports_signature_and_exits_one() {
    let path = fixture("flipped_k_triple.json");
    let out = run(&["reconstruct", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pseudo-hyper-Kähler (signature 0,4)"), "{text}");
    assert!(text.contains("FAIL reconstruct.positive_definite"));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, "{\"dim\":").unwrap();
    let out = run(&["reconstruct", "--input", truncated.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 1 column"), "{err}");

    let missing = dir.path().join("missing.json");
    std::fs::write(&missing, "{\"dim\":4}").unwrap();
    let out = run(&["reconstruct", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("W_I"));

    let out = run(&[
        "reconstruct",
        "--input",
        dir.path().join("absent.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_and_help_exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["torus"]).status.code(), Some(2));
    assert_eq!(run(&["torus", "--angles", "0.1,0.2"]).status.code(), Some(2));
}

#[test]
fn generic_torus_point_passes() {
    let out = run(&["--json-only", "torus", "--angles", "0.7,1.3,2.1,0.4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["details"]["tangent_dim"], 4);
    assert_eq!(v["details"]["generic"], true);
    assert_eq!(v["summary"]["failed"], 0);

    let tuple = fixture("generic_tuple.json");
    let out = run(&["--json-only", "torus", "--tuple", tuple.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["details"]["tangent_dim"], 4);
}

#[test]
fn resonant_lattice_is_refused() {
    let out = run(&["torus", "--angles", "1.047198,0,0,0", "--oracle", "6"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("2*pi/6"), "{err}");
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = [
        "--json-only",
        "--seed",
        "3",
        "verify",
        "--suite",
        "quaternionic",
        "--trials",
        "5",
    ];
    let printed = run(&args);
    assert_eq!(printed.status.code(), Some(0));
    let mut with_out = args.to_vec();
    with_out.splice(0..0, ["--out", path.to_str().unwrap()]);
    let written = run(&with_out);
    assert_eq!(written.status.code(), Some(0));
    assert_eq!(std::fs::read(&path).unwrap(), printed.stdout);
    let v = json(&printed);
    assert_eq!(v["config"]["seed"], 3);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

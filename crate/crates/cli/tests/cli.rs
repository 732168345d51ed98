use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riemann-kit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

#[test]
fn curvature_of_the_round_sphere() {
    let out = run(&["curvature", "--builtin", "sphere_stereo", "--param", "n=2,R=1", "--point", "0.3,-0.2"]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["schema"], "riemann-kit/1");
    assert_eq!(r["command"], "curvature");
    let k = r["result"]["sectional"][0]["sectional"].as_f64().unwrap();
    assert!((k - 1.0).abs() < 1e-8, "{k}");
    assert!((r["result"]["scalar"].as_f64().unwrap() - 2.0).abs() < 1e-8);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let out = run(&["curvature", "--builtin", "euclidean"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parse_errors_are_reported_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"coords": ["x1", "x2"], "metric": [["x1 +", "0"], ["0", "1"]]}"#).unwrap();
    let out = run(&["curvature", "--manifold", path.to_str().unwrap(), "--point", "1,1"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["error"]["kind"], "ParseError");
    assert!(r["error"]["details"]["column"].as_u64().is_some());
    assert!(r.get("result").is_none());
}

#[test]
fn engine_errors_exit_with_one() {
    let out = run(&[
        "geodesic",
        "--builtin",
        "sphere_stereo",
        "--param",
        "n=2",
        "--point",
        "0,0",
        "--velocity",
        "0.5,0",
        "--length",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["error"]["kind"], "DomainExit");
}

#[test]
fn reports_are_deterministic_and_written_to_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    let path = dir.path().join("r.json");
    for _ in 0..2 {
        let out = run(&[
            "log",
            "--builtin",
            "sphere_stereo",
            "--param",
            "n=2",
            "--point",
            "0,0",
            "--target",
            "0.5,0.2",
            "--tries",
            "4",
            "--seed",
            "11",
            "-o",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        texts.push(std::fs::read_to_string(&path).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    let r: Value = serde_json::from_str(&texts[0]).unwrap();
    assert_eq!(r["seed"], 11);
    assert!(r["result"]["converged"].as_u64().unwrap() >= 1);
}

#[test]
fn riccati_csv_and_poles() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("f.csv");
    let out = run(&["riccati", "--h", "1", "--tmax", "4", "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let r = report(&out);
    let pole = r["result"]["first_pole"].as_f64().unwrap();
    assert!((pole - std::f64::consts::PI).abs() < 1e-6);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,f,segment_id\n"));
}

#[test]
fn print_manifold_echoes_the_definition_first() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.json");
    let text = r#"{"coords": ["x", "y"], "metric": [["1", "0"], ["0", "1"]]}"#;
    std::fs::write(&path, text).unwrap();
    let out = run(&["curvature", "--manifold", path.to_str().unwrap(), "--point", "0,0", "--print-manifold"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(text));
}

#[test]
fn compare_rejects_misordered_input() {
    let out = run(&["compare", "--kind", "driving", "--h", "0", "--k", "1", "--tmax", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["error"]["kind"], "InputOrderViolated");
}

#[test]
fn surface_of_revolution_classification() {
    let out = run(&["surfrev", "--torus", "2,1", "--u0", "0", "--phi0", "0.5", "--length", "20"]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["result"]["class"], "oscillating");
}

use monodromy_lab::spec::OperatorSpecDoc;
use monodromy_lab::{run_with, EXIT_NUMERIC, EXIT_OK, EXIT_SPEC};
use serde_json::Value;
use std::f64::consts::PI;
use std::process::Command;

const CASE_II: &str = r#"{"family":"kirillov","case":"II","n":1,"alpha":0.5,"a":1,"gamma":0}"#;
const FOURIER: &str = r#"{"fourier":{"V2":{"mean":0.3,"cos":[0.1],"sin":[0.0333333333333333]},"V1":{"sin":[0.2]},"V0":{"mean":0.7,"cos":[0.1]}}}"#;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("monodromy-lab").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn report(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, EXIT_OK, "{err}");
    serde_json::from_str(&out).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn case_ii_classification() {
    let r = report(&["classify", CASE_II]);
    assert_eq!(r["orbit_class"], "ii");
    // I = −a²n²/2 for ξ = a sin nθ(1 + α sin nθ)
    assert!((f(&r["invariants"]["I"]) + 0.5).abs() < 1e-9);
    assert!(r.get("verification").is_none());
}

#[test]
fn constant_potential_is_generic_class_i() {
    let r = report(&["classify", r#"{"fourier":{"V2":{"mean":0.3}}}"#]);
    assert_eq!(r["orbit_class"], "i");
    assert_eq!(r["generic"], true);
    assert_eq!(f(&r["invariants"]["gamma"]), 0.0);
}

#[test]
fn unit_oscillator_levels_all_have_phase_minus_one() {
    let r = report(&["monodromy", r#"{"fourier":{"V2":{"mean":1}}}"#, "--levels", "3"]);
    let phases = r["monodromy"]["phases"].as_array().unwrap();
    assert_eq!(phases.len(), 3);
    for p in phases {
        assert!((f(&p["phase_re"]) + 1.0).abs() < 1e-9 && f(&p["phase_im"]).abs() < 1e-9, "{p}");
    }
}

#[test]
fn identical_input_gives_identical_bytes() {
    let a = run(&["invariant", FOURIER, "--samples", "8"]);
    let b = run(&["invariant", FOURIER, "--samples", "8"]);
    assert_eq!(a.0, EXIT_OK);
    assert_eq!(a.1, b.1);
}

#[test]
fn echoed_fourier_spec_reparses_exactly() {
    let r = report(&["classify", FOURIER, "--echo-spec"]);
    let echoed: OperatorSpecDoc = serde_json::from_value(r["spec"].clone()).unwrap();
    let original: OperatorSpecDoc = serde_json::from_str(FOURIER).unwrap();
    assert_eq!(echoed, original);
}

#[test]
fn malformed_specs_exit_one() {
    for bad in [
        r#"{"family":"kirillov","case":"II","n":1,"alpha":0.5,"fourier":{}}"#,
        r#"{"fourier":{"V2":{"mean":0.3,"cos":"x"}}}"#,
        r#"{"family":"kirillov","case":"IV","alpha":0.5}"#,
        r#"{"fourier":{"V2":{"mean":0.3}},"group_element":{"phi_p":{"sin":[2.0]}}}"#,
        "not json",
    ] {
        let (code, out, err) = run(&["classify", bad]);
        assert_eq!(code, EXIT_SPEC, "{bad}");
        assert!(out.is_empty());
        assert!(err.contains("error"), "{err}");
    }
    assert_eq!(run(&["classify", FOURIER, "--grid-nx", "1000"]).0, EXIT_SPEC);
    assert_eq!(run(&["frobnicate", FOURIER]).0, EXIT_SPEC);
}

#[test]
fn failed_verification_exits_two() {
    // a box of half-width 2 clips the Hermite states
    let (code, out, _) = run(&["verify", r#"{"fourier":{"V2":{"mean":0.3}}}"#, "--grid-l", "2", "--grid-nx", "256"]);
    assert_eq!(code, EXIT_NUMERIC);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["verification"]["all_pass"], false);
    assert_eq!(r["verification"]["checks"]["pde.phase_0"]["error"], "BoundaryLeak");
}

#[test]
fn group_element_preserves_class_and_trace() {
    let moved = r#"{"fourier":{"V2":{"mean":0.3}},"group_element":{"phi_p":{"sin":[0.2]},"a":{"mean":0.1,"cos":[0.3]},"b":{"sin":[0.2]}}}"#;
    let r0 = report(&["classify", r#"{"fourier":{"V2":{"mean":0.3}}}"#]);
    let r1 = report(&["classify", moved]);
    assert_eq!(r1["orbit_class"], "i");
    assert!((f(&r0["invariants"]["trace"]) - f(&r1["invariants"]["trace"])).abs() < 1e-7);
    assert!((f(&r0["invariants"]["T_real"]) - f(&r1["invariants"]["T_real"])).abs() < 1e-7);
}

#[test]
fn stabilizer_data_file_has_header() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("xi.csv");
    let out = dir.path().join("report.json");
    let (code, stdout, _) = run(&[
        "stabilizer",
        r#"{"family":"kirillov","case":"III","n":2,"alpha":0.3}"#,
        "--samples",
        "16",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["stabilizer"]["kind"], "III");
    let zeros = r["stabilizer"]["zeros"].as_array().unwrap();
    assert_eq!(zeros.len(), 2);
    assert!(zeros.iter().all(|z| z["multiplicity"] == 2));
    let mut rd = csv::Reader::from_path(&data).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["theta", "xi_re", "xi_im"]);
    assert_eq!(rd.records().count(), 16);
}

fn sweep_rows(stdout: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(stdout.as_bytes()).records().map(|r| r.unwrap()).collect()
}

#[test]
fn case_ii_sweep_tracks_principal_value() {
    let (code, out, _) = run(&["sweep", r#"{"family":"kirillov","case":"II","n":1,"alpha":0.5,"a":1}"#, "--param", "alpha", "--range", "0.1:0.9:9"]);
    assert_eq!(code, EXIT_OK);
    let head: Vec<String> = csv::Reader::from_reader(out.as_bytes()).headers().unwrap().iter().map(String::from).collect();
    let col = head.iter().position(|h| h == "T_real").unwrap();
    let rows = sweep_rows(&out);
    assert_eq!(rows.len(), 9);
    for r in rows {
        let alpha: f64 = r[0].parse().unwrap();
        let got: f64 = r[col].parse().unwrap();
        // p.v.∫dθ/(sin θ(1 + α sin θ)) = −2πα/√(1−α²)
        let want = -2.0 * PI * alpha / (1.0 - alpha * alpha).sqrt();
        assert!((got - want).abs() < 1e-7, "α = {alpha}: {got} vs {want}");
        assert_eq!(&r[1], "ii");
    }
}

#[test]
fn sweep_is_ordered_and_thread_count_independent() {
    let bin = env!("CARGO_BIN_EXE_monodromy-lab");
    let args = ["sweep", r#"{"fourier":{"V2":{"mean":0.3,"cos":[0.05]}}}"#, "--param", "V0.mean", "--range", "-1:1:6"];
    let one = Command::new(bin).args(args).env("MONODROMY_LAB_THREADS", "1").output().unwrap();
    let many = Command::new(bin).args(args).env("MONODROMY_LAB_THREADS", "4").output().unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, many.stdout);
    let rows = sweep_rows(std::str::from_utf8(&one.stdout).unwrap());
    let params: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(params.windows(2).all(|w| w[0] < w[1]));
    let bad = Command::new(bin).args(args).env("MONODROMY_LAB_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_SPEC));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_monodromy-lab");
    let ok = Command::new(bin).args(["classify", CASE_II]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    let bad = Command::new(bin).args(["classify", "/nonexistent/spec.json"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_SPEC));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(EXIT_OK));
}

#[test]
fn numerical_failure_report_names_module() {
    // a constant force on a free particle pairs with the constant kernel element
    let (code, out, err) = run(&["classify", r#"{"fourier":{"V2":{"mean":0},"V1":{"mean":0.3}}}"#]);
    assert_eq!(code, EXIT_NUMERIC);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["error"]["module"], "svaction");
    assert_eq!(r["error"]["name"], "InconsistentInvariant");
    assert!(r.get("provenance").is_some());
    assert!(err.contains("svaction"));
}

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nullcone"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nullcone-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn last_report(path: &PathBuf) -> Value {
    let text = std::fs::read_to_string(path).unwrap();
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn help_and_unknown_subcommand() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["ncc-check", "--points", "many"]).status.code(), Some(1));
}

#[test]
fn ncc_sweep_schwarzschild() {
    let dir = scratch("ncc");
    let report = dir.join("r.jsonl");
    let out = run(&[
        "ncc-check",
        "--model",
        "schwarzschild",
        "--mass",
        "1",
        "--r-min",
        "2.1",
        "--r-max",
        "50",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = last_report(&report);
    assert_eq!(r["command"], "ncc-check");
    assert!(r["results"]["min_flux"].as_f64().unwrap() >= 0.0);
    assert!(r["results"]["max_deficit"].as_f64().unwrap() <= 0.0);
    assert_eq!(r["model"]["kind"], "schwarzschild");
    assert!(r["tolerances"]["ncc"].is_number());
}

#[test]
fn failed_check_exits_two() {
    let out = run(&["ncc-check", "--model", "schwarzschild", "--tol", "ncc=-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["ncc-check", "--tol", "nonsense=1"]).status.code(), Some(1));
}

#[test]
fn rigidity_kernel_on_bundled_minkowski() {
    let dir = scratch("kernel");
    let report = dir.join("r.jsonl");
    let out = run(&[
        "rigidity-kernel",
        "--surface",
        "bundled:minkowski_round",
        "--bandlimit",
        "8",
        "--report",
        report.to_str().unwrap(),
        "--plots",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = last_report(&report);
    assert_eq!(r["results"]["kernel_dimension"], 4);
    let basis = r["results"]["kernel_basis"].as_array().unwrap();
    assert_eq!(basis.len(), 4);
    assert_eq!(basis[0]["bandlimit"], 8);
    assert_eq!(r["inputs"][0]["name"], "bundled:minkowski_round");
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(dir.join("singular_spectrum.svg").is_file());
    assert!(dir.join("singular_spectrum.csv").is_file());
}

#[test]
fn kernel_gap_guard_exits_two() {
    let out = run(&[
        "rigidity-kernel",
        "--surface",
        "bundled:schwarzschild_round",
        "--bandlimit",
        "6",
        "--tol",
        "kernel_gap=1e300",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernel-gap"));
}

#[test]
fn missing_surface_is_input_error() {
    assert_eq!(run(&["surface-report", "--surface", "/nonexistent/profile.json"]).status.code(), Some(1));
    assert_eq!(run(&["surface-report", "--surface", "bundled:nope"]).status.code(), Some(1));
}

#[test]
fn empty_profile_directory() {
    let dir = scratch("empty");
    let out = run(&["verify-identities", "--suite", "frames", "--profiles", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_frames_suite_passes() {
    let out = run(&["verify-identities", "--suite", "frames"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("suite frames"));
    assert!(!text.contains("FAIL"));
    assert_eq!(run(&["verify-identities", "--suite", "nope"]).status.code(), Some(1));
}

#[test]
fn boost_sphere_writes_a_profile_that_reloads() {
    let dir = scratch("boost");
    let file = dir.join("b.json");
    let out = run(&[
        "boost-sphere",
        "--model",
        "antidesitter",
        "--radius-l",
        "1",
        "--r0",
        "1.5",
        "--beta",
        "0.4",
        "--axis",
        "0,1,0",
        "--output",
        file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["surface-report", "--surface", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["classification"]["verdict"]["verdict"], "low_mode_boost");
    assert!((v["boost_fit"]["beta"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(run(&["boost-sphere", "--model", "schwarzschild", "--r0", "4"]).status.code(), Some(1));
}

#[test]
fn solve_cmc_is_deterministic_and_classifies() {
    let dir = scratch("cmc");
    let report = dir.join("r.jsonl");
    for _ in 0..2 {
        let out = run(&[
            "solve-cmc",
            "--model",
            "schwarzschild",
            "--mass",
            "1",
            "--E",
            "0.05",
            "--seed",
            "11",
            "--bandlimit",
            "6",
            "--report",
            report.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    for key in
        ["command", "arguments", "inputs", "model", "bandlimit", "seed", "tolerances", "results", "errata", "status"]
    {
        assert_eq!(lines[0][key].to_string(), lines[1][key].to_string(), "{key}");
    }
    assert_eq!(lines[0]["results"]["classification"]["verdict"]["verdict"], "sphere_of_symmetry");
    assert_eq!(lines[0]["seed"], 11);
}

#[test]
fn solve_cmc_gauss_target_and_bad_energy() {
    let out = run(&[
        "solve-cmc",
        "--model",
        "minkowski",
        "--E",
        "0.25",
        "--target",
        "gauss",
        "--seed",
        "4",
        "--bandlimit",
        "6",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["conversion_factor"], 2.0);
    assert_eq!(v["E_hsq"], 0.5);
    // above the Schwarzschild maximum 2/27
    assert_eq!(run(&["solve-cmc", "--model", "schwarzschild", "--E", "0.2"]).status.code(), Some(1));
    assert_eq!(run(&["solve-cmc", "--E", "1", "--target", "mean"]).status.code(), Some(1));
}

#[test]
fn mobius_exit_codes() {
    let out = run(&["mobius", "--a", "1.1,0.2", "--b", "-0.3,0.4", "--c", "0.5,0", "--d", "0.8,-0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["low_mode_distance"].as_f64().unwrap() < 1e-9);
    assert!(v["corrected_vs_fitted"].as_f64().unwrap() < 1e-9);
    assert_eq!(run(&["mobius", "--a", "0", "--d", "0"]).status.code(), Some(1));
    assert_eq!(run(&["mobius", "--a", "x,y"]).status.code(), Some(1));
    // a zero tolerance turns the low-mode check into a flagged violation
    assert_eq!(run(&["mobius", "--tol", "mobius_low_mode=0"]).status.code(), Some(3));
}

#[test]
fn curvature_oracle_records_errata() {
    let dir = scratch("oracle");
    let report = dir.join("r.jsonl");
    let out = run(&[
        "curvature-oracle",
        "--model",
        "schwarzschild",
        "--points",
        "3",
        "--chart",
        "static",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = last_report(&report);
    let comps: Vec<String> =
        r["errata"].as_array().unwrap().iter().map(|e| e["component"].as_str().unwrap().to_string()).collect();
    assert!(comps.iter().any(|c| c == "Gamma^r_tt"));
    assert_eq!(run(&["curvature-oracle", "--chart", "kruskal"]).status.code(), Some(1));
}

#[test]
fn model_from_json_file() {
    let dir = scratch("model");
    let file = dir.join("m.json");
    std::fs::write(&file, r#"{"kind": "desitter", "radius_l": 2.0}"#).unwrap();
    let report = dir.join("r.jsonl");
    let out = run(&["ncc-check", "--model", file.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = last_report(&report);
    assert_eq!(r["model"]["radius_l"], 2.0);
    assert_eq!(r["inputs"].as_array().unwrap().len(), 1);
    std::fs::write(&file, "{").unwrap();
    assert_eq!(run(&["ncc-check", "--model", file.to_str().unwrap()]).status.code(), Some(1));
}

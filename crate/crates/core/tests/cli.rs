use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn polyhenon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyhenon")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("polyhenon-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(polyhenon(&[]).status.code(), Some(2));
    assert_eq!(polyhenon(&["frobnicate"]).status.code(), Some(2));
    let out = polyhenon(&["classify", "-n", "3", "-m", "1", "--sigma", "0", "-p", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p = 1"));
    assert_eq!(polyhenon(&["--help"]).status.code(), Some(0));
}

#[test]
fn classify_is_deterministic() {
    let args = ["classify", "-n", "7", "-m", "2", "--sigma", "-1.5", "-p", "3"];
    let a = polyhenon(&args);
    let b = polyhenon(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["params"]["sigma"], -1.5);
}

#[test]
fn solve_verify_kelvin_pipeline() {
    let dir = scratch("pipeline");
    let d = dir.to_str().unwrap();
    let base = ["-n", "7", "-m", "2", "--sigma", "0", "-p", "4"];
    let mut args = vec!["solve", "--entire", "--nodes", "257", "--out", d];
    args.extend(base);
    let out = polyhenon(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    assert_eq!(rep["converged"], true);
    assert_eq!(rep["tail_mode"], "slow");
    let profile = dir.join("profile.csv");
    assert!(dir.join("report.json").exists());
    let csv = std::fs::read_to_string(&profile).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "r,u");
    assert_eq!(csv.lines().count(), 258);

    let p = profile.to_str().unwrap();
    let mut args = vec!["verify", "--profile", p, "--checks", "sph,serrin-zou,ring"];
    args.extend(base);
    let out = polyhenon(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["passed"], true);

    let image = dir.join("kelvin.csv");
    let mut args = vec!["kelvin", "--profile", p, "--out", image.to_str().unwrap()];
    args.extend(base);
    let out = polyhenon(&args);
    assert!(out.status.success());
    let rep = json(&out);
    assert_eq!(rep["sigma_tilde"], 1.0);
    assert!((rep["tail_fit"]["exponent"].as_f64().unwrap() + 3.0).abs() < 0.05);
    assert!(image.exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn subcritical_solve_fails_with_statement() {
    let out = polyhenon(&["solve", "--entire", "--nodes", "129", "-n", "7", "-m", "2", "--sigma", "0", "-p", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let rep = json(&out);
    assert_eq!(rep["converged"], false);
    assert!(rep["evidence_for"].as_str().unwrap().contains("no classical solution"));
}

#[test]
fn ball_and_branch() {
    let out = polyhenon(&["branch", "-n", "3", "-m", "1", "--sigma", "0", "-p", "2", "--nodes", "96", "--tol", "1e-2"]);
    assert!(out.status.success());
    let rep = json(&out);
    assert_eq!(rep["bound_holds"], true);
    let lo = rep["lambda_star_bracket"][0].as_f64().unwrap();
    let lambda = format!("{}", 0.5 * lo);
    let args = ["solve", "--ball", "--lambda", &lambda, "--nodes", "96", "-n", "3", "-m", "1", "--sigma", "0", "-p", "2"];
    let out = polyhenon(&args);
    assert!(out.status.success());
    assert!(json(&out)["u_at_zero"].as_f64().unwrap() > 0.0);
    let mut over = args.to_vec();
    let big = format!("{}", 2.0 * lo);
    over[3] = &big;
    assert_eq!(polyhenon(&over).status.code(), Some(1));
}

#[test]
fn config_file_drives_singular() {
    let dir = scratch("config");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "n = 7\nm = 2\nsigma = 0\np = 3\nnodes = 33\n").unwrap();
    let csv = dir.join("singular.csv");
    let out = polyhenon(&["singular", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    assert!((json(&out)["C0"].as_f64().unwrap() - 24f64.sqrt()).abs() < 1e-12);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 34);
    std::fs::remove_dir_all(&dir).ok();
}

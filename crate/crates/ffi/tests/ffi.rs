use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use polyhenon_ffi::*;

const SUPER: PhParams = PhParams { n: 7, m: 2, sigma: 0.0, p: 4.0 };

fn take_string(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { ph_string_free(s) };
    text
}

fn last_error() -> String {
    let p = ph_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn classify_round_trip() {
    let mut json = ptr::null_mut();
    let st = unsafe { ph_classify(PhParams { p: 2.0, ..SUPER }, &mut json) };
    assert_eq!(st, PhStatus::Ok);
    assert!(ph_last_error().is_null());
    let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(v["distributional"]["verdict"], "NoneExists");
}

#[test]
fn error_codes_and_messages() {
    let mut json = ptr::null_mut();
    let st = unsafe { ph_classify(PhParams { n: 3, m: 1, sigma: -2.0, p: 2.0 }, &mut json) };
    assert_eq!(st, PhStatus::CriticalWeight);
    assert!(json.is_null());
    assert!(last_error().contains("sigma = -2m"));

    let (mut c0, mut theta) = (0.0, 0.0);
    let st = unsafe { ph_singular(PhParams { p: 2.0, ..SUPER }, &mut c0, &mut theta) };
    assert_eq!(st, PhStatus::NoSingularSolution);

    let st = unsafe { ph_classify(SUPER, ptr::null_mut()) };
    assert_eq!(st, PhStatus::NullPointer);
    assert!(last_error().contains("out_json"));

    let mut grid = ptr::null_mut();
    assert_eq!(unsafe { ph_grid_geometric(1.0, 0.5, 10, &mut grid) }, PhStatus::InvalidParams);
    assert!(grid.is_null());
}

#[test]
fn singular_constant() {
    let (mut c0, mut theta) = (0.0, 0.0);
    let st = unsafe { ph_singular(PhParams { p: 3.0, ..SUPER }, &mut c0, &mut theta) };
    assert_eq!(st, PhStatus::Ok);
    assert_eq!(theta, 2.0);
    assert!((c0 - 24f64.sqrt()).abs() < 1e-12);
}

#[test]
fn profile_handle() {
    let mut grid = ptr::null_mut();
    assert_eq!(unsafe { ph_grid_geometric(1e-2, 1e2, 65, &mut grid) }, PhStatus::Ok);
    let values: Vec<f64> = (0..65).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 64.0).powi(-2)).collect();
    let mut u = ptr::null_mut();
    let st = unsafe { ph_profile_new(grid, values.as_ptr(), values.len(), -2.0, -2.0, &mut u) };
    assert_eq!(st, PhStatus::Ok);
    assert_eq!(unsafe { ph_profile_len(u) }, 65);
    let mut x = 0.0;
    assert_eq!(unsafe { ph_profile_eval(u, 1e3, &mut x) }, PhStatus::Ok);
    assert!((x - 1e-6).abs() < 1e-15);
    assert_eq!(unsafe { ph_profile_eval(u, -1.0, &mut x) }, PhStatus::Domain);
    let (mut r, mut v) = (vec![0.0; 70], vec![0.0; 70]);
    assert_eq!(unsafe { ph_profile_copy(u, r.as_mut_ptr(), v.as_mut_ptr(), 70) }, PhStatus::Ok);
    assert_eq!(&v[..65], &values[..]);
    assert!((r[64] - 1e2).abs() < 1e-9);
    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { ph_profile_csv(u, &mut csv) }, PhStatus::Ok);
    assert_eq!(take_string(csv).lines().count(), 66);
    // wrong length is rejected by the core
    let mut bad = ptr::null_mut();
    let st = unsafe { ph_profile_new(grid, values.as_ptr(), 10, 0.0, 0.0, &mut bad) };
    assert_ne!(st, PhStatus::Ok);
    unsafe {
        ph_profile_free(u);
        ph_grid_free(grid);
        ph_profile_free(ptr::null_mut());
    }
}

#[test]
fn ball_problem() {
    let mut grid = ptr::null_mut();
    assert_eq!(unsafe { ph_grid_geometric(1e-6, 1.0, 96, &mut grid) }, PhStatus::Ok);
    let mut green = ptr::null_mut();
    assert_eq!(unsafe { ph_green_build(3, 1, grid, &mut green) }, PhStatus::Ok);
    let params = PhParams { n: 3, m: 1, sigma: 0.0, p: 2.0 };
    let mut lambda1 = 0.0;
    assert_eq!(unsafe { ph_first_eigenvalue(0.0, green, &mut lambda1) }, PhStatus::Ok);
    assert!((lambda1 / std::f64::consts::PI.powi(2) - 1.0).abs() < 1e-3);
    let (mut lo, mut hi) = (0.0, 0.0);
    assert_eq!(unsafe { ph_lambda_star(params, green, 1e-2, &mut lo, &mut hi) }, PhStatus::Ok);
    assert!(lo < hi && hi - lo <= 1e-2 && lo <= lambda1 / 2.0);
    let mut u = ptr::null_mut();
    assert_eq!(unsafe { ph_ball_minimal(params, green, 0.5 * lo, &mut u) }, PhStatus::Ok);
    assert_eq!(unsafe { ph_ball_minimal(params, green, 2.0 * hi, &mut u) }, PhStatus::NonConvergence);
    unsafe {
        ph_profile_free(u);
        ph_green_free(green);
        ph_grid_free(grid);
    }
}

#[test]
fn entire_solve_and_verify() {
    let mut grid = ptr::null_mut();
    assert_eq!(unsafe { ph_grid_geometric(1e-3, 1e3, 257, &mut grid) }, PhStatus::Ok);
    let mut op = ptr::null_mut();
    assert_eq!(unsafe { ph_riesz_build(3, 1, grid, &mut op) }, PhStatus::Ok);
    let params = PhParams { n: 3, m: 1, sigma: 0.0, p: 5.0 };
    let mut u = ptr::null_mut();
    let mut report = ptr::null_mut();
    let st = unsafe { ph_solve_entire(params, op, ptr::null(), &mut u, &mut report) };
    assert_eq!(st, PhStatus::Ok, "{}", last_error());
    let rep: serde_json::Value = serde_json::from_str(&take_string(report)).unwrap();
    assert_eq!(rep["converged"], true);
    // u(0) of the normalised bubble
    let mut u0 = 0.0;
    assert_eq!(unsafe { ph_profile_eval(u, 1e-6, &mut u0) }, PhStatus::Ok);
    assert!((u0 - 3f64.powf(0.25)).abs() < 1e-3);

    let checks = CString::new("serrin-zou, ring").unwrap();
    let (mut passed, mut json) = (0, ptr::null_mut());
    let st = unsafe { ph_verify(params, u, checks.as_ptr(), &mut passed, &mut json) };
    assert_eq!(st, PhStatus::Ok);
    assert_eq!(passed, 1);
    assert!(take_string(json).contains("checks"));
    let bogus = CString::new("nope").unwrap();
    let st = unsafe { ph_verify(params, u, bogus.as_ptr(), &mut passed, &mut json) };
    assert_eq!(st, PhStatus::InvalidParams);
    unsafe {
        ph_profile_free(u);
        ph_riesz_free(op);
        ph_grid_free(grid);
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/polyhenon.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["ph_classify", "ph_solve_entire", "ph_string_free", "ph_last_error", "typedef struct PhRiesz PhRiesz"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).output() else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

//! C ABI over `polyhenon`.
//!
//! Operators and profiles are opaque handles released by their `_free`
//! function. Every call returns a [`PhStatus`]; on failure the message is
//! available from [`ph_last_error`] on the same thread. Strings returned
//! through `char **` belong to the caller and go back via [`ph_string_free`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use polyhenon::ball::{build_green, estimate_lambda_star, monotone_iterate, GreenBallOperator};
use polyhenon::entire::{solve_entire, EntireOptions, InitialGuess, Method};
use polyhenon::exponents::{classify, first_eigenvalue};
use polyhenon::io::profile_csv;
use polyhenon::radial::{AngularOptions, RieszOperator};
use polyhenon::special::singular_solution;
use polyhenon::verify::{check_ring, check_serrin_zou, check_sph, VerificationReport};
use polyhenon::{Error, ProblemParams, RadialFunction, RadialGrid};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhStatus {
    Ok = 0,
    InvalidParams = 1,
    DegenerateExponent = 2,
    CriticalWeight = 3,
    OutOfModel = 4,
    Domain = 5,
    NoSingularSolution = 6,
    Divergence = 7,
    GridTooSmall = 8,
    Unsupported = 9,
    NonConvergence = 10,
    InsufficientBlowup = 11,
    Consistency = 12,
    Inapplicable = 13,
    Io = 14,
    Parse = 15,
    NullPointer = 16,
    InvalidUtf8 = 17,
    Panic = 18,
}

impl From<&Error> for PhStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParams(_) => PhStatus::InvalidParams,
            Error::DegenerateExponent => PhStatus::DegenerateExponent,
            Error::CriticalWeight => PhStatus::CriticalWeight,
            Error::OutOfModel(_) => PhStatus::OutOfModel,
            Error::Domain(_) => PhStatus::Domain,
            Error::NoSingularSolution(_) => PhStatus::NoSingularSolution,
            Error::Divergence(_) => PhStatus::Divergence,
            Error::GridTooSmall(_) => PhStatus::GridTooSmall,
            Error::Unsupported(_) => PhStatus::Unsupported,
            Error::NonConvergence(_) => PhStatus::NonConvergence,
            Error::InsufficientBlowup(_) => PhStatus::InsufficientBlowup,
            Error::Consistency(_) => PhStatus::Consistency,
            Error::Inapplicable(_) => PhStatus::Inapplicable,
            Error::Io(_) => PhStatus::Io,
            Error::Parse(_) => PhStatus::Parse,
        }
    }
}

/// `(−Δ)^m u = |x|^σ u^p` in dimension `n`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PhParams {
    pub n: u32,
    pub m: u32,
    pub sigma: f64,
    pub p: f64,
}

impl From<PhParams> for ProblemParams {
    fn from(p: PhParams) -> Self {
        ProblemParams::new(p.n, p.m, p.sigma, p.p)
    }
}

/// Solver settings for [`ph_solve_entire`]. `damping <= 0` selects Newton,
/// otherwise damped Picard.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PhEntireOptions {
    pub tol: f64,
    pub max_iter: u32,
    pub damping: f64,
}

/// Geometric radial grid.
pub struct PhGrid(RadialGrid);
/// Discretised Riesz potential on a grid.
pub struct PhRiesz(RieszOperator);
/// Green operator of the unit ball.
pub struct PhGreen(GreenBallOperator);
/// Radial profile with power-law ends.
pub struct PhProfile(RadialFunction);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Fail {
    Core(Error),
    Null(&'static str),
    Utf8,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PhStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PhStatus::Ok,
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            PhStatus::from(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PhStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string argument is not valid UTF-8".into());
            PhStatus::InvalidUtf8
        }
        Err(_) => {
            set_error("internal panic".into());
            PhStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    // SAFETY: caller passes a handle produced by this library or null
    unsafe { p.as_ref() }.ok_or(Fail::Null(what))
}

unsafe fn store<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    // SAFETY: non-null and writable per the caller contract
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn store_json(out: *mut *mut c_char, value: &impl serde::Serialize) -> Result<(), Fail> {
    let text = serde_json::to_string(value).map_err(|e| Error::Io(e.to_string()))?;
    let c = CString::new(text).map_err(|e| Error::Io(e.to_string()))?;
    unsafe { store(out, c.into_raw(), "out_json") }
}

unsafe fn handle_out<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out handle"));
    }
    unsafe { out.write(Box::into_raw(Box::new(value))) };
    Ok(())
}

unsafe fn free_handle<T>(h: *mut T) {
    if !h.is_null() {
        // SAFETY: produced by Box::into_raw in this library
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call into this library from the same thread.
#[unsafe(no_mangle)]
pub extern "C" fn ph_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Regime certificate as JSON.
///
/// # Safety
/// `out_json` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_classify(params: PhParams, out_json: *mut *mut c_char) -> PhStatus {
    guard(|| {
        let cert = classify(&params.into())?;
        unsafe { store_json(out_json, &cert) }
    })
}

/// `C0` and `θ` of the singular solution `C0 |x|^−θ`.
///
/// # Safety
/// `out_c0` and `out_theta` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_singular(params: PhParams, out_c0: *mut f64, out_theta: *mut f64) -> PhStatus {
    guard(|| {
        let s = singular_solution(&params.into())?;
        unsafe {
            store(out_c0, s.c0, "out_c0")?;
            store(out_theta, s.theta, "out_theta")
        }
    })
}

/// # Safety
/// `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_grid_geometric(r_min: f64, r_max: f64, count: usize, out: *mut *mut PhGrid) -> PhStatus {
    guard(|| {
        let g = RadialGrid::geometric(r_min, r_max, count)?;
        unsafe { handle_out(out, PhGrid(g)) }
    })
}

/// # Safety
/// `grid` must be null or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_grid_free(grid: *mut PhGrid) {
    unsafe { free_handle(grid) }
}

/// # Safety
/// `grid` must be a live handle and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_riesz_build(n: u32, m: u32, grid: *const PhGrid, out: *mut *mut PhRiesz) -> PhStatus {
    guard(|| {
        let g = unsafe { deref(grid, "grid") }?;
        let op = RieszOperator::build_env(n, m, &g.0, AngularOptions::default())?;
        unsafe { handle_out(out, PhRiesz(op)) }
    })
}

/// # Safety
/// `op` must be null or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_riesz_free(op: *mut PhRiesz) {
    unsafe { free_handle(op) }
}

/// # Safety
/// `grid` must be a live handle and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_green_build(n: u32, m: u32, grid: *const PhGrid, out: *mut *mut PhGreen) -> PhStatus {
    guard(|| {
        let g = unsafe { deref(grid, "grid") }?;
        let op = build_green(n, m, &g.0)?;
        unsafe { handle_out(out, PhGreen(op)) }
    })
}

/// # Safety
/// `op` must be null or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_green_free(op: *mut PhGreen) {
    unsafe { free_handle(op) }
}

/// Profile from `len` nodal values with power-law ends of the given exponents.
///
/// # Safety
/// `values` must hold `len` doubles; `grid` must be live; `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_profile_new(
    grid: *const PhGrid,
    values: *const f64,
    len: usize,
    inner_exp: f64,
    tail_exp: f64,
    out: *mut *mut PhProfile,
) -> PhStatus {
    guard(|| {
        let g = unsafe { deref(grid, "grid") }?;
        if values.is_null() {
            return Err(Fail::Null("values"));
        }
        let v = unsafe { std::slice::from_raw_parts(values, len) }.to_vec();
        let u = RadialFunction::new(g.0.clone(), v, inner_exp, tail_exp)?;
        unsafe { handle_out(out, PhProfile(u)) }
    })
}

/// # Safety
/// `u` must be null or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_profile_free(u: *mut PhProfile) {
    unsafe { free_handle(u) }
}

/// Number of nodes, or 0 for null.
///
/// # Safety
/// `u` must be null or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_profile_len(u: *const PhProfile) -> usize {
    unsafe { u.as_ref() }.map_or(0, |u| u.0.len())
}

/// Copies up to `cap` radii and values into the buffers; either may be null.
///
/// # Safety
/// Non-null buffers must hold `cap` doubles.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_profile_copy(
    u: *const PhProfile,
    radii: *mut f64,
    values: *mut f64,
    cap: usize,
) -> PhStatus {
    guard(|| {
        let u = unsafe { deref(u, "profile") }?;
        let k = cap.min(u.0.len());
        if !radii.is_null() {
            unsafe { ptr::copy_nonoverlapping(u.0.grid().nodes().as_ptr(), radii, k) };
        }
        if !values.is_null() {
            unsafe { ptr::copy_nonoverlapping(u.0.values().as_ptr(), values, k) };
        }
        Ok(())
    })
}

/// Value at any `r > 0`, using the power-law ends off the grid.
///
/// # Safety
/// `u` must be live and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_profile_eval(u: *const PhProfile, r: f64, out: *mut f64) -> PhStatus {
    guard(|| {
        let u = unsafe { deref(u, "profile") }?;
        if !(r > 0.0) {
            return Err(Error::Domain(format!("r = {r} must be positive")).into());
        }
        unsafe { store(out, u.0.eval(r), "out") }
    })
}

/// CSV text `r,u`.
///
/// # Safety
/// `u` must be live and `out_csv` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_profile_csv(u: *const PhProfile, out_csv: *mut *mut c_char) -> PhStatus {
    guard(|| {
        let u = unsafe { deref(u, "profile") }?;
        let c = CString::new(profile_csv(&u.0, &[])).map_err(|e| Error::Io(e.to_string()))?;
        unsafe { store(out_csv, c.into_raw(), "out_csv") }
    })
}

/// Entire radial solution from the bubble guess. `opts` may be null for
/// defaults; `out_report` may be null.
///
/// # Safety
/// Handles must be live and non-null outputs writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_solve_entire(
    params: PhParams,
    op: *const PhRiesz,
    opts: *const PhEntireOptions,
    out: *mut *mut PhProfile,
    out_report: *mut *mut c_char,
) -> PhStatus {
    guard(|| {
        let op = unsafe { deref(op, "riesz") }?;
        let mut o = EntireOptions::default();
        if let Some(c) = unsafe { opts.as_ref() } {
            o.tol = c.tol;
            o.max_iter = c.max_iter as usize;
            o.method = if c.damping > 0.0 { Method::Picard { damping: c.damping } } else { Method::Newton };
        }
        let params: ProblemParams = params.into();
        let init = InitialGuess::Bubble.build(&params, op.0.grid())?;
        let (u, report) = solve_entire(&params, &init, &op.0, &o)?;
        if !out_report.is_null() {
            unsafe { store_json(out_report, &report) }?;
        }
        unsafe { handle_out(out, PhProfile(u)) }
    })
}

/// Minimal solution of the ball problem at `lambda`.
///
/// # Safety
/// `op` must be live and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_ball_minimal(
    params: PhParams,
    op: *const PhGreen,
    lambda: f64,
    out: *mut *mut PhProfile,
) -> PhStatus {
    guard(|| {
        let op = unsafe { deref(op, "green") }?;
        let point = monotone_iterate(&op.0, &params.into(), lambda)?;
        unsafe { handle_out(out, PhProfile(point.u)) }
    })
}

/// Bracket `[lo, hi]` for the extremal parameter, width at most `tol`.
///
/// # Safety
/// `op` must be live and outputs writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_lambda_star(
    params: PhParams,
    op: *const PhGreen,
    tol: f64,
    out_lo: *mut f64,
    out_hi: *mut f64,
) -> PhStatus {
    guard(|| {
        let op = unsafe { deref(op, "green") }?;
        let ((lo, hi), _) = estimate_lambda_star(&op.0, &params.into(), tol)?;
        unsafe {
            store(out_lo, lo, "out_lo")?;
            store(out_hi, hi, "out_hi")
        }
    })
}

/// First weighted Dirichlet eigenvalue of `(−Δ)^m` on the unit ball.
///
/// # Safety
/// `op` must be live and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_first_eigenvalue(sigma: f64, op: *const PhGreen, out: *mut f64) -> PhStatus {
    guard(|| {
        let op = unsafe { deref(op, "green") }?;
        let lambda = first_eigenvalue(op.0.n(), op.0.m(), sigma, &op.0)?;
        unsafe { store(out, lambda, "out") }
    })
}

/// Runs the comma-separated `checks` (`sph`, `serrin-zou`, `ring`) and
/// returns the report as JSON. `out_passed` receives 1 when every enforced
/// check passed.
///
/// # Safety
/// `checks` must be a NUL-terminated string; handles live; outputs writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ph_verify(
    params: PhParams,
    u: *const PhProfile,
    checks: *const c_char,
    out_passed: *mut i32,
    out_json: *mut *mut c_char,
) -> PhStatus {
    guard(|| {
        let u = unsafe { deref(u, "profile") }?;
        if checks.is_null() {
            return Err(Fail::Null("checks"));
        }
        let list = unsafe { CStr::from_ptr(checks) }.to_str().map_err(|_| Fail::Utf8)?;
        let params: ProblemParams = params.into();
        let mut rep = VerificationReport::default();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            rep.merge(match name {
                "sph" => check_sph(&u.0, &params, 1)?,
                "serrin-zou" => check_serrin_zou(&u.0, &params)?,
                "ring" => check_ring(&u.0, &params)?,
                other => return Err(Error::InvalidParams(format!("unknown check {other:?}")).into()),
            });
        }
        unsafe {
            store(out_passed, rep.passed() as i32, "out_passed")?;
            store_json(out_json, &rep)
        }
    })
}

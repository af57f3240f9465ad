//! C ABI for `resgap`.
//!
//! Every entry point returns a [`ResgapStatus`]; on failure the message is
//! kept per thread and read with [`resgap_last_error`]. Handles are opaque
//! and owned by the caller, who releases them with the matching `_free`.
//! Strings handed out by the library are released with [`resgap_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use resgap::bands::{estimate_lambda, rasterize, sweep_bands};
use resgap::design::{roundtrip_verify, synthesize_geometry, TargetGaps, DEFAULT_LAYOUT_MARGIN};
use resgap::geometry::CellGeometry2D;
use resgap::limit::{compute_betas, evaluate_f, GapReport, UnitCellModel};
use resgap::Error;

/// Result codes; the nonzero values match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResgapStatus {
    Ok = 0,
    Io = 1,
    InvalidInput = 2,
    Infeasible = 3,
    NoConvergence = 4,
    VerificationFailed = 5,
    NullPointer = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Limit model of a period cell.
pub struct ResgapModel(UnitCellModel);

/// Limit gap endpoints.
pub struct ResgapReport(GapReport);

/// Two-dimensional period-cell geometry.
pub struct ResgapGeometry(CellGeometry2D);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(err: &Error) -> ResgapStatus {
    match err.exit_code() {
        1 => ResgapStatus::Io,
        2 => ResgapStatus::InvalidInput,
        3 => ResgapStatus::Infeasible,
        4 => ResgapStatus::NoConvergence,
        _ => ResgapStatus::VerificationFailed,
    }
}

/// Runs `body`, turning errors and panics into a status plus a message.
fn guard(body: impl FnOnce() -> Result<(), ResgapStatus>) -> ResgapStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => ResgapStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {message}"));
            ResgapStatus::Panic
        }
    }
}

fn lib<T>(result: resgap::Result<T>) -> Result<T, ResgapStatus> {
    result.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), ResgapStatus> {
    if p.is_null() {
        set_error(format!("{name} is null"));
        return Err(ResgapStatus::NullPointer);
    }
    Ok(())
}

unsafe fn read_str<'a>(text: *const c_char, name: &str) -> Result<&'a str, ResgapStatus> {
    non_null(text, name)?;
    CStr::from_ptr(text).to_str().map_err(|e| {
        set_error(format!("{name} is not UTF-8: {e}"));
        ResgapStatus::InvalidInput
    })
}

unsafe fn read_slice<'a>(data: *const f64, len: usize, name: &str) -> Result<&'a [f64], ResgapStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(data, name)?;
    Ok(std::slice::from_raw_parts(data, len))
}

fn to_c_string(text: String) -> Result<*mut c_char, ResgapStatus> {
    CString::new(text).map(CString::into_raw).map_err(|e| {
        set_error(e.to_string());
        ResgapStatus::InvalidInput
    })
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, ResgapStatus> {
    serde_json::to_string_pretty(value).map_err(|e| {
        set_error(e.to_string());
        ResgapStatus::InvalidInput
    })
}

fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ResgapStatus> {
    lib(serde_json::from_str(text).map_err(Error::from))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn resgap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library.
///
/// # Safety
/// `text` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn resgap_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Parses a model from JSON (`n`, `resonators`, `b0_volume`).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn resgap_model_from_json(text: *const c_char, out: *mut *mut ResgapModel) -> ResgapStatus {
    guard(|| {
        non_null(out, "out")?;
        let model: UnitCellModel = parse(read_str(text, "text")?)?;
        *out = Box::into_raw(Box::new(ResgapModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn resgap_model_free(model: *mut ResgapModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Secular function at `lambda`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn resgap_model_evaluate_f(model: *const ResgapModel, lambda: f64, out: *mut f64) -> ResgapStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        *out = lib(evaluate_f(&(*model).0, lambda))?;
        Ok(())
    })
}

/// Limit gaps of a model.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn resgap_compute_betas(model: *const ResgapModel, out: *mut *mut ResgapReport) -> ResgapStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        let report = lib(compute_betas(&(*model).0))?;
        *out = Box::into_raw(Box::new(ResgapReport(report)));
        Ok(())
    })
}

/// Number of gaps in a report; zero for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn resgap_report_len(report: *const ResgapReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).0.m()
}

/// Copies the gap endpoints into `alphas` and `betas`, each of room `cap`.
///
/// # Safety
/// `report` must be a live handle; both buffers must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn resgap_report_endpoints(
    report: *const ResgapReport,
    alphas: *mut f64,
    betas: *mut f64,
    cap: usize,
) -> ResgapStatus {
    guard(|| {
        non_null(report, "report")?;
        let r = &(*report).0;
        if cap < r.m() {
            set_error(format!("buffers hold {cap} values, {} needed", r.m()));
            return Err(ResgapStatus::BufferTooSmall);
        }
        non_null(alphas, "alphas")?;
        non_null(betas, "betas")?;
        ptr::copy_nonoverlapping(r.alphas.as_ptr(), alphas, r.m());
        ptr::copy_nonoverlapping(r.betas.as_ptr(), betas, r.m());
        Ok(())
    })
}

/// Report as JSON; release with [`resgap_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn resgap_report_to_json(report: *const ResgapReport, out: *mut *mut c_char) -> ResgapStatus {
    guard(|| {
        non_null(report, "report")?;
        non_null(out, "out")?;
        *out = to_c_string(json(&(*report).0)?)?;
        Ok(())
    })
}

/// # Safety
/// `report` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn resgap_report_free(report: *mut ResgapReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

unsafe fn targets(alphas: *const f64, betas: *const f64, m: usize) -> Result<TargetGaps, ResgapStatus> {
    let a = read_slice(alphas, m, "alphas")?.to_vec();
    let b = read_slice(betas, m, "betas")?.to_vec();
    lib(TargetGaps::new(a, b))
}

/// Geometry whose limit gaps are `(alphas[j], betas[j])`.
///
/// # Safety
/// `alphas` and `betas` must hold `m` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn resgap_design(
    alphas: *const f64,
    betas: *const f64,
    m: usize,
    gamma: f64,
    out: *mut *mut ResgapGeometry,
) -> ResgapStatus {
    guard(|| {
        non_null(out, "out")?;
        let t = targets(alphas, betas, m)?;
        let geometry = lib(synthesize_geometry(&t, gamma, DEFAULT_LAYOUT_MARGIN))?;
        *out = Box::into_raw(Box::new(ResgapGeometry(geometry)));
        Ok(())
    })
}

/// Recomputes the limit gaps of `geometry` and checks them against the
/// targets; the report is written even when the check fails.
///
/// # Safety
/// `geometry` must be a live handle, the target arrays must hold `m`
/// values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn resgap_geometry_roundtrip(
    geometry: *const ResgapGeometry,
    alphas: *const f64,
    betas: *const f64,
    m: usize,
    out: *mut *mut ResgapReport,
) -> ResgapStatus {
    guard(|| {
        non_null(geometry, "geometry")?;
        non_null(out, "out")?;
        let t = targets(alphas, betas, m)?;
        let g = &(*geometry).0;
        let report = lib(g.to_model().and_then(|model| compute_betas(&model)))?;
        *out = Box::into_raw(Box::new(ResgapReport(report)));
        lib(roundtrip_verify(g, &t)).map(drop)
    })
}

/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn resgap_geometry_from_json(text: *const c_char, out: *mut *mut ResgapGeometry) -> ResgapStatus {
    guard(|| {
        non_null(out, "out")?;
        let geometry: CellGeometry2D = parse(read_str(text, "text")?)?;
        *out = Box::into_raw(Box::new(ResgapGeometry(geometry)));
        Ok(())
    })
}

/// Geometry as JSON; release with [`resgap_string_free`].
///
/// # Safety
/// `geometry` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn resgap_geometry_to_json(geometry: *const ResgapGeometry, out: *mut *mut c_char) -> ResgapStatus {
    guard(|| {
        non_null(geometry, "geometry")?;
        non_null(out, "out")?;
        *out = to_c_string(json(&(*geometry).0)?)?;
        Ok(())
    })
}

/// # Safety
/// `geometry` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn resgap_geometry_free(geometry: *mut ResgapGeometry) {
    if !geometry.is_null() {
        drop(Box::from_raw(geometry));
    }
}

/// Band sweep of `geometry` at scale `epsilon`; writes the gaps that open
/// below the spectral cutoff. `k_max == 0` picks `m + 2` bands. On
/// [`ResgapStatus::BufferTooSmall`] `count` still holds the number found.
///
/// # Safety
/// `geometry` must be a live handle, `lo` and `hi` must hold `cap` values
/// and `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn resgap_band_gaps(
    geometry: *const ResgapGeometry,
    epsilon: f64,
    grid_n: usize,
    theta_grid: usize,
    k_max: usize,
    lo: *mut f64,
    hi: *mut f64,
    cap: usize,
    count: *mut usize,
) -> ResgapStatus {
    guard(|| {
        non_null(geometry, "geometry")?;
        non_null(count, "count")?;
        let g = &(*geometry).0;
        let k = if k_max == 0 { g.m() + 2 } else { k_max };
        let cell = lib(rasterize(g, epsilon, grid_n))?;
        let sweep = lib(sweep_bands(&cell, theta_grid, k))?;
        let lambda = lib(estimate_lambda(g, theta_grid, grid_n))?;
        let gaps = sweep.gaps_below(lambda.cutoff(epsilon));
        *count = gaps.len();
        if gaps.len() > cap {
            set_error(format!("buffers hold {cap} gaps, {} found", gaps.len()));
            return Err(ResgapStatus::BufferTooSmall);
        }
        if !gaps.is_empty() {
            non_null(lo, "lo")?;
            non_null(hi, "hi")?;
        }
        for (j, gap) in gaps.iter().enumerate() {
            *lo.add(j) = gap.lo;
            *hi.add(j) = gap.hi;
        }
        if !sweep.converged() {
            set_error("eigensolver did not converge at every theta sample".into());
            return Err(ResgapStatus::NoConvergence);
        }
        Ok(())
    })
}

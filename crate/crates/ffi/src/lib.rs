//! C interface to `ultraembed`.
//!
//! Spaces are opaque `UmSpace` handles owned by the caller and released with
//! [`um_space_free`]. Every fallible call returns a [`UmStatus`]; on failure
//! [`um_last_error_message`] describes the error for the calling thread.
//! Strings returned through out-parameters are released with
//! [`um_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ultraembed::cli::{pipeline_report, EmbedArgs, ModeArg, RunArgs};
use ultraembed::extractor::PointStream;
use ultraembed::metric::{is_ultrametric, subdominant_ultrametric, FiniteMetricSpace, Metric};
use ultraembed::oracle::optimal_ultra_distortion;
use ultraembed::Error;

/// A validated finite metric space.
pub struct UmSpace {
    space: FiniteMetricSpace,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NotUltrametric = 3,
    BoundViolation = 4,
    Undecided = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> UmStatus {
    match e {
        Error::NotUltrametric { .. } => UmStatus::NotUltrametric,
        Error::BoundViolation { .. } | Error::MissingCertificate(_) | Error::DiameterExceedsRadius { .. } => {
            UmStatus::BoundViolation
        }
        _ => UmStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<UmStatus, (UmStatus, String)>) -> UmStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            UmStatus::Panic
        }
    }
}

fn fail(e: Error) -> (UmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (UmStatus, String) {
    (UmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn space_ref<'a>(space: *const UmSpace) -> Result<&'a UmSpace, (UmStatus, String)> {
    space.as_ref().ok_or_else(|| null("space"))
}

/// Builds a space from an `n × n` row-major distance matrix.
///
/// # Safety
/// `data` must point to `n * n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn um_space_from_matrix(data: *const f64, n: usize, out: *mut *mut UmSpace) -> UmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if data.is_null() && n > 0 {
            return Err(null("data"));
        }
        let len = n.checked_mul(n).ok_or_else(|| fail(Error::InvalidParameter(format!("n = {n} overflows"))))?;
        let values = if n == 0 { &[][..] } else { std::slice::from_raw_parts(data, len) };
        let rows: Vec<Vec<f64>> = values.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let space = FiniteMetricSpace::new(rows).map_err(fail)?;
        *out = Box::into_raw(Box::new(UmSpace { space }));
        Ok(UmStatus::Ok)
    })
}

/// Releases a space; null is ignored.
///
/// # Safety
/// `space` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn um_space_free(space: *mut UmSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of points; 0 for null.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn um_space_len(space: *const UmSpace) -> usize {
    space.as_ref().map_or(0, |s| s.space.len())
}

/// Distance between points `i` and `j`.
///
/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn um_space_distance(space: *const UmSpace, i: usize, j: usize, out: *mut f64) -> UmStatus {
    guard(|| {
        let s = space_ref(space)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let n = s.space.len();
        if i >= n || j >= n {
            return Err(fail(Error::IndexOutOfRange { index: i.max(j), len: n }));
        }
        *out = s.space.dist(i, j);
        Ok(UmStatus::Ok)
    })
}

/// Strong triangle inequality with additive tolerance `tolerance`.
///
/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn um_is_ultrametric(space: *const UmSpace, tolerance: f64, out: *mut bool) -> UmStatus {
    guard(|| {
        let s = space_ref(space)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = is_ultrametric(&s.space, tolerance).holds;
        Ok(UmStatus::Ok)
    })
}

/// The subdominant ultrametric, as a new handle.
///
/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn um_subdominant(space: *const UmSpace, out: *mut *mut UmSpace) -> UmStatus {
    guard(|| {
        let s = space_ref(space)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let u = subdominant_ultrametric(&s.space).into_space();
        *out = Box::into_raw(Box::new(UmSpace { space: u }));
        Ok(UmStatus::Ok)
    })
}

/// Smallest distortion of any embedding into an ultrametric.
///
/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn um_optimal_distortion(space: *const UmSpace, out: *mut f64) -> UmStatus {
    guard(|| {
        let s = space_ref(space)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = optimal_ultra_distortion(&s.space);
        Ok(UmStatus::Ok)
    })
}

/// Runs the full pipeline and returns its JSON report. `blocks = 0` embeds
/// single points; otherwise the space is cut into `blocks` clusters. An
/// undecided extraction returns `UM_STATUS_UNDECIDED` together with the
/// partial report.
///
/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn um_pipeline_json(
    space: *const UmSpace,
    epsilon: f64,
    target: usize,
    blocks: usize,
    out: *mut *mut c_char,
) -> UmStatus {
    guard(|| {
        let s = space_ref(space)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let stream = PointStream::from_matrix(s.space.clone());
        let run = RunArgs { epsilon, target };
        let embed = if blocks == 0 {
            EmbedArgs { mode: ModeArg::Singleton, blocks: None }
        } else {
            EmbedArgs { mode: ModeArg::Block, blocks: Some(blocks) }
        };
        let (report, code) = pipeline_report(&stream, "ffi", &run, &embed, false).map_err(fail)?;
        let json = serde_json::to_string(&report).map_err(|e| fail(e.into()))?;
        *out = CString::new(json).expect("JSON has no nul bytes").into_raw();
        match code {
            0 => Ok(UmStatus::Ok),
            3 => Err((UmStatus::Undecided, "extraction is undecided".into())),
            _ => Err((UmStatus::BoundViolation, "report does not certify its bound".into())),
        }
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn um_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn um_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn um_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

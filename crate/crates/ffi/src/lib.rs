//! C ABI for theonlab.
//!
//! Theons and models cross the boundary as opaque handles created by
//! `tl_*_new`/`tl_*_parse`/`tl_theon_sample` and released with the matching
//! `tl_*_free`. Every fallible call returns a [`TlStatus`]; on failure the
//! message is available from [`tl_last_error`] on the same thread. Strings
//! returned through out-parameters are owned by the caller and released with
//! [`tl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use serde_json::Value;
use theonlab::harness::{execute, resolve_theon, Invocation};
use theonlab::relational::{parse_model, to_text, Model};
use theonlab::theon::{estimate_density, sample_theta, Sampler, Theon};
use theonlab::Error;

/// Largest vertex count accepted by [`tl_theon_sample`]; a point stores one
/// coordinate block per vertex subset.
pub const TL_MAX_SAMPLE_VERTICES: usize = 16;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A parameter, theon or model was rejected.
    InvalidArgument = 3,
    /// No catalog entry or command by that name.
    UnknownName = 4,
    /// Text could not be parsed.
    Syntax = 5,
    /// A model does not fit the theon's signature or theory.
    InvalidModel = 6,
    /// A panic was caught at the boundary.
    Internal = 7,
}

/// Opaque theon handle.
pub struct TlTheon(Theon);

/// Opaque model handle.
pub struct TlModel(Model);

/// Labeled and unlabeled density estimates with standard errors.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TlDensity {
    pub labeled: f64,
    pub labeled_stderr: f64,
    pub unlabeled: f64,
    pub unlabeled_stderr: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> TlStatus {
    match e {
        Error::Syntax { .. } => TlStatus::Syntax,
        Error::UnknownEntry(_) => TlStatus::UnknownName,
        Error::InvalidModel(_)
        | Error::UnknownPredicate(_)
        | Error::ArityMismatch { .. }
        | Error::AxiomViolation(_) => TlStatus::InvalidModel,
        _ => TlStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic as the last error.
fn guard(f: impl FnOnce() -> Result<(), (TlStatus, String)>) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            TlStatus::Internal
        }
    }
}

fn core(e: Error) -> (TlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (TlStatus, String) {
    (TlStatus::NullPointer, format!("`{name}` is null"))
}

/// # Safety
/// `p` is null or a NUL-terminated string.
unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, (TlStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            TlStatus::InvalidUtf8,
            format!("`{name}` is not valid UTF-8"),
        )
    })
}

/// # Safety
/// `p` is null or a live handle created by this library.
unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, (TlStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

fn owned_string(s: String) -> Result<*mut c_char, (TlStatus, String)> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| (TlStatus::Internal, "output contains a NUL byte".into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call or [`tl_clear_error`].
#[no_mangle]
pub extern "C" fn tl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn tl_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a theon from a catalog name or expression (`qr-graphon:p=1/2`,
/// `diag(...)`, `interp(...;...)`) or from a JSON theon document.
///
/// # Safety
/// `spec` is a NUL-terminated string; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn tl_theon_new(spec: *const c_char, out: *mut *mut TlTheon) -> TlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let spec = text(spec, "spec")?.trim();
        let value = if spec.starts_with('{') {
            serde_json::from_str(spec)
                .map_err(|e| (TlStatus::Syntax, format!("theon JSON: {e}")))?
        } else {
            Value::from(spec)
        };
        let t = resolve_theon(&value).map_err(core)?;
        *out = Box::into_raw(Box::new(TlTheon(t)));
        Ok(())
    })
}

/// # Safety
/// `t` is null or a handle from [`tl_theon_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_theon_free(t: *mut TlTheon) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of ground-space factors, or 0 for a null handle.
///
/// # Safety
/// `t` is null or a live theon handle.
#[no_mangle]
pub unsafe extern "C" fn tl_theon_dim(t: *const TlTheon) -> usize {
    t.as_ref().map_or(0, |t| t.0.dim)
}

/// Largest predicate arity, or 0 for a null handle.
///
/// # Safety
/// `t` is null or a live theon handle.
#[no_mangle]
pub unsafe extern "C" fn tl_theon_max_arity(t: *const TlTheon) -> usize {
    t.as_ref().map_or(0, |t| t.0.max_arity())
}

/// The theon's name as a new string.
///
/// # Safety
/// `t` is a live theon handle; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn tl_theon_name(t: *const TlTheon, out: *mut *mut c_char) -> TlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let t = handle(t, "theon")?;
        *out = owned_string(t.0.name.clone())?;
        Ok(())
    })
}

/// Realizes the theon on `n` vertices from a point drawn with `seed`.
/// The same seed always gives the same model.
///
/// # Safety
/// `t` is a live theon handle; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn tl_theon_sample(
    t: *const TlTheon,
    n: usize,
    seed: u64,
    out: *mut *mut TlModel,
) -> TlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let t = &handle(t, "theon")?.0;
        if n > TL_MAX_SAMPLE_VERTICES {
            return Err((
                TlStatus::InvalidArgument,
                format!("n = {n} exceeds {TL_MAX_SAMPLE_VERTICES} vertices"),
            ));
        }
        let theta = sample_theta(n, t.dim, t.max_arity(), seed);
        *out = Box::into_raw(Box::new(TlModel(t.realize(&theta))));
        Ok(())
    })
}

/// Parses a model in the text format (`n=3`, then `E: (1,2);(2,3)` lines)
/// over the theon's signature.
///
/// # Safety
/// `t` is a live theon handle; `model_text` is a NUL-terminated string;
/// `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn tl_model_parse(
    t: *const TlTheon,
    model_text: *const c_char,
    out: *mut *mut TlModel,
) -> TlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let t = &handle(t, "theon")?.0;
        let body = text(model_text, "model_text")?;
        let m = parse_model(body, t.theory.sig.clone()).map_err(core)?;
        *out = Box::into_raw(Box::new(TlModel(m)));
        Ok(())
    })
}

/// # Safety
/// `m` is null or a model handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_model_free(m: *mut TlModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `m` is null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn tl_model_n(m: *const TlModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.n())
}

/// Whether the 0-based tuple of length `len` lies in predicate `pred`.
/// Writes the answer to `out`.
///
/// # Safety
/// `m` is a live model handle; `tuple` points to `len` readable values;
/// `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn tl_model_contains(
    m: *const TlModel,
    pred: usize,
    tuple: *const usize,
    len: usize,
    out: *mut bool,
) -> TlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = &handle(m, "model")?.0;
        if tuple.is_null() && len > 0 {
            return Err(null("tuple"));
        }
        let sig = m.signature();
        if pred >= sig.len() {
            return Err((
                TlStatus::InvalidArgument,
                format!(
                    "predicate index {pred} out of range ({} predicates)",
                    sig.len()
                ),
            ));
        }
        if len != sig.arity(pred) {
            return Err((
                TlStatus::InvalidArgument,
                format!(
                    "predicate {pred} has arity {}, got {len} vertices",
                    sig.arity(pred)
                ),
            ));
        }
        let t: &[usize] = if len == 0 {
            &[]
        } else {
            std::slice::from_raw_parts(tuple, len)
        };
        if let Some(&v) = t.iter().find(|&&v| v >= m.n()) {
            return Err((
                TlStatus::InvalidArgument,
                format!("vertex {v} outside 0..{}", m.n()),
            ));
        }
        *out = m.contains(pred, t);
        Ok(())
    })
}

/// The model in the text format as a new string.
///
/// # Safety
/// `m` is a live model handle; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn tl_model_to_text(m: *const TlModel, out: *mut *mut c_char) -> TlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = &handle(m, "model")?.0;
        *out = owned_string(to_text(m))?;
        Ok(())
    })
}

/// Monte Carlo estimate of how often the theon realizes `m` (labeled) and a
/// copy of `m` (unlabeled) on `n(m)` vertices. Deterministic in `seed`.
///
/// # Safety
/// `t` and `m` are live handles; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn tl_density(
    t: *const TlTheon,
    m: *const TlModel,
    samples: u64,
    seed: u64,
    out: *mut TlDensity,
) -> TlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let t = &handle(t, "theon")?.0;
        let m = &handle(m, "model")?.0;
        if samples == 0 {
            return Err((TlStatus::InvalidArgument, "need at least one sample".into()));
        }
        let (lab, unl) = estimate_density(t, m, samples, &Sampler::new(seed)).map_err(core)?;
        *out = TlDensity {
            labeled: lab.value,
            labeled_stderr: lab.stderr,
            unlabeled: unl.value,
            unlabeled_stderr: unl.stderr,
        };
        Ok(())
    })
}

/// Runs a harness invocation given as JSON
/// (`{"command": "density", "params": {...}, "seed": 1, "n_samples": 1000}`)
/// and returns the report as a JSON string. `exit_code` may be null; it
/// receives 0 for pass or estimate and 1 for reject or fail.
///
/// # Safety
/// `invocation_json` is a NUL-terminated string; `report_json` points to
/// writable storage; `exit_code` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn tl_execute(
    invocation_json: *const c_char,
    report_json: *mut *mut c_char,
    exit_code: *mut i32,
) -> TlStatus {
    guard(|| {
        if report_json.is_null() {
            return Err(null("report_json"));
        }
        *report_json = ptr::null_mut();
        let body = text(invocation_json, "invocation_json")?;
        let inv: Invocation = serde_json::from_str(body)
            .map_err(|e| (TlStatus::Syntax, format!("invocation JSON: {e}")))?;
        if inv.n_samples == Some(0) {
            return Err((TlStatus::InvalidArgument, "need at least one sample".into()));
        }
        let report = execute(&inv, None).map_err(core)?;
        *report_json = owned_string(report.to_json().to_string())?;
        if !exit_code.is_null() {
            *exit_code = report.decision.exit_code();
        }
        Ok(())
    })
}

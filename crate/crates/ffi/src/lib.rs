//! C ABI over the ncfbm engine.
//!
//! Every entry point returns an [`NcfbmStatus`]; results go through out
//! pointers. The message of the most recent failure on the calling thread is
//! available from [`ncfbm_last_error`]. Strings handed out by this library
//! must be released with [`ncfbm_string_free`], engines with
//! [`ncfbm_engine_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ncfbm::algebra::TraceEngine;
use ncfbm::cli::{parse_polynomial, parse_word, DEFAULT_SNAP_DEPTH};
use ncfbm::{Error, HurstParams};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcfbmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Resource = 4,
    Regime = 5,
    Parse = 6,
    NoConvergence = 7,
    Panic = 8,
}

/// Opaque trace engine bound to one Hurst index and horizon.
pub struct NcfbmEngine {
    inner: TraceEngine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NcfbmStatus {
    match e {
        Error::Domain(_) => NcfbmStatus::Domain,
        Error::Resource(_) => NcfbmStatus::Resource,
        Error::Regime(_) => NcfbmStatus::Regime,
        Error::Parse { .. } => NcfbmStatus::Parse,
        Error::NoConvergence(_) => NcfbmStatus::NoConvergence,
    }
}

struct Failure(NcfbmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NcfbmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NcfbmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            NcfbmStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(NcfbmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure(NcfbmStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// Creates an engine; `*out` receives the handle.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ncfbm_engine_new(hurst: f64, horizon: f64, out: *mut *mut NcfbmEngine) -> NcfbmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = HurstParams::new(hurst, horizon)?;
        *out = Box::into_raw(Box::new(NcfbmEngine { inner: TraceEngine::new(params) }));
        Ok(())
    })
}

/// Releases an engine; null is ignored.
///
/// # Safety
/// `engine` must come from [`ncfbm_engine_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ncfbm_engine_free(engine: *mut NcfbmEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Trace of a word such as `"X(1) X(0.25,0.5)"`, times in horizon units.
///
/// # Safety
/// `engine` must be a live handle, `word` a nul-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ncfbm_word_trace(
    engine: *const NcfbmEngine,
    word: *const c_char,
    out: *mut f64,
) -> NcfbmStatus {
    guard(|| {
        let engine = engine.as_ref().ok_or_else(|| null("engine"))?;
        let word = text(word, "word")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let horizon = engine.inner.params().horizon();
        let parsed = parse_word(word, horizon, DEFAULT_SNAP_DEPTH)?;
        *out = engine.inner.element_trace(&parsed.to_element())?;
        Ok(())
    })
}

/// `R_H(s,t)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncfbm_covariance(hurst: f64, horizon: f64, s: f64, t: f64, out: *mut f64) -> NcfbmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = HurstParams::new(hurst, horizon)?;
        *out = ncfbm::fbm_covariance(&p, s, t)?;
        Ok(())
    })
}

/// Number of non-crossing pairings of `2m` points.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncfbm_catalan(m: u32, out: *mut u64) -> NcfbmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if m > 35 {
            return Err(Failure(NcfbmStatus::Resource, format!("Catalan({m}) overflows 64 bits")));
        }
        *out = ncfbm::pairings::catalan(m as usize);
        Ok(())
    })
}

/// Canonical printed form of a polynomial; `*out` must be freed with
/// [`ncfbm_string_free`].
///
/// # Safety
/// `poly` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ncfbm_polynomial_normalize(poly: *const c_char, out: *mut *mut c_char) -> NcfbmStatus {
    guard(|| {
        let poly = text(poly, "poly")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let printed = parse_polynomial(poly)?.to_string();
        *out = CString::new(printed).expect("printer emits no nul").into_raw();
        Ok(())
    })
}

/// Copy of the last error message on this thread, or null if none. Free with
/// [`ncfbm_string_free`].
#[no_mangle]
pub extern "C" fn ncfbm_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null_mut(), |c| c.clone().into_raw()))
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ncfbm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

use std::ffi::{CStr, CString};
use std::ptr;

use ncfbm_ffi::*;

fn engine(h: f64) -> *mut NcfbmEngine {
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { ncfbm_engine_new(h, 1.0, &mut e) }, NcfbmStatus::Ok);
    assert!(!e.is_null());
    e
}

fn last_error() -> String {
    let p = ncfbm_last_error();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { ncfbm_string_free(p) };
    s
}

#[test]
fn word_trace_round_trip() {
    let e = engine(0.3);
    let w = CString::new("X(1) X(1) X(1) X(1)").unwrap();
    let mut v = 0.0;
    assert_eq!(unsafe { ncfbm_word_trace(e, w.as_ptr(), &mut v) }, NcfbmStatus::Ok);
    assert!((v - 2.0).abs() < 1e-12);
    unsafe { ncfbm_engine_free(e) };
}

#[test]
fn error_codes_and_messages() {
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { ncfbm_engine_new(1.5, 1.0, &mut e) }, NcfbmStatus::Domain);
    assert!(e.is_null());
    assert!(last_error().contains("domain"));

    let e = engine(0.5);
    let bad = CString::new("X(2,1)").unwrap();
    let mut v = 0.0;
    assert_eq!(unsafe { ncfbm_word_trace(e, bad.as_ptr(), &mut v) }, NcfbmStatus::Domain);
    let bad = CString::new("X(1").unwrap();
    assert_eq!(unsafe { ncfbm_word_trace(e, bad.as_ptr(), &mut v) }, NcfbmStatus::Parse);
    assert!(last_error().contains("offset 3"));
    assert_eq!(unsafe { ncfbm_word_trace(e, ptr::null(), &mut v) }, NcfbmStatus::NullPointer);
    assert_eq!(unsafe { ncfbm_word_trace(ptr::null(), bad.as_ptr(), &mut v) }, NcfbmStatus::NullPointer);
    unsafe { ncfbm_engine_free(e) };
    unsafe { ncfbm_engine_free(ptr::null_mut()) };
}

#[test]
fn scalars() {
    let mut c = 0u64;
    assert_eq!(unsafe { ncfbm_catalan(7, &mut c) }, NcfbmStatus::Ok);
    assert_eq!(c, 429);
    assert_eq!(unsafe { ncfbm_catalan(99, &mut c) }, NcfbmStatus::Resource);
    let mut r = 0.0;
    assert_eq!(unsafe { ncfbm_covariance(0.5, 1.0, 0.25, 0.75, &mut r) }, NcfbmStatus::Ok);
    assert!((r - 0.25).abs() < 1e-15);
}

#[test]
fn polynomial_strings() {
    let src = CString::new("x^3 + 3 -2x").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ncfbm_polynomial_normalize(src.as_ptr(), &mut out) }, NcfbmStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(out) }.to_str().unwrap(), "3 - 2x + x^3");
    unsafe { ncfbm_string_free(out) };
    let src = CString::new("x^^2").unwrap();
    assert_eq!(unsafe { ncfbm_polynomial_normalize(src.as_ptr(), &mut out) }, NcfbmStatus::Parse);
    let src = CString::new("x^13").unwrap();
    assert_eq!(unsafe { ncfbm_polynomial_normalize(src.as_ptr(), &mut out) }, NcfbmStatus::Resource);
}

#[test]
fn header_is_generated() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ncfbm.h")).unwrap();
    for sym in ["ncfbm_engine_new", "ncfbm_word_trace", "ncfbm_string_free", "typedef struct NcfbmEngine NcfbmEngine"] {
        assert!(h.contains(sym), "missing {sym}");
    }
}

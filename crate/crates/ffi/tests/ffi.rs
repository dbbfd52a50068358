use std::ffi::{CStr, CString};
use std::ptr;

use fpt_barrier_ffi::*;

const YELLOW: &str =
    r#"{"mu": 0.5, "sigma": 1.0, "v0": 2.718281828459045, "k": 1.0, "tilde": "0"}"#;

fn spec(json: &str) -> *mut FptSpec {
    let c = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { fpt_spec_from_json(c.as_ptr(), &mut out) };
    assert_eq!(st, FptStatus::Ok);
    assert!(!out.is_null());
    out
}

fn take(s: *mut std::ffi::c_char) -> String {
    let v = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { fpt_string_free(s) };
    v
}

#[test]
fn classify_through_handle() {
    let s = spec(YELLOW);
    let mut zone = FptZone::Dark;
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { fpt_classify(s, &mut zone, &mut json) }, FptStatus::Ok);
    assert_eq!(zone, FptZone::Yellow);
    let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    assert_eq!(v["zone"]["zone"], "Yellow");
    unsafe { fpt_spec_free(s) };
}

#[test]
fn bad_spec_sets_error_message() {
    let c = CString::new(r#"{"mu": 0, "sigma": -1, "v0": 2, "k": 1, "tilde": "0"}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { fpt_spec_from_json(c.as_ptr(), &mut out) }, FptStatus::InvalidSpec);
    assert!(out.is_null());
    let msg = unsafe { CStr::from_ptr(fpt_last_error_message()) }.to_str().unwrap();
    assert!(msg.contains("sigma"), "{msg}");
}

#[test]
fn null_arguments_are_rejected() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { fpt_spec_from_json(ptr::null(), &mut out) }, FptStatus::NullPointer);
    assert_eq!(unsafe { fpt_classify(ptr::null(), ptr::null_mut(), ptr::null_mut()) }, FptStatus::NullPointer);
    assert_eq!(unsafe { fpt_samples_len(ptr::null()) }, 0);
    unsafe {
        fpt_spec_free(ptr::null_mut());
        fpt_samples_free(ptr::null_mut());
        fpt_string_free(ptr::null_mut());
    }
}

#[test]
fn bounds_report_serializes_infinity() {
    let s = spec(YELLOW);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { fpt_bounds(s, f64::NAN, 0, &mut json) }, FptStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    assert_eq!(v["bounds"][0]["kind"], "ExactMean");
    assert_eq!(v["bounds"][0]["value"], "inf");
    unsafe { fpt_spec_free(s) };
}

#[test]
fn simulate_and_read_samples() {
    let s = spec(YELLOW);
    let cfg = FptSimConfig {
        n_paths: 500,
        dt: 0.01,
        horizon: 1.0,
        seed: 3,
        bridge_correction: 1,
        antithetic: 0,
        parallel: 1,
    };
    let mut samples = ptr::null_mut();
    assert_eq!(unsafe { fpt_simulate(s, &cfg, &mut samples) }, FptStatus::Ok);
    assert_eq!(unsafe { fpt_samples_len(samples) }, 500);
    let censored = unsafe { fpt_samples_n_censored(samples) };
    let mut crossed_count = 0;
    for i in 0..500 {
        let (mut c, mut t) = (0u8, 0.0f64);
        assert_eq!(unsafe { fpt_samples_get(samples, i, &mut c, &mut t) }, FptStatus::Ok);
        assert!(t > 0.0 && t <= 1.0);
        crossed_count += c as u64;
    }
    assert_eq!(crossed_count + censored, 500);
    let (mut c, mut t) = (0u8, 0.0f64);
    assert_eq!(unsafe { fpt_samples_get(samples, 500, &mut c, &mut t) }, FptStatus::OutOfRange);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { fpt_samples_estimate(samples, &mut json) }, FptStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    assert_eq!(v["n_paths"], 500);
    unsafe {
        fpt_samples_free(samples);
        fpt_spec_free(s);
    }
}

#[test]
fn invalid_config_is_reported() {
    let s = spec(YELLOW);
    let cfg = FptSimConfig {
        n_paths: 0,
        dt: 0.01,
        horizon: 1.0,
        seed: 0,
        bridge_correction: 1,
        antithetic: 0,
        parallel: 0,
    };
    let mut samples = ptr::null_mut();
    assert_eq!(unsafe { fpt_simulate(s, &cfg, &mut samples) }, FptStatus::InvalidConfig);
    assert!(samples.is_null());
    unsafe { fpt_spec_free(s) };
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/fpt_barrier.h");
    for name in [
        "fpt_last_error_message",
        "fpt_string_free",
        "fpt_spec_from_json",
        "fpt_spec_free",
        "fpt_classify",
        "fpt_bounds",
        "fpt_simulate",
        "fpt_samples_free",
        "fpt_samples_len",
        "fpt_samples_n_censored",
        "fpt_samples_get",
        "fpt_samples_estimate",
        "FPT_STATUS_OK = 0",
        "typedef struct FptSpec FptSpec",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c_when_a_compiler_exists() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/fpt_barrier.h");
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .output()
    else {
        eprintln!("no C compiler on PATH; skipping header compile check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

//! C ABI over `fpt_barrier`.
//!
//! Specs and sample sets are opaque heap handles released with their `_free`
//! function. Every fallible call returns an [`FptStatus`]; on failure the
//! message is available from [`fpt_last_error_message`] on the same thread.
//! Strings handed out by the library must be released with [`fpt_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fpt_barrier::cli::{cmd_bounds, OutputFormat, RunConfig, RunOptions};
use fpt_barrier::classifier::{classify_spec, ProbeGrid};
use fpt_barrier::sim::{estimate, simulate_fpt, FptSampleSet, SimConfig};
use fpt_barrier::{BarrierSpec, Zone};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidSpec = 3,
    ClassifyFailed = 4,
    BoundsFailed = 5,
    SimulationFailed = 6,
    InvalidConfig = 7,
    OutOfRange = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FptZone {
    Red = 0,
    Yellow = 1,
    Green = 2,
    TwilightMeanUnknown = 3,
    TwilightFinitenessUnknown = 4,
    Dark = 5,
}

impl From<Zone> for FptZone {
    fn from(z: Zone) -> Self {
        match z {
            Zone::Red => FptZone::Red,
            Zone::Yellow => FptZone::Yellow,
            Zone::Green => FptZone::Green,
            Zone::TwilightMeanUnknown => FptZone::TwilightMeanUnknown,
            Zone::TwilightFinitenessUnknown => FptZone::TwilightFinitenessUnknown,
            Zone::Dark => FptZone::Dark,
        }
    }
}

/// Simulation settings; booleans are 0 or non-zero.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FptSimConfig {
    pub n_paths: u64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub bridge_correction: u8,
    pub antithetic: u8,
    pub parallel: u8,
}

/// Opaque barrier specification.
pub struct FptSpec(BarrierSpec);

/// Opaque set of simulated first passage times.
pub struct FptSamples(FptSampleSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: FptStatus, msg: impl Into<String>) -> FptStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting a panic into [`FptStatus::Panic`].
fn guard(f: impl FnOnce() -> FptStatus) -> FptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FptStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, FptStatus> {
    if p.is_null() {
        return Err(fail(FptStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(FptStatus::InvalidUtf8, e.to_string()))
}

fn hand_out(s: String, out: *mut *mut c_char) -> FptStatus {
    match CString::new(s) {
        Ok(c) => {
            // SAFETY: caller checked `out` for null.
            unsafe { *out = c.into_raw() };
            FptStatus::Ok
        }
        Err(e) => fail(FptStatus::Panic, e.to_string()),
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fpt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fpt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a barrier spec JSON document into a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fpt_spec_from_json(json: *const c_char, out: *mut *mut FptSpec) -> FptStatus {
    guard(|| {
        if out.is_null() {
            return fail(FptStatus::NullPointer, "null output pointer");
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match BarrierSpec::from_json(text) {
            Ok(spec) => {
                *out = Box::into_raw(Box::new(FptSpec(spec)));
                FptStatus::Ok
            }
            Err(e) => fail(FptStatus::InvalidSpec, e.to_string()),
        }
    })
}

/// # Safety
/// `spec` must come from [`fpt_spec_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fpt_spec_free(spec: *mut FptSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Classifies the spec, writing the zone and a JSON report
/// `{"zone": ..., "limits": ...}`. Either output may be null.
///
/// # Safety
/// `spec` must be a live handle; non-null outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fpt_classify(
    spec: *const FptSpec,
    zone_out: *mut FptZone,
    json_out: *mut *mut c_char,
) -> FptStatus {
    guard(|| {
        let Some(spec) = spec.as_ref() else {
            return fail(FptStatus::NullPointer, "null spec");
        };
        match classify_spec(&spec.0, &ProbeGrid::default()) {
            Ok((limits, zone)) => {
                if !zone_out.is_null() {
                    *zone_out = zone.zone.into();
                }
                if json_out.is_null() {
                    return FptStatus::Ok;
                }
                let v = serde_json::json!({ "zone": zone, "limits": limits });
                hand_out(v.to_string(), json_out)
            }
            Err(e) => fail(FptStatus::ClassifyFailed, e.to_string()),
        }
    })
}

/// Runs every applicable bound and writes the JSON report. Pass NaN for
/// `alpha` to skip the bounds that compare against the critical barrier.
///
/// # Safety
/// `spec` must be a live handle and `json_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fpt_bounds(
    spec: *const FptSpec,
    alpha: f64,
    attest_tail: u8,
    json_out: *mut *mut c_char,
) -> FptStatus {
    guard(|| {
        let Some(spec) = spec.as_ref() else {
            return fail(FptStatus::NullPointer, "null spec");
        };
        if json_out.is_null() {
            return fail(FptStatus::NullPointer, "null output pointer");
        }
        let config = RunConfig {
            spec: spec.0.clone(),
            options: RunOptions {
                alpha: (!alpha.is_nan()).then_some(alpha),
                attest_tail: Some(attest_tail != 0),
                ..Default::default()
            },
            format: OutputFormat::Json,
        };
        match cmd_bounds(&config) {
            Ok(out) => hand_out(out.body, json_out),
            Err(e) => fail(FptStatus::BoundsFailed, e.detail),
        }
    })
}

/// Simulates first passage times into a new sample handle.
///
/// # Safety
/// `spec` and `config` must be valid pointers and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpt_simulate(
    spec: *const FptSpec,
    config: *const FptSimConfig,
    out: *mut *mut FptSamples,
) -> FptStatus {
    guard(|| {
        let (Some(spec), Some(c)) = (spec.as_ref(), config.as_ref()) else {
            return fail(FptStatus::NullPointer, "null spec or config");
        };
        if out.is_null() {
            return fail(FptStatus::NullPointer, "null output pointer");
        }
        let Ok(n_paths) = usize::try_from(c.n_paths) else {
            return fail(FptStatus::InvalidConfig, "n_paths does not fit in usize");
        };
        let cfg = SimConfig {
            n_paths,
            dt: c.dt,
            horizon: c.horizon,
            seed: c.seed,
            bridge_correction: c.bridge_correction != 0,
            antithetic: c.antithetic != 0,
            parallel: c.parallel != 0,
        };
        if let Err(e) = cfg.validate() {
            return fail(FptStatus::InvalidConfig, e.to_string());
        }
        match simulate_fpt(&spec.0, &cfg) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(FptSamples(s)));
                FptStatus::Ok
            }
            Err(e) => fail(FptStatus::SimulationFailed, e.to_string()),
        }
    })
}

/// # Safety
/// `samples` must come from [`fpt_simulate`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fpt_samples_free(samples: *mut FptSamples) {
    if !samples.is_null() {
        drop(Box::from_raw(samples));
    }
}

/// Number of paths, or 0 for a null handle.
///
/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fpt_samples_len(samples: *const FptSamples) -> u64 {
    samples.as_ref().map_or(0, |s| s.0.n_paths() as u64)
}

/// Number of paths censored at the horizon, or 0 for a null handle.
///
/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fpt_samples_n_censored(samples: *const FptSamples) -> u64 {
    samples.as_ref().map_or(0, |s| s.0.n_censored as u64)
}

/// Passage time of path `index`. `crossed` receives 0 for a censored path,
/// in which case `time` receives the horizon.
///
/// # Safety
/// `samples` must be a live handle; `crossed` and `time` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fpt_samples_get(
    samples: *const FptSamples,
    index: u64,
    crossed: *mut u8,
    time: *mut f64,
) -> FptStatus {
    guard(|| {
        let Some(s) = samples.as_ref() else {
            return fail(FptStatus::NullPointer, "null samples");
        };
        if crossed.is_null() || time.is_null() {
            return fail(FptStatus::NullPointer, "null output pointer");
        }
        let Some(t) = usize::try_from(index).ok().and_then(|i| s.0.times.get(i)) else {
            return fail(FptStatus::OutOfRange, format!("index {index} out of range"));
        };
        *crossed = u8::from(t.is_some());
        *time = t.unwrap_or(s.0.config.horizon);
        FptStatus::Ok
    })
}

/// Survival, truncated mean and tail slope of the samples as JSON.
///
/// # Safety
/// `samples` must be a live handle and `json_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fpt_samples_estimate(
    samples: *const FptSamples,
    json_out: *mut *mut c_char,
) -> FptStatus {
    guard(|| {
        let Some(s) = samples.as_ref() else {
            return fail(FptStatus::NullPointer, "null samples");
        };
        if json_out.is_null() {
            return fail(FptStatus::NullPointer, "null output pointer");
        }
        match estimate(&s.0) {
            Ok(e) => hand_out(serde_json::to_string(&e).expect("estimate serializes"), json_out),
            Err(e) => fail(FptStatus::SimulationFailed, e.to_string()),
        }
    })
}

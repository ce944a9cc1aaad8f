//! C ABI for the concave-majorant laboratory: opaque handles, status
//! codes, thread-local error messages. The header is generated into
//! `include/cmlab.h` at build time.
//!
//! Conventions: functions return `CmlabStatus`; outputs go through pointer
//! arguments; every handle produced by a `*_new` has a matching `*_free`;
//! strings returned by the library are freed with `cmlab_string_free`.

use cmlab::experiments::{self, ExperimentSpec};
use cmlab::rng::{RngStream, Stream};
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmlabStatus {
    Ok = 0,
    InvalidArgument = 1,
    RuntimeError = 2,
    NullPointer = 3,
    Utf8Error = 4,
    TestFailure = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CmlabStatus, msg: impl Into<String>) -> CmlabStatus {
    set_error(msg.into());
    status
}

fn guard<F: FnOnce() -> CmlabStatus>(f: F) -> CmlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(CmlabStatus::Panic, "internal panic"),
    }
}

/// Last error message for this thread, or NULL if none. Borrowed pointer;
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cmlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(c) => c.as_ptr(),
        None => std::ptr::null(),
    })
}

/// Library version string (static storage).
#[no_mangle]
pub extern "C" fn cmlab_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Opaque reproducible RNG stream.
pub struct CmlabRng {
    stream: Stream,
}

/// Create a stream from (seed, stream_id). Same pair, same sequence.
#[no_mangle]
pub extern "C" fn cmlab_rng_new(seed: u64, stream_id: u64, out: *mut *mut CmlabRng) -> CmlabStatus {
    guard(|| {
        if out.is_null() {
            return fail(CmlabStatus::NullPointer, "out pointer is null");
        }
        let rng = Box::new(CmlabRng { stream: RngStream::new(seed, stream_id).rng() });
        unsafe { *out = Box::into_raw(rng) };
        CmlabStatus::Ok
    })
}

/// Destroy a stream created by `cmlab_rng_new`.
///
/// # Safety
/// `rng` must be a pointer previously returned by `cmlab_rng_new` and not
/// freed since.
#[no_mangle]
pub unsafe extern "C" fn cmlab_rng_free(rng: *mut CmlabRng) {
    if !rng.is_null() {
        drop(unsafe { Box::from_raw(rng) });
    }
}

unsafe fn rng_mut<'a>(rng: *mut CmlabRng) -> Option<&'a mut CmlabRng> {
    unsafe { rng.as_mut() }
}

/// Fill `out[0..n]` with draws of `2K(1) - B(1)` from the exact Poisson
/// construction.
///
/// # Safety
/// `rng` must be a live handle; `out` must point to at least `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn cmlab_sample_chi5(
    rng: *mut CmlabRng,
    out: *mut f64,
    n: usize,
) -> CmlabStatus {
    guard(|| {
        let Some(handle) = (unsafe { rng_mut(rng) }) else {
            return fail(CmlabStatus::NullPointer, "rng handle is null");
        };
        if out.is_null() {
            return fail(CmlabStatus::NullPointer, "out buffer is null");
        }
        let slice = unsafe { std::slice::from_raw_parts_mut(out, n) };
        for v in slice.iter_mut() {
            match cmlab::poisson::straddle_time_one(&mut handle.stream) {
                Ok(s) => *v = s.state.k + s.state.y,
                Err(e) => return fail(CmlabStatus::RuntimeError, e.to_string()),
            }
        }
        CmlabStatus::Ok
    })
}

/// Fill six parallel buffers with the straddling-face state at t = 1:
/// slope, value, intercept, gap, left vertex, right vertex.
///
/// # Safety
/// `rng` must be a live handle; each buffer must hold at least `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn cmlab_sample_straddle(
    rng: *mut CmlabRng,
    kprime: *mut f64,
    k: *mut f64,
    intercept: *mut f64,
    gap: *mut f64,
    g1: *mut f64,
    d1: *mut f64,
    n: usize,
) -> CmlabStatus {
    guard(|| {
        let Some(handle) = (unsafe { rng_mut(rng) }) else {
            return fail(CmlabStatus::NullPointer, "rng handle is null");
        };
        let bufs = [kprime, k, intercept, gap, g1, d1];
        if bufs.iter().any(|b| b.is_null()) {
            return fail(CmlabStatus::NullPointer, "output buffer is null");
        }
        for i in 0..n {
            match cmlab::poisson::straddle_time_one(&mut handle.stream) {
                Ok(s) => unsafe {
                    *kprime.add(i) = s.state.a;
                    *k.add(i) = s.state.k;
                    *intercept.add(i) = s.intercept;
                    *gap.add(i) = s.state.y;
                    *g1.add(i) = s.g1;
                    *d1.add(i) = s.d1;
                },
                Err(e) => return fail(CmlabStatus::RuntimeError, e.to_string()),
            }
        }
        CmlabStatus::Ok
    })
}

/// Fill `ds`/`dz` with zenith increments for slopes `0 < b < a`.
///
/// # Safety
/// `rng` must be a live handle; `ds` and `dz` must hold `n` doubles each.
#[no_mangle]
pub unsafe extern "C" fn cmlab_sample_zenith(
    rng: *mut CmlabRng,
    a: f64,
    b: f64,
    ds: *mut f64,
    dz: *mut f64,
    n: usize,
) -> CmlabStatus {
    guard(|| {
        let Some(handle) = (unsafe { rng_mut(rng) }) else {
            return fail(CmlabStatus::NullPointer, "rng handle is null");
        };
        if ds.is_null() || dz.is_null() {
            return fail(CmlabStatus::NullPointer, "output buffer is null");
        }
        for i in 0..n {
            match cmlab::poisson::zenith_increment(a, b, &mut handle.stream) {
                Ok((s, z)) => unsafe {
                    *ds.add(i) = s;
                    *dz.add(i) = z;
                },
                Err(e) => return fail(CmlabStatus::InvalidArgument, e.to_string()),
            }
        }
        CmlabStatus::Ok
    })
}

/// Evaluate the joint density of (K'(1), I(1), K(1) - B(1)).
#[no_mangle]
pub extern "C" fn cmlab_f3_density(a: f64, b: f64, y: f64) -> f64 {
    cmlab::dist::f3_density(a, b, y)
}

/// Evaluate the zenith increment density `h^{a,b}(s, z)`; returns a
/// negative value on invalid parameters.
#[no_mangle]
pub extern "C" fn cmlab_zenith_density(a: f64, b: f64, s: f64, z: f64) -> f64 {
    cmlab::dist::zenith_density(a, b, s, z).unwrap_or(-1.0)
}

/// Gaussian kernels: writes (pdf, tail, mills) at `x`.
///
/// # Safety
/// The three output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cmlab_gaussian_kernels(
    x: f64,
    pdf: *mut f64,
    tail: *mut f64,
    mills: *mut f64,
) -> CmlabStatus {
    guard(|| {
        if pdf.is_null() || tail.is_null() || mills.is_null() {
            return fail(CmlabStatus::NullPointer, "output pointer is null");
        }
        let k = cmlab::dist::gaussian_kernels(x);
        unsafe {
            *pdf = k.pdf;
            *tail = k.tail;
            *mills = k.mills;
        }
        CmlabStatus::Ok
    })
}

/// Run a registered experiment; `params_json` (may be NULL) is a JSON
/// object of numeric overrides. On success `out_json` receives a JSON
/// array of test reports (free with `cmlab_string_free`). Returns
/// `TestFailure` when the experiment ran but a pass-semantics test failed.
///
/// # Safety
/// `name` must be a NUL-terminated string; `params_json` NULL or
/// NUL-terminated; `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmlab_run_experiment(
    name: *const c_char,
    params_json: *const c_char,
    seed: u64,
    out_json: *mut *mut c_char,
) -> CmlabStatus {
    guard(|| {
        if name.is_null() || out_json.is_null() {
            return fail(CmlabStatus::NullPointer, "name or out pointer is null");
        }
        let name = match unsafe { CStr::from_ptr(name) }.to_str() {
            Ok(s) => s.to_string(),
            Err(e) => return fail(CmlabStatus::Utf8Error, e.to_string()),
        };
        let params: BTreeMap<String, f64> = if params_json.is_null() {
            BTreeMap::new()
        } else {
            let text = match unsafe { CStr::from_ptr(params_json) }.to_str() {
                Ok(s) => s,
                Err(e) => return fail(CmlabStatus::Utf8Error, e.to_string()),
            };
            match serde_json::from_str(text) {
                Ok(m) => m,
                Err(e) => return fail(CmlabStatus::InvalidArgument, format!("params: {e}")),
            }
        };
        let spec = ExperimentSpec { name, params, seed };
        let output = match experiments::run(&spec) {
            Ok(o) => o,
            Err(e @ cmlab::Error::UnknownExperiment { .. })
            | Err(e @ cmlab::Error::InvalidParameter(_)) => {
                return fail(CmlabStatus::InvalidArgument, e.to_string())
            }
            Err(e) => return fail(CmlabStatus::RuntimeError, e.to_string()),
        };
        let all_pass = output.reports.iter().all(|r| r.pass);
        let json = match serde_json::to_string_pretty(&output.reports) {
            Ok(j) => j,
            Err(e) => return fail(CmlabStatus::RuntimeError, e.to_string()),
        };
        let c = match CString::new(json) {
            Ok(c) => c,
            Err(e) => return fail(CmlabStatus::RuntimeError, e.to_string()),
        };
        unsafe { *out_json = c.into_raw() };
        if all_pass {
            CmlabStatus::Ok
        } else {
            fail(CmlabStatus::TestFailure, "one or more tests failed")
        }
    })
}

/// Newline-separated registry listing (free with `cmlab_string_free`).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmlab_registry_list(out: *mut *mut c_char) -> CmlabStatus {
    guard(|| {
        if out.is_null() {
            return fail(CmlabStatus::NullPointer, "out pointer is null");
        }
        let text: String = experiments::registry()
            .iter()
            .map(|d| format!("{}\t{}\n", d.name, d.claim))
            .collect();
        unsafe { *out = CString::new(text).unwrap().into_raw() };
        CmlabStatus::Ok
    })
}

/// Free a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a cmlab function and not freed since.
#[no_mangle]
pub unsafe extern "C" fn cmlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi5_through_the_abi() {
        let mut handle: *mut CmlabRng = std::ptr::null_mut();
        assert_eq!(cmlab_rng_new(42, 0, &mut handle), CmlabStatus::Ok);
        let mut buf = vec![0.0f64; 256];
        let status = unsafe { cmlab_sample_chi5(handle, buf.as_mut_ptr(), buf.len()) };
        assert_eq!(status, CmlabStatus::Ok);
        assert!(buf.iter().all(|&v| v > 0.0));
        // determinism across handles with the same (seed, stream)
        let mut handle2: *mut CmlabRng = std::ptr::null_mut();
        assert_eq!(cmlab_rng_new(42, 0, &mut handle2), CmlabStatus::Ok);
        let mut buf2 = vec![0.0f64; 256];
        let status = unsafe { cmlab_sample_chi5(handle2, buf2.as_mut_ptr(), buf2.len()) };
        assert_eq!(status, CmlabStatus::Ok);
        assert_eq!(buf, buf2);
        unsafe {
            cmlab_rng_free(handle);
            cmlab_rng_free(handle2);
        }
    }

    #[test]
    fn zenith_rejects_bad_slopes() {
        let mut handle: *mut CmlabRng = std::ptr::null_mut();
        assert_eq!(cmlab_rng_new(1, 0, &mut handle), CmlabStatus::Ok);
        let mut ds = vec![0.0f64; 4];
        let mut dz = vec![0.0f64; 4];
        let status = unsafe {
            cmlab_sample_zenith(handle, 1.0, 2.0, ds.as_mut_ptr(), dz.as_mut_ptr(), 4)
        };
        assert_eq!(status, CmlabStatus::InvalidArgument);
        let msg = cmlab_last_error_message();
        assert!(!msg.is_null());
        unsafe { cmlab_rng_free(handle) };
    }

    #[test]
    fn run_experiment_roundtrip() {
        let name = CString::new("tau_counts").unwrap();
        let params = CString::new(r#"{"windows": 2000}"#).unwrap();
        let mut out: *mut c_char = std::ptr::null_mut();
        let status =
            unsafe { cmlab_run_experiment(name.as_ptr(), params.as_ptr(), 7, &mut out) };
        assert_eq!(status, CmlabStatus::Ok);
        let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        assert!(text.contains("tau_counts"));
        unsafe { cmlab_string_free(out) };
        // unknown name
        let bad = CString::new("nosuch").unwrap();
        let status = unsafe { cmlab_run_experiment(bad.as_ptr(), std::ptr::null(), 7, &mut out) };
        assert_eq!(status, CmlabStatus::InvalidArgument);
    }

    #[test]
    fn version_and_kernels() {
        let v = unsafe { CStr::from_ptr(cmlab_version()) };
        assert!(!v.to_bytes().is_empty());
        let (mut p, mut t, mut m) = (0.0, 0.0, 0.0);
        let status = unsafe { cmlab_gaussian_kernels(0.0, &mut p, &mut t, &mut m) };
        assert_eq!(status, CmlabStatus::Ok);
        assert!((t - 0.5).abs() < 1e-15);
    }
}

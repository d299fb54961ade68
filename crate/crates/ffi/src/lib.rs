//! C ABI over the echo-consonance library.
//!
//! Every fallible call returns an `EcStatus`; on failure the message is
//! available from `ec_last_error_message` on the same thread. Objects are
//! opaque handles released with their `_free` function. Strings returned
//! to the caller are released with `ec_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use echo_consonance::circuit::{Circuit, CircuitConfig, CircuitKind};
use echo_consonance::device::{self, MemristorParams};
use echo_consonance::psycho::{self, DissonanceParams};
use echo_consonance::score::{IntervalSpec, Quality};
use echo_consonance::study::{self, ExperimentConfig, RunAnalysis};
use echo_consonance::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Validation = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcCircuitKind {
    Series = 0,
    Wien = 1,
    Synapse = 2,
}

impl From<EcCircuitKind> for CircuitKind {
    fn from(k: EcCircuitKind) -> Self {
        match k {
            EcCircuitKind::Series => CircuitKind::SeriesMr,
            EcCircuitKind::Wien => CircuitKind::WienBridge,
            EcCircuitKind::Synapse => CircuitKind::BridgeSynapse,
        }
    }
}

/// Opaque circuit instance.
pub struct EcCircuit {
    inner: Circuit,
}

/// Opaque analyzed SNESM run.
pub struct EcRun {
    inner: RunAnalysis,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn fail(status: EcStatus, msg: impl Into<String>) -> EcStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> EcStatus {
    let status = match e {
        Error::Domain(_) => EcStatus::Domain,
        Error::Validation(_) => EcStatus::Validation,
        Error::Io { .. } => EcStatus::Io,
        Error::Csv(_) | Error::Json(_) => EcStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> EcStatus) -> EcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(EcStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, EcStatus> {
    if s.is_null() {
        return Err(fail(EcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(EcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> EcStatus {
    if out.is_null() {
        return fail(EcStatus::NullPointer, "output pointer is null");
    }
    *out = value;
    EcStatus::Ok
}

/// Copies `src` into `buf`. `*len` always receives the full length; a null
/// `buf` with `cap == 0` is a size query.
unsafe fn copy_out(src: &[f64], buf: *mut f64, cap: usize, len: *mut usize) -> EcStatus {
    if len.is_null() {
        return fail(EcStatus::NullPointer, "length pointer is null");
    }
    *len = src.len();
    if buf.is_null() {
        return if cap == 0 {
            EcStatus::Ok
        } else {
            fail(EcStatus::NullPointer, "buffer is null")
        };
    }
    if cap < src.len() {
        return fail(
            EcStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", src.len()),
        );
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    EcStatus::Ok
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; valid until the next call
/// that fails on the same thread.
#[no_mangle]
pub extern "C" fn ec_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Sensory dissonance of two sine partials with the default parameters.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ec_pair_dissonance(
    f1: f64,
    f2: f64,
    l1: f64,
    l2: f64,
    out: *mut f64,
) -> EcStatus {
    guard(
        || match psycho::pair_dissonance(f1, f2, l1, l2, &DissonanceParams::default()) {
            Ok(d) => write_out(out, d),
            Err(e) => from_error(e),
        },
    )
}

/// Memristor state rate at terminal voltage `v` (default parameters).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ec_state_rate(v: f64, out: *mut f64) -> EcStatus {
    guard(|| write_out(out, device::state_rate(v, &MemristorParams::default())))
}

/// Memristor resistance at state `r` (default parameters).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ec_resistance(r: f64, out: *mut f64) -> EcStatus {
    guard(
        || match device::resistance(r, &MemristorParams::default()) {
            Ok(x) => write_out(out, x),
            Err(e) => from_error(e),
        },
    )
}

/// Creates a circuit with default components. `amp_gain <= 0` keeps the
/// default amplifier gain.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ec_circuit_new(
    kind: EcCircuitKind,
    amp_gain: f64,
    out: *mut *mut EcCircuit,
) -> EcStatus {
    guard(|| {
        let mut cfg = CircuitConfig::default();
        if amp_gain > 0.0 {
            cfg.amp_gain = amp_gain;
        }
        if let Err(e) = cfg.validate() {
            return from_error(e);
        }
        let h = Box::new(EcCircuit {
            inner: Circuit::new(kind.into(), cfg),
        });
        write_out(out, Box::into_raw(h))
    })
}

/// # Safety
/// `h` must come from `ec_circuit_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ec_circuit_free(h: *mut EcCircuit) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Output voltage and source current at source voltage `v_in` for the
/// current states. Either output pointer may be null.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ec_circuit_observe(
    h: *const EcCircuit,
    v_in: f64,
    v_out: *mut f64,
    i_source: *mut f64,
) -> EcStatus {
    guard(|| {
        let Some(c) = h.as_ref() else {
            return fail(EcStatus::NullPointer, "circuit handle is null");
        };
        let sol = c.inner.observe(v_in);
        if !v_out.is_null() {
            *v_out = sol.v_out;
        }
        if !i_source.is_null() {
            *i_source = sol.i_source;
        }
        EcStatus::Ok
    })
}

/// One RK4 step of length `dt` with the source voltage at the start,
/// midpoint and end of the step.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ec_circuit_step(
    h: *mut EcCircuit,
    dt: f64,
    v_start: f64,
    v_mid: f64,
    v_end: f64,
) -> EcStatus {
    guard(|| {
        let Some(c) = h.as_mut() else {
            return fail(EcStatus::NullPointer, "circuit handle is null");
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return fail(EcStatus::InvalidArgument, "dt must be positive");
        }
        c.inner.step(dt, [v_start, v_mid, v_end]);
        EcStatus::Ok
    })
}

/// Device states (1 for the series circuit, 4 for the bridges).
///
/// # Safety
/// `h` must be a live handle; `buf` valid for `cap` writes; `len` valid.
#[no_mangle]
pub unsafe extern "C" fn ec_circuit_states(
    h: *const EcCircuit,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> EcStatus {
    guard(|| {
        let Some(c) = h.as_ref() else {
            return fail(EcStatus::NullPointer, "circuit handle is null");
        };
        let r: Vec<f64> = c.inner.states().iter().map(|s| s.r).collect();
        copy_out(&r, buf, cap, len)
    })
}

/// Default experiment configuration as JSON (free with `ec_string_free`).
#[no_mangle]
pub extern "C" fn ec_config_default_json() -> *mut c_char {
    match ExperimentConfig::default().to_json() {
        Ok(s) => into_c_string(s),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

unsafe fn parse_config(config_json: *const c_char) -> Result<ExperimentConfig, EcStatus> {
    if config_json.is_null() {
        return Ok(ExperimentConfig::default());
    }
    let text = read_str(config_json, "config")?;
    let cfg = ExperimentConfig::from_json(text).map_err(from_error)?;
    cfg.validate().map_err(from_error)?;
    Ok(cfg)
}

/// Simulates and analyzes one interval. `config_json` may be null for
/// defaults; `feedback_gain < 0` keeps the configured gain. `quality` is an
/// interval name such as "perfect5".
///
/// # Safety
/// String arguments must be NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ec_snesm_run(
    config_json: *const c_char,
    quality: *const c_char,
    base_hz: f64,
    feedback_gain: f64,
    out: *mut *mut EcRun,
) -> EcStatus {
    guard(|| {
        let mut cfg = match parse_config(config_json) {
            Ok(c) => c,
            Err(s) => return s,
        };
        let name = match read_str(quality, "quality") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let q: Quality = match name.parse() {
            Ok(q) => q,
            Err(e) => return from_error(e),
        };
        if feedback_gain >= 0.0 {
            cfg.snesm.feedback_gain = feedback_gain;
        }
        if let Err(e) = cfg.validate() {
            return from_error(e);
        }
        let run = IntervalSpec::new(q, base_hz).and_then(|iv| study::simulate_interval(&iv, &cfg));
        match run {
            Ok(r) => write_out(out, Box::into_raw(Box::new(EcRun { inner: r }))),
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `h` must come from `ec_snesm_run` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ec_run_free(h: *mut EcRun) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of generation windows (0 for a null handle).
///
/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ec_run_generations(h: *const EcRun) -> usize {
    h.as_ref().map_or(0, |r| r.inner.trace.windows.len())
}

unsafe fn with_generation(
    h: *const EcRun,
    g: usize,
    f: impl FnOnce(&RunAnalysis) -> Vec<f64>,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> EcStatus {
    guard(|| {
        let Some(r) = h.as_ref() else {
            return fail(EcStatus::NullPointer, "run handle is null");
        };
        if g >= r.inner.trace.windows.len() {
            return fail(EcStatus::InvalidArgument, format!("no generation {g}"));
        }
        copy_out(&f(&r.inner), buf, cap, len)
    })
}

/// Samples of generation window `g` at the 8192 Hz analysis rate.
///
/// # Safety
/// `h` live; `buf` valid for `cap` writes; `len` valid.
#[no_mangle]
pub unsafe extern "C" fn ec_run_window(
    h: *const EcRun,
    g: usize,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> EcStatus {
    with_generation(h, g, |r| r.trace.windows[g].clone(), buf, cap, len)
}

/// Peak frequencies of generation `g` normalized by the lower tone.
///
/// # Safety
/// `h` live; `buf` valid for `cap` writes; `len` valid.
#[no_mangle]
pub unsafe extern "C" fn ec_run_peaks(
    h: *const EcRun,
    g: usize,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> EcStatus {
    with_generation(
        h,
        g,
        |r| r.peaks[g].peaks.iter().map(|p| p.normalized).collect(),
        buf,
        cap,
        len,
    )
}

/// Runs the full study described by `config_json` (null for defaults)
/// and returns the manifest JSON (free with `ec_string_free`). `jobs == 0`
/// uses every processor.
///
/// # Safety
/// `config_json` NUL-terminated or null; `manifest_json` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ec_study_run(
    config_json: *const c_char,
    jobs: usize,
    manifest_json: *mut *mut c_char,
) -> EcStatus {
    guard(|| {
        if manifest_json.is_null() {
            return fail(EcStatus::NullPointer, "manifest output pointer is null");
        }
        let cfg = match parse_config(config_json) {
            Ok(c) => c,
            Err(s) => return s,
        };
        let jobs = (jobs > 0).then_some(jobs);
        match study::run_full_study(&cfg, jobs)
            .and_then(|r| serde_json::to_string_pretty(&r.manifest).map_err(Error::from))
        {
            Ok(s) => write_out(manifest_json, into_c_string(s)),
            Err(e) => from_error(e),
        }
    })
}

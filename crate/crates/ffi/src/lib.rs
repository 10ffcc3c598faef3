//! C ABI for `ldtl-shield`.
//!
//! Every fallible function returns an [`LdtlStatus`]; on failure a message is
//! available from [`ldtl_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Strings returned
//! through `char **` are owned by the caller and released with
//! [`ldtl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ldtl_shield::barrier::{dtbf_check, ft_dtbf_check, ft_time_bound, AlphaFn, FtParams};
use ldtl_shield::config::{ConfigError, ScenarioConfig};
use ldtl_shield::model::{Belief, JointAction, JointObservation};
use ldtl_shield::sim::{run_episode_seeded, Scenario};
use ldtl_shield::trace::Trace;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdtlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidScenario = 5,
    OutOfRange = 6,
    ZeroLikelihood = 7,
    InvalidParameter = 8,
    Panic = 9,
}

/// A validated scenario.
pub struct LdtlScenario {
    inner: Scenario,
}

/// A simulated episode.
pub struct LdtlTrace {
    inner: Trace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(text).expect("interior nuls removed")));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: LdtlStatus, msg: impl Into<String>) -> LdtlStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into [`LdtlStatus::Panic`].
fn guard(f: impl FnOnce() -> LdtlStatus) -> LdtlStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(LdtlStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, LdtlStatus> {
    if p.is_null() {
        return Err(fail(LdtlStatus::NullPointer, "null string argument"));
    }
    // SAFETY: the caller passes a nul-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(LdtlStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn config_status(e: &ConfigError) -> LdtlStatus {
    match e {
        ConfigError::Io { .. } => LdtlStatus::Io,
        ConfigError::Toml(_) => LdtlStatus::Parse,
        ConfigError::Invalid(_) => LdtlStatus::InvalidScenario,
    }
}

fn build_scenario(parsed: Result<ScenarioConfig, ConfigError>, out: *mut *mut LdtlScenario) -> LdtlStatus {
    let cfg = match parsed {
        Ok(c) => c,
        Err(e) => return fail(config_status(&e), e.to_string()),
    };
    match cfg.build() {
        Ok(inner) => {
            // SAFETY: `out` was checked to be non-null by the caller of this helper.
            unsafe { *out = Box::into_raw(Box::new(LdtlScenario { inner })) };
            LdtlStatus::Ok
        }
        Err(issues) => {
            let e = ConfigError::Invalid(issues);
            fail(LdtlStatus::InvalidScenario, e.to_string())
        }
    }
}

/// Message describing the last failure on this thread, or NULL. Valid until
/// the next call into this library on the same thread.
#[unsafe(no_mangle)]
pub extern "C" fn ldtl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[unsafe(no_mangle)]
pub extern "C" fn ldtl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a scenario from TOML text.
///
/// # Safety
/// `toml` must be a nul-terminated string and `out` a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_scenario_from_toml(toml: *const c_char, out: *mut *mut LdtlScenario) -> LdtlStatus {
    guard(|| {
        if out.is_null() {
            return fail(LdtlStatus::NullPointer, "null output pointer");
        }
        // SAFETY: forwarded caller contract.
        let text = match unsafe { read_str(toml) } {
            Ok(t) => t,
            Err(s) => return s,
        };
        build_scenario(ScenarioConfig::from_toml_str(text), out)
    })
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_scenario_load(path: *const c_char, out: *mut *mut LdtlScenario) -> LdtlStatus {
    guard(|| {
        if out.is_null() {
            return fail(LdtlStatus::NullPointer, "null output pointer");
        }
        // SAFETY: forwarded caller contract.
        let path = match unsafe { read_str(path) } {
            Ok(t) => t,
            Err(s) => return s,
        };
        build_scenario(ScenarioConfig::load(std::path::Path::new(path)), out)
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_scenario_free(scenario: *mut LdtlScenario) {
    if !scenario.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// # Safety
/// `scenario` must be a valid handle or NULL (which yields 0).
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_scenario_num_states(scenario: *const LdtlScenario) -> usize {
    // SAFETY: caller contract.
    unsafe { scenario.as_ref() }.map_or(0, |s| s.inner.model().num_states())
}

/// # Safety
/// `scenario` must be a valid handle or NULL (which yields 0).
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_scenario_num_actions(scenario: *const LdtlScenario) -> usize {
    // SAFETY: caller contract.
    unsafe { scenario.as_ref() }.map_or(0, |s| s.inner.model().num_actions())
}

/// # Safety
/// `scenario` must be a valid handle or NULL (which yields 0).
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_scenario_num_observations(scenario: *const LdtlScenario) -> usize {
    // SAFETY: caller contract.
    unsafe { scenario.as_ref() }.map_or(0, |s| s.inner.model().num_observations())
}

/// Bayes update of `belief` (length `len`) after `action` and `observation`,
/// written to `out` (length `len`).
///
/// # Safety
/// `belief` and `out` must point to `len` doubles; `scenario` must be valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_belief_update(
    scenario: *const LdtlScenario,
    belief: *const f64,
    len: usize,
    action: usize,
    observation: usize,
    out: *mut f64,
) -> LdtlStatus {
    guard(|| {
        // SAFETY: caller contract.
        let Some(s) = (unsafe { scenario.as_ref() }) else {
            return fail(LdtlStatus::NullPointer, "null scenario");
        };
        if belief.is_null() || out.is_null() {
            return fail(LdtlStatus::NullPointer, "null belief buffer");
        }
        let m = s.inner.model();
        if len != m.num_states() {
            return fail(LdtlStatus::OutOfRange, format!("belief has length {len}, model has {} states", m.num_states()));
        }
        // SAFETY: `belief` holds `len` doubles.
        let probs = unsafe { std::slice::from_raw_parts(belief, len) }.to_vec();
        let b = match Belief::new(probs) {
            Ok(b) => b,
            Err(e) => return fail(LdtlStatus::OutOfRange, e.to_string()),
        };
        let (a, z) = (JointAction(action), JointObservation(observation));
        if let Err(e) = m.check_action(a).and_then(|_| m.check_observation(z)) {
            return fail(LdtlStatus::OutOfRange, e.to_string());
        }
        match m.belief_update(&b, a, z) {
            Ok(next) => {
                // SAFETY: `out` holds `len` doubles.
                unsafe { std::slice::from_raw_parts_mut(out, len) }.copy_from_slice(next.probs());
                LdtlStatus::Ok
            }
            Err(e) => fail(LdtlStatus::ZeroLikelihood, e.to_string()),
        }
    })
}

/// Simulates one episode with the given seed.
///
/// # Safety
/// `scenario` must be valid and `out` a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_run_episode(scenario: *const LdtlScenario, seed: u64, out: *mut *mut LdtlTrace) -> LdtlStatus {
    guard(|| {
        // SAFETY: caller contract.
        let Some(s) = (unsafe { scenario.as_ref() }) else {
            return fail(LdtlStatus::NullPointer, "null scenario");
        };
        if out.is_null() {
            return fail(LdtlStatus::NullPointer, "null output pointer");
        }
        let inner = run_episode_seeded(&s.inner, seed);
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(LdtlTrace { inner })) };
        LdtlStatus::Ok
    })
}

/// # Safety
/// `trace` must come from this library and not be used afterwards.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_trace_free(trace: *mut LdtlTrace) {
    if !trace.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(trace) });
    }
}

/// Number of recorded steps.
///
/// # Safety
/// `trace` must be a valid handle or NULL (which yields 0).
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_trace_steps(trace: *const LdtlTrace) -> usize {
    // SAFETY: caller contract.
    unsafe { trace.as_ref() }.map_or(0, |t| t.inner.steps.len())
}

/// Number of steps whose verdict failed.
///
/// # Safety
/// `trace` must be a valid handle or NULL (which yields 0).
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_trace_violations(trace: *const LdtlTrace) -> u64 {
    // SAFETY: caller contract.
    unsafe { trace.as_ref() }.map_or(0, |t| t.inner.end.violations)
}

/// Number of overridden steps.
///
/// # Safety
/// `trace` must be a valid handle or NULL (which yields 0).
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_trace_overrides(trace: *const LdtlTrace) -> u64 {
    // SAFETY: caller contract.
    unsafe { trace.as_ref() }.map_or(0, |t| t.inner.end.overrides)
}

/// Line-delimited JSON rendering of the trace, released with
/// [`ldtl_string_free`].
///
/// # Safety
/// `trace` must be valid and `out` a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_trace_to_jsonl(trace: *const LdtlTrace, out: *mut *mut c_char) -> LdtlStatus {
    guard(|| {
        // SAFETY: caller contract.
        let Some(t) = (unsafe { trace.as_ref() }) else {
            return fail(LdtlStatus::NullPointer, "null trace");
        };
        if out.is_null() {
            return fail(LdtlStatus::NullPointer, "null output pointer");
        }
        let text = CString::new(t.inner.to_jsonl()).expect("JSON has no interior nuls");
        // SAFETY: checked non-null above.
        unsafe { *out = text.into_raw() };
        LdtlStatus::Ok
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: created by CString::into_raw in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Invariance condition with `α(r) = γ r`.
///
/// # Safety
/// `out` must be a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_dtbf_check(h_prev: f64, h_next: f64, gamma: f64, out: *mut bool) -> LdtlStatus {
    guard(|| {
        if out.is_null() {
            return fail(LdtlStatus::NullPointer, "null output pointer");
        }
        match AlphaFn::linear(gamma) {
            Ok(alpha) => {
                // SAFETY: checked non-null above.
                unsafe { *out = dtbf_check(h_prev, h_next, alpha) };
                LdtlStatus::Ok
            }
            Err(e) => fail(LdtlStatus::InvalidParameter, e.to_string()),
        }
    })
}

/// Finite-time condition.
///
/// # Safety
/// `out` must be a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_ft_dtbf_check(h_prev: f64, h_next: f64, rho: f64, eps: f64, out: *mut bool) -> LdtlStatus {
    guard(|| {
        if out.is_null() {
            return fail(LdtlStatus::NullPointer, "null output pointer");
        }
        match FtParams::new(rho, eps) {
            Ok(p) => {
                // SAFETY: checked non-null above.
                unsafe { *out = ft_dtbf_check(h_prev, h_next, p) };
                LdtlStatus::Ok
            }
            Err(e) => fail(LdtlStatus::InvalidParameter, e.to_string()),
        }
    })
}

/// Integer reach-time bound from a start `h0 < 0`.
///
/// # Safety
/// `out` must be a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ldtl_ft_time_bound(h0: f64, rho: f64, eps: f64, out: *mut u64) -> LdtlStatus {
    guard(|| {
        if out.is_null() {
            return fail(LdtlStatus::NullPointer, "null output pointer");
        }
        match FtParams::new(rho, eps).and_then(|p| ft_time_bound(h0, p)) {
            Ok(t) => {
                // SAFETY: checked non-null above.
                unsafe { *out = t };
                LdtlStatus::Ok
            }
            Err(e) => fail(LdtlStatus::InvalidParameter, e.to_string()),
        }
    })
}

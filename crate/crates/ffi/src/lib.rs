//! C ABI over the `commsim` library.
//!
//! Simulators are opaque handles created from a system description and freed
//! with [`commsim_simulator_free`]. Fallible functions return a
//! [`CommsimStatus`]; the message for the most recent failure on the calling
//! thread is available from [`commsim_last_error`]. Strings returned to the
//! caller are owned by the caller and released with [`commsim_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use commsim::base::RandomSource;
use commsim::simulator::BinomialAccumulator;
use commsim::{config, Error, Simulator};

/// Result of a fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Simulation = 4,
    Panic = 5,
}

/// A simulator with its own random stream.
pub struct CommsimSimulator {
    sim: Simulator,
    rng: RandomSource,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> CommsimStatus {
    match e {
        Error::Parse { .. } | Error::UnknownComponent { .. } | Error::UnsupportedVersion { .. } => {
            CommsimStatus::Parse
        }
        Error::InvalidArgument(_) => CommsimStatus::InvalidArgument,
        _ => CommsimStatus::Simulation,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (CommsimStatus, String)>) -> CommsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CommsimStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CommsimStatus::Panic
        }
    }
}

fn fail(e: Error) -> (CommsimStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CommsimStatus, String) {
    (CommsimStatus::NullPointer, format!("{what} is null"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn commsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn commsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a simulator description and stores a new handle in `*out`.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn commsim_simulator_from_text(
    text: *const c_char,
    seed: u64,
    out: *mut *mut CommsimSimulator,
) -> CommsimStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (CommsimStatus::Parse, "text is not UTF-8".to_owned()))?;
        let sim: Simulator = config::from_text(text).map_err(fail)?;
        let handle = Box::new(CommsimSimulator {
            sim,
            rng: RandomSource::from_seed(seed),
        });
        *out = Box::into_raw(handle);
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `sim` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn commsim_simulator_free(sim: *mut CommsimSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

unsafe fn handle<'a>(sim: *mut CommsimSimulator) -> Result<&'a mut CommsimSimulator, (CommsimStatus, String)> {
    sim.as_mut().ok_or_else(|| null("simulator"))
}

/// Sets the channel parameter (Eb/N0 in dB or a probability).
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn commsim_simulator_set_parameter(sim: *mut CommsimSimulator, value: f64) -> CommsimStatus {
    guard(|| handle(sim)?.sim.set_parameter(value).map_err(fail))
}

/// Restarts the random stream from `seed`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn commsim_simulator_seed(sim: *mut CommsimSimulator, seed: u64) -> CommsimStatus {
    guard(|| {
        handle(sim)?.rng = RandomSource::from_seed(seed);
        Ok(())
    })
}

/// Number of measures each frame produces, or 0 for a NULL handle.
///
/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn commsim_simulator_measures(sim: *const CommsimSimulator) -> usize {
    sim.as_ref().map_or(0, |s| s.sim.measures())
}

/// Simulates `frames` frames and adds the error and trial counts of each
/// measure to `errors[k]` and `trials[k]`. Both arrays hold `len` entries,
/// which must equal the measure count.
///
/// # Safety
/// `sim` must be a live handle; `errors` and `trials` must point to `len`
/// writable values each.
#[no_mangle]
pub unsafe extern "C" fn commsim_simulator_run(
    sim: *mut CommsimSimulator,
    frames: u64,
    errors: *mut u64,
    trials: *mut u64,
    len: usize,
) -> CommsimStatus {
    guard(|| {
        let h = handle(sim)?;
        if errors.is_null() || trials.is_null() {
            return Err(null("count array"));
        }
        let m = h.sim.measures();
        if len != m {
            return Err((
                CommsimStatus::InvalidArgument,
                format!("arrays hold {len} entries, simulator has {m} measures"),
            ));
        }
        let mut acc = BinomialAccumulator::new(m);
        for _ in 0..frames {
            let r = h.sim.sample(&mut h.rng).map_err(fail)?;
            acc.accumulate(&r).map_err(fail)?;
        }
        let errors = std::slice::from_raw_parts_mut(errors, len);
        let trials = std::slice::from_raw_parts_mut(trials, len);
        for k in 0..m {
            errors[k] += acc.errors()[k];
            trials[k] += acc.trials()[k];
        }
        Ok(())
    })
}

/// Label of measure `k` (e.g. "SER"), or NULL when out of range.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn commsim_simulator_label(sim: *const CommsimSimulator, k: usize) -> *mut c_char {
    match sim.as_ref().and_then(|s| s.sim.labels().into_iter().nth(k)) {
        Some(l) => into_c_string(l),
        None => ptr::null_mut(),
    }
}

/// Canonical serialized form; free with [`commsim_string_free`].
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn commsim_simulator_to_text(sim: *const CommsimSimulator) -> *mut c_char {
    sim.as_ref()
        .map_or(ptr::null_mut(), |s| into_c_string(config::to_text(&s.sim)))
}

/// Hex SHA-256 digest of the canonical form; free with [`commsim_string_free`].
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn commsim_simulator_digest(sim: *const CommsimSimulator) -> *mut c_char {
    sim.as_ref().map_or(ptr::null_mut(), |s| into_c_string(s.sim.digest()))
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn commsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

//! C ABI for `chirp-interferometry`.
//!
//! # Conventions
//!
//! - Fallible functions return a [`ChirpStatus`]; `CHIRP_OK` is zero.
//! - After a failure, [`chirp_last_error`] returns a message for the calling
//!   thread. The pointer stays valid until the next failing call on that thread.
//! - Handles are opaque. Every handle returned through an out-parameter must be
//!   released with its `_free` function, which accepts null.
//! - Array accessors copy into caller buffers and report the element count
//!   written; a buffer shorter than the data yields `CHIRP_BUFFER_TOO_SMALL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use chirp_interferometry::io::{load_capture, load_scenario, ScenarioConfig};
use chirp_interferometry::pipeline::{process_capture, ProcessedScene, ProcessingConfig};
use chirp_interferometry::synth::synthesize_capture;
use chirp_interferometry::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChirpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Configuration or argument failed validation.
    Invalid = 3,
    Io = 4,
    /// Capture or CSV contents do not match their format.
    Format = 5,
    /// Processing failed after validation.
    Runtime = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Resolved scenario: geometry, waveform, targets, noise and processing.
pub struct ChirpScenario {
    config: ScenarioConfig,
}

/// Spectra and detections from one processed capture.
pub struct ChirpResult {
    processed: ProcessedScene,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> ChirpStatus {
    match err {
        e if e.is_validation() => ChirpStatus::Invalid,
        Error::Io(_) => ChirpStatus::Io,
        Error::Format(_) | Error::Csv(_) => ChirpStatus::Format,
        _ => ChirpStatus::Runtime,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (ChirpStatus, String)>) -> ChirpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChirpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ChirpStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (ChirpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_arg(name: &str) -> (ChirpStatus, String) {
    (ChirpStatus::NullArgument, format!("{name} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, (ChirpStatus, String)> {
    if p.is_null() {
        return Err(null_arg(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (ChirpStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn copy_out(
    data: impl ExactSizeIterator<Item = f64>,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> Result<(), (ChirpStatus, String)> {
    let n = data.len();
    if !written.is_null() {
        *written = n;
    }
    if n > capacity {
        return Err((
            ChirpStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {n} needed"),
        ));
    }
    if n > 0 && out.is_null() {
        return Err(null_arg("output buffer"));
    }
    for (i, v) in data.enumerate() {
        *out.add(i) = v;
    }
    Ok(())
}

/// Message for the most recent failure on this thread, or null.
#[no_mangle]
pub extern "C" fn chirp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn chirp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chirp_scenario_load(path: *const c_char, out: *mut *mut ChirpScenario) -> ChirpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let config = load_scenario(Path::new(path)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(ChirpScenario { config }));
        Ok(())
    })
}

/// Parses and validates a scenario from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chirp_scenario_parse(text: *const c_char, out: *mut *mut ChirpScenario) -> ChirpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        let config = ScenarioConfig::from_toml_str(text, Path::new("<string>")).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(ChirpScenario { config }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chirp_scenario_free(scenario: *mut ChirpScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of receive elements in the scenario.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn chirp_scenario_num_elements(scenario: *const ChirpScenario) -> usize {
    scenario
        .as_ref()
        .and_then(|s| s.config.geometry.positions_m.as_ref())
        .map_or(0, Vec::len)
}

/// Synthesizes the scenario's scene and runs the full processing chain.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chirp_scenario_simulate(scenario: *const ChirpScenario, out: *mut *mut ChirpResult) -> ChirpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        *out = ptr::null_mut();
        let cfg = &scenario.as_ref().ok_or_else(|| null_arg("scenario"))?.config;
        let geometry = cfg.array_geometry().map_err(lib_err)?;
        let waveform = cfg.lfm_waveform().map_err(lib_err)?;
        let scene = cfg.scene().map_err(lib_err)?;
        let capture = synthesize_capture(&geometry, &waveform, &scene, &cfg.noise(), &cfg.synth_options())
            .map_err(lib_err)?;
        let processed = process_capture(&capture, &cfg.processing_config()).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(ChirpResult { processed }));
        Ok(())
    })
}

/// Processes a capture file. `payload` may be null to use the file named in
/// the sidecar; `processing` may be null for default processing, otherwise
/// only its processing settings are used.
///
/// # Safety
/// String arguments must be NUL-terminated; `processing` must be null or a
/// live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chirp_capture_process(
    sidecar: *const c_char,
    payload: *const c_char,
    processing: *const ChirpScenario,
    out: *mut *mut ChirpResult,
) -> ChirpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        *out = ptr::null_mut();
        let sidecar = str_arg(sidecar, "sidecar")?;
        let payload = if payload.is_null() {
            None
        } else {
            Some(Path::new(str_arg(payload, "payload")?))
        };
        let cfg = processing
            .as_ref()
            .map_or_else(ProcessingConfig::default, |s| s.config.processing_config());
        let capture = load_capture(Path::new(sidecar), payload).map_err(lib_err)?;
        capture
            .waveform
            .check_sample_rate(&capture.geometry)
            .map_err(lib_err)?;
        let processed = process_capture(&capture, &cfg).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(ChirpResult { processed }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn chirp_result_free(result: *mut ChirpResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chirp_result_num_detections(result: *const ChirpResult) -> usize {
    result.as_ref().map_or(0, |r| r.processed.detections.len())
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chirp_result_fused_len(result: *const ChirpResult) -> usize {
    result.as_ref().map_or(0, |r| r.processed.fused.len())
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn chirp_result_num_baselines(result: *const ChirpResult) -> usize {
    result.as_ref().map_or(0, |r| r.processed.spectra.len())
}

/// Detection angles in degrees, strongest first.
///
/// # Safety
/// `result` must be a live handle; `angles_deg` must hold `capacity` doubles;
/// `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn chirp_result_detection_angles(
    result: *const ChirpResult,
    angles_deg: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> ChirpStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null_arg("result"))?;
        copy_out(r.processed.detections.iter().map(|d| d.angle_deg), angles_deg, capacity, written)
    })
}

/// Detection peak magnitudes, in the same order as the angles.
///
/// # Safety
/// As for [`chirp_result_detection_angles`].
#[no_mangle]
pub unsafe extern "C" fn chirp_result_detection_magnitudes(
    result: *const ChirpResult,
    magnitudes: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> ChirpStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null_arg("result"))?;
        copy_out(r.processed.detections.iter().map(|d| d.magnitude), magnitudes, capacity, written)
    })
}

/// Fused spectrum: `sin_theta` grid and magnitudes, both of
/// [`chirp_result_fused_len`] values. Either buffer may be null to skip it.
///
/// # Safety
/// Non-null buffers must hold `capacity` doubles; `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn chirp_result_fused(
    result: *const ChirpResult,
    sin_theta: *mut f64,
    magnitudes: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> ChirpStatus {
    guard(|| {
        let f = &result.as_ref().ok_or_else(|| null_arg("result"))?.processed.fused;
        if !sin_theta.is_null() {
            copy_out(f.sin_theta_grid.iter().copied(), sin_theta, capacity, written)?;
        }
        if !magnitudes.is_null() {
            copy_out(f.magnitudes.iter().copied(), magnitudes, capacity, written)?;
        }
        Ok(())
    })
}

/// One baseline's pseudo-spectrum. `length_m` receives the baseline length
/// and may be null.
///
/// # Safety
/// Non-null buffers must hold `capacity` doubles; `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn chirp_result_baseline_spectrum(
    result: *const ChirpResult,
    index: usize,
    length_m: *mut f64,
    freq_hz: *mut f64,
    magnitudes: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> ChirpStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null_arg("result"))?;
        let s = r.processed.spectra.get(index).ok_or_else(|| {
            (
                ChirpStatus::Invalid,
                format!("baseline index {index} out of range ({} baselines)", r.processed.spectra.len()),
            )
        })?;
        if !length_m.is_null() {
            *length_m = s.baseline_m;
        }
        if !freq_hz.is_null() {
            copy_out(s.freq_bins_hz.iter().copied(), freq_hz, capacity, written)?;
        }
        if !magnitudes.is_null() {
            copy_out(s.magnitudes.iter().copied(), magnitudes, capacity, written)?;
        }
        Ok(())
    })
}

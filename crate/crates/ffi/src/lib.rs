//! C ABI for the `ac-diamond` simulator.
//!
//! Configurations live behind an opaque `AcdConfig` handle. Every fallible
//! call returns an [`AcdStatus`]; on failure the message is available from
//! [`acd_last_error`] on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ac_diamond::commands::{self, SweepOptions};
use ac_diamond::config::{ConfigError, ExperimentConfig};
use ac_diamond::sequence::{simulate_run, stark_shift, SimulationMode};
use ac_diamond::stats::{monte_carlo_experiment, sensitivity_report};
use ac_diamond::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    NumericError = 4,
    IoError = 5,
    Panic = 6,
}

/// Opaque experiment configuration.
pub struct AcdConfig {
    inner: ExperimentConfig,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AcdSensitivity {
    pub contrast: f64,
    pub t2: f64,
    /// rad/sqrt(Hz)
    pub eta: f64,
    pub ensemble: f64,
    pub eta_ensemble: f64,
    /// s
    pub time_to_1rad: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AcdStark {
    pub coupling_hz: f64,
    pub zeeman_hz: f64,
    pub shift_hz: f64,
    pub modulation_hz: f64,
    pub adiabatic: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AcdMonteCarlo {
    pub shots: u64,
    pub true_phase: f64,
    pub phase_mean: f64,
    pub phase_std: f64,
    pub phase_std_error: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> AcdStatus {
    match err {
        Error::Config(_) => AcdStatus::ConfigError,
        Error::Io(_) => AcdStatus::IoError,
        Error::InvalidParameter { .. } => AcdStatus::InvalidArgument,
        _ => AcdStatus::NumericError,
    }
}

fn fail(status: AcdStatus, msg: impl Into<String>) -> AcdStatus {
    set_error(msg);
    status
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), AcdStatus>) -> AcdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AcdStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(AcdStatus::Panic, "internal panic"),
    }
}

fn check<T>(r: ac_diamond::Result<T>) -> Result<T, AcdStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn check_config<T>(r: Result<T, ConfigError>) -> Result<T, AcdStatus> {
    r.map_err(|e| fail(AcdStatus::ConfigError, e.to_string()))
}

unsafe fn config_ref<'a>(cfg: *const AcdConfig) -> Result<&'a ExperimentConfig, AcdStatus> {
    if cfg.is_null() {
        return Err(fail(AcdStatus::NullPointer, "config handle is null"));
    }
    // SAFETY: non-null handles come from `acd_config_new_default`/`acd_config_load`.
    Ok(unsafe { &(*cfg).inner })
}

unsafe fn out_ref<'a, T>(out: *mut T) -> Result<&'a mut T, AcdStatus> {
    if out.is_null() {
        return Err(fail(AcdStatus::NullPointer, "output pointer is null"));
    }
    // SAFETY: caller passes a valid, writable pointer.
    Ok(unsafe { &mut *out })
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, AcdStatus> {
    if s.is_null() {
        return Err(fail(AcdStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|_| fail(AcdStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// New configuration holding the default parameters. Free with
/// [`acd_config_free`].
#[no_mangle]
pub extern "C" fn acd_config_new_default() -> *mut AcdConfig {
    Box::into_raw(Box::new(AcdConfig {
        inner: ExperimentConfig::default(),
    }))
}

/// Parses a configuration file into a new handle stored in `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn acd_config_load(path: *const c_char, out: *mut *mut AcdConfig) -> AcdStatus {
    guard(|| {
        let out = unsafe { out_ref(out) }?;
        *out = ptr::null_mut();
        let path = unsafe { str_arg(path, "path") }?;
        let inner = check_config(ExperimentConfig::load(Path::new(path)))?;
        *out = Box::into_raw(Box::new(AcdConfig { inner }));
        Ok(())
    })
}

/// Assigns one key, e.g. `("E0", "2.5e7")`. The handle is unchanged if the
/// result would be invalid.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn acd_config_set(cfg: *mut AcdConfig, key: *const c_char, value: *const c_char) -> AcdStatus {
    guard(|| {
        let current = unsafe { config_ref(cfg) }?;
        let key = unsafe { str_arg(key, "key") }?;
        let value = unsafe { str_arg(value, "value") }?;
        let mut next = current.clone();
        check_config(next.set(key, value))?;
        check_config(next.validate())?;
        // SAFETY: checked non-null above.
        unsafe { (*cfg).inner = next };
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acd_config_free(cfg: *mut AcdConfig) {
    if !cfg.is_null() {
        // SAFETY: the handle came from `Box::into_raw`.
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Closed-form total A-C phase in rad.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn acd_total_phase(cfg: *const AcdConfig, out: *mut f64) -> AcdStatus {
    guard(|| {
        let cfg = unsafe { config_ref(cfg) }?;
        let out = unsafe { out_ref(out) }?;
        let n = check(cfg.phase_rotations())?;
        *out = check(ac_diamond::ac_phase::total_rectified_phase(cfg.r, cfg.e0, n, &check(cfg.system())?))?;
        Ok(())
    })
}

/// Readout lag in rad that maximizes the fringe slope at `phi_max`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acd_optimal_lag(phi_max: f64, out: *mut f64) -> AcdStatus {
    guard(|| {
        let out = unsafe { out_ref(out) }?;
        *out = check(ac_diamond::sequence::optimal_readout_lag(phi_max))?;
        Ok(())
    })
}

/// Readout population of `|+1⟩` for one echo run at `field` V/m. With
/// `oracle` set, integrates the full three-level dynamics instead of the
/// closed form.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn acd_simulate_p1(cfg: *const AcdConfig, field: f64, oracle: bool, out: *mut f64) -> AcdStatus {
    guard(|| {
        let cfg = unsafe { config_ref(cfg) }?;
        let out = unsafe { out_ref(out) }?;
        let setup = check(check(cfg.run_setup())?.with_field(field))?;
        let schedule = check(cfg.schedule())?;
        let mode = if oracle { SimulationMode::Oracle } else { SimulationMode::ClosedForm };
        *out = check(simulate_run(&schedule, &setup, mode))?.p1;
        Ok(())
    })
}

/// Fringe sweep over `points` fields from 0 to `E0`, without dephasing.
/// Fills `fields[points]` and `p1[points]`; `max_slope_index` may be null.
///
/// # Safety
/// `fields` and `p1` must each hold `points` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn acd_sweep(
    cfg: *const AcdConfig,
    points: usize,
    fields: *mut f64,
    p1: *mut f64,
    max_slope_index: *mut usize,
) -> AcdStatus {
    guard(|| {
        let cfg = unsafe { config_ref(cfg) }?;
        if fields.is_null() || p1.is_null() {
            return Err(fail(AcdStatus::NullPointer, "output buffer is null"));
        }
        let (curve, _) = check(commands::sweep_curve(cfg, &SweepOptions { grid: points, phi_max: None }))?;
        // SAFETY: caller guarantees `points` elements in each buffer.
        let (fs, ps) = unsafe {
            (
                std::slice::from_raw_parts_mut(fields, points),
                std::slice::from_raw_parts_mut(p1, points),
            )
        };
        for ((f, p), pt) in fs.iter_mut().zip(ps.iter_mut()).zip(&curve.points) {
            *f = pt.field;
            *p = pt.p1;
        }
        if !max_slope_index.is_null() {
            // SAFETY: non-null, caller-provided.
            unsafe { *max_slope_index = curve.max_slope_index };
        }
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn acd_sensitivity(cfg: *const AcdConfig, out: *mut AcdSensitivity) -> AcdStatus {
    guard(|| {
        let cfg = unsafe { config_ref(cfg) }?;
        let out = unsafe { out_ref(out) }?;
        let r = check(sensitivity_report(cfg.c, cfg.t2, cfg.ensemble))?;
        *out = AcdSensitivity {
            contrast: r.c,
            t2: r.t2,
            eta: r.eta,
            ensemble: r.n,
            eta_ensemble: r.eta_ensemble,
            time_to_1rad: r.t_to_1rad,
        };
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn acd_stark(cfg: *const AcdConfig, out: *mut AcdStark) -> AcdStatus {
    guard(|| {
        let cfg = unsafe { config_ref(cfg) }?;
        let out = unsafe { out_ref(out) }?;
        let r = check(stark_shift(cfg.e0, &check(cfg.system())?, &check(cfg.stark_model())?, cfg.f))?;
        *out = AcdStark {
            coupling_hz: r.coupling_hz,
            zeeman_hz: r.zeeman_hz,
            shift_hz: r.shift_hz,
            modulation_hz: r.modulation_hz,
            adiabatic: r.adiabatic,
        };
        Ok(())
    })
}

/// Photon-counting Monte Carlo at `E0` using the configured seed.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn acd_monte_carlo(cfg: *const AcdConfig, shots: u64, out: *mut AcdMonteCarlo) -> AcdStatus {
    guard(|| {
        let cfg = unsafe { config_ref(cfg) }?;
        let out = unsafe { out_ref(out) }?;
        let r = check(monte_carlo_experiment(
            cfg.e0,
            &check(cfg.run_setup())?,
            &check(cfg.schedule())?,
            &check(cfg.readout_model())?,
            shots,
            cfg.seed,
        ))?;
        *out = AcdMonteCarlo {
            shots: r.shots,
            true_phase: r.true_phase,
            phase_mean: r.phase_mean,
            phase_std: r.phase_std,
            phase_std_error: r.phase_std_error,
        };
        Ok(())
    })
}

/// Why the most recent call on this thread failed, or null if it
/// succeeded. Valid until the next call into this library from the same
/// thread.
#[no_mangle]
pub extern "C" fn acd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn acd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

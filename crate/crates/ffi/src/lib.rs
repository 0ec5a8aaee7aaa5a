//! C ABI over `irs_loc`.
//!
//! Every fallible call returns an [`IrsStatus`]; on anything other than
//! `IRS_STATUS_OK` the thread-local message behind
//! [`irs_last_error_message`] says what went wrong. Scenarios are opaque
//! handles owned by the caller and released with [`irs_scenario_free`].
//! No function panics across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use irs_loc::crb::{optimal_split, SplitMode, SplitObjective};
use irs_loc::estimators::{Combining, EstimatorOptions};
use irs_loc::harness::{run_trial, scenario_crb, Scheme};
use irs_loc::irs_schedule::ScheduleKind;
use irs_loc::scenario::ScenarioConfig;
use irs_loc::{units, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    DegenerateGeometry = 4,
    Domain = 5,
    SingularFim = 6,
    Numerical = 7,
    Parse = 8,
    Io = 9,
    Panic = 10,
}

impl From<&Error> for IrsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidExperiment(_) => IrsStatus::InvalidConfig,
            Error::DegenerateGeometry(_) | Error::Causality(_) => IrsStatus::DegenerateGeometry,
            Error::Domain(_) | Error::DelayRange { .. } => IrsStatus::Domain,
            Error::SingularFim { .. } => IrsStatus::SingularFim,
            Error::Parse { .. } => IrsStatus::Parse,
            Error::Io { .. } => IrsStatus::Io,
            Error::NotPowerOfTwo(_)
            | Error::Dimension(_)
            | Error::MissingGeometry(_)
            | Error::SplitTooSmall(_)
            | Error::InsufficientAperture(_) => IrsStatus::InvalidArgument,
            _ => IrsStatus::Numerical,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrsScheduleKind {
    DftScan = 0,
    Random = 1,
    OracleOptimal = 2,
}

impl From<IrsScheduleKind> for ScheduleKind {
    fn from(k: IrsScheduleKind) -> Self {
        match k {
            IrsScheduleKind::DftScan => ScheduleKind::DftScan,
            IrsScheduleKind::Random => ScheduleKind::Random,
            IrsScheduleKind::OracleOptimal => ScheduleKind::OracleOptimal,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrsScheme {
    SemiPassiveDft = 0,
    SemiPassiveRandom = 1,
    FullyPassive = 2,
}

impl From<IrsScheme> for Scheme {
    fn from(s: IrsScheme) -> Self {
        match s {
            IrsScheme::SemiPassiveDft => Scheme::SemiPassiveDft,
            IrsScheme::SemiPassiveRandom => Scheme::SemiPassiveRandom,
            IrsScheme::FullyPassive => Scheme::FullyPassive,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrsSplitObjective {
    Toa = 0,
    Doa = 1,
}

/// Opaque scenario handle.
pub struct IrsScenario {
    config: ScenarioConfig,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IrsCrbReport {
    /// s²
    pub crb_tau: f64,
    pub crb_mu: f64,
    /// m²
    pub crb_position: f64,
    /// Row-major 4×4 over (τ, μ, Re β, Im β).
    pub fim_channel: [f64; 16],
    /// Row-major 4×4 over (x, y, Re β, Im β).
    pub fim_position: [f64; 16],
    pub closed_form_used: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IrsEstimate {
    pub mu_hat: f64,
    pub tau_hat: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    pub x_hat: f64,
    pub y_hat: f64,
    pub feasible: bool,
    pub low_confidence: bool,
    /// Absolute errors against the configured target; NaN when unavailable.
    pub err_mu: f64,
    pub err_tau: f64,
    pub err_position_m: f64,
}

/// Estimator settings. Zero grid sizes select the library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IrsEstimatorOptions {
    pub grid_doa: usize,
    pub grid_toa: usize,
    pub refine: bool,
    /// false: plain sum over sensors and frames; true: maximum-ratio weights.
    pub maximum_ratio: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), (IrsStatus, String)>) -> IrsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IrsStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            IrsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (IrsStatus, String) {
    (IrsStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (IrsStatus, String) {
    (IrsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn scenario_ref<'a>(h: *const IrsScenario) -> Result<&'a IrsScenario, (IrsStatus, String)> {
    h.as_ref().ok_or_else(|| null("scenario"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn irs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`). Returns the full message length in
/// bytes, excluding the terminator, so callers can size a retry.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn irs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates the reference scenario.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn irs_scenario_new_default(out: *mut *mut IrsScenario) -> IrsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = Box::into_raw(Box::new(IrsScenario {
            config: ScenarioConfig::reference_defaults(),
        }));
        Ok(())
    })
}

/// Parses a scenario from a JSON document and validates it.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn irs_scenario_from_json(json: *const c_char, out: *mut *mut IrsScenario) -> IrsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (IrsStatus::Parse, format!("json is not UTF-8: {e}")))?;
        let config: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| (IrsStatus::Parse, e.to_string()))?;
        config.validate().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IrsScenario { config }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn irs_scenario_free(h: *mut IrsScenario) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Writes the scenario as JSON into `buf`; returns the required length
/// (excluding NUL) through `needed`. Truncation is reported as
/// `IRS_STATUS_INVALID_ARGUMENT` with `needed` filled in.
///
/// # Safety
/// `h` must be a live handle, `buf` null or valid for `len` bytes, and
/// `needed` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn irs_scenario_to_json(
    h: *const IrsScenario,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> IrsStatus {
    guard(|| {
        let s = scenario_ref(h)?;
        let text = serde_json::to_string(&s.config).map_err(|e| (IrsStatus::Numerical, e.to_string()))?;
        if let Some(n) = needed.as_mut() {
            *n = text.len();
        }
        if buf.is_null() || len <= text.len() {
            return Err((IrsStatus::InvalidArgument, format!("buffer needs {} bytes", text.len() + 1)));
        }
        ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
        *buf.add(text.len()) = 0;
        Ok(())
    })
}

/// Overrides the BS transmit power.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn irs_scenario_set_tx_power_dbm(h: *mut IrsScenario, dbm: f64) -> IrsStatus {
    guard(|| {
        let s = h.as_mut().ok_or_else(|| null("scenario"))?;
        let mut cfg = s.config.clone();
        cfg.tx_power = units::dbm_to_watts(dbm);
        cfg.validate().map_err(lib_err)?;
        s.config = cfg;
        Ok(())
    })
}

/// Sets the element counts. Zero leaves a count unchanged.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn irs_scenario_set_elements(
    h: *mut IrsScenario,
    n_reflectors: usize,
    n_sensors: usize,
    n_frames: usize,
) -> IrsStatus {
    guard(|| {
        let s = h.as_mut().ok_or_else(|| null("scenario"))?;
        let mut cfg = s.config.clone();
        if n_reflectors > 0 {
            cfg.n_reflectors = n_reflectors;
        }
        if n_sensors > 0 {
            cfg.n_sensors = n_sensors;
        }
        if n_frames > 0 {
            cfg.n_frames = n_frames;
        }
        cfg.validate().map_err(lib_err)?;
        s.config = cfg;
        Ok(())
    })
}

/// Cramér-Rao report. With `use_seed` false the fading is fixed at α = 1.
///
/// # Safety
/// `h` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn irs_crb(
    h: *const IrsScenario,
    kind: IrsScheduleKind,
    use_seed: bool,
    seed: u64,
    out: *mut IrsCrbReport,
) -> IrsStatus {
    guard(|| {
        let s = scenario_ref(h)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = scenario_crb(&s.config, kind.into(), use_seed.then_some(seed)).map_err(lib_err)?;
        let flat = |m: [[f64; 4]; 4]| {
            let mut f = [0.0; 16];
            for (i, row) in m.iter().enumerate() {
                f[4 * i..4 * i + 4].copy_from_slice(row);
            }
            f
        };
        *out = IrsCrbReport {
            crb_tau: r.crb_tau,
            crb_mu: r.crb_mu,
            crb_position: r.crb_position,
            fim_channel: flat(r.fim_channel),
            fim_position: flat(r.fim_position),
            closed_form_used: r.closed_form_used,
        };
        Ok(())
    })
}

/// Simulates one noisy trial under `scheme` and estimates the target.
/// `options` may be null for the defaults.
///
/// # Safety
/// `h` must be a live handle, `options` null or valid, `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn irs_estimate(
    h: *const IrsScenario,
    scheme: IrsScheme,
    seed: u64,
    options: *const IrsEstimatorOptions,
    out: *mut IrsEstimate,
) -> IrsStatus {
    guard(|| {
        let s = scenario_ref(h)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let mut opts = EstimatorOptions::default();
        if let Some(o) = options.as_ref() {
            if o.grid_doa > 0 {
                opts.grid_doa = o.grid_doa;
            }
            if o.grid_toa > 0 {
                opts.grid_toa = o.grid_toa;
            }
            opts.refine = o.refine;
            if o.maximum_ratio {
                opts.combining = Combining::MaximumRatio;
            }
        }
        let r = run_trial(&s.config, scheme.into(), seed, 0, &opts).map_err(lib_err)?;
        let (err_mu, err_tau, err_position_m) = match &r.errors {
            Some(e) => (e.mu, e.tau, e.position_m),
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        *out = IrsEstimate {
            mu_hat: r.mu_hat,
            tau_hat: r.tau_hat,
            beta_re: r.beta_bar_hat.re,
            beta_im: r.beta_bar_hat.im,
            x_hat: r.x_hat,
            y_hat: r.y_hat,
            feasible: r.feasible,
            low_confidence: r.low_confidence,
            err_mu,
            err_tau,
            err_position_m,
        };
        Ok(())
    })
}

/// Best reflector/sensor split of `total` elements.
///
/// # Safety
/// `n_r` and `n_s` must be valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn irs_optimal_split(
    total: usize,
    objective: IrsSplitObjective,
    brute_force: bool,
    n_r: *mut usize,
    n_s: *mut usize,
) -> IrsStatus {
    guard(|| {
        let n_r = n_r.as_mut().ok_or_else(|| null("n_r"))?;
        let n_s = n_s.as_mut().ok_or_else(|| null("n_s"))?;
        let objective = match objective {
            IrsSplitObjective::Toa => SplitObjective::Toa,
            IrsSplitObjective::Doa => SplitObjective::Doa,
        };
        let mode = if brute_force { SplitMode::BruteForce } else { SplitMode::ClosedForm };
        let split = optimal_split(total, objective, mode).map_err(lib_err)?;
        *n_r = split.n_r;
        *n_s = split.n_s;
        Ok(())
    })
}

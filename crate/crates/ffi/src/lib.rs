//! C ABI over `cascade-core`.
//!
//! Every fallible call returns a [`CascadeStatus`]; on failure a description is kept in
//! thread-local storage and can be read with [`cascade_last_error_message`]. Devices are
//! opaque handles created by `cascade_device_*` constructors and released with
//! [`cascade_device_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cascade_core::conversion::{budget_transmission, noise_report, NoiseCounts};
use cascade_core::device::Device;
use cascade_core::qpm::{step_transfers, SectionRole};
use cascade_core::spectral::{dfg_target, Wavelength};
use cascade_core::Error;

/// Result of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Range = 4,
    Capability = 5,
    Design = 6,
    NoSolution = 7,
    Numeric = 8,
    RankDeficient = 9,
    Parse = 10,
    Io = 11,
    Panic = 12,
}

/// Section selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeRole {
    Step1 = 1,
    Step2 = 2,
}

/// Opaque device handle.
pub struct CascadeDevice {
    inner: Device,
}

/// Detector count rates and channel parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CascadeNoiseInput {
    pub total_rate_cps: f64,
    pub dark_rate_cps: f64,
    pub detector_efficiency: f64,
    pub bandwidth_ghz: f64,
    pub external_transmission: f64,
}

/// Noise spectral densities in cps/GHz.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CascadeNoiseReport {
    pub pump_induced_rate_cps: f64,
    pub external_nsd: f64,
    pub internal_nsd: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(error: &Error) -> CascadeStatus {
    match error {
        Error::Domain(_) => CascadeStatus::Domain,
        Error::Range { .. } => CascadeStatus::Range,
        Error::Capability(_) => CascadeStatus::Capability,
        Error::Design(_) => CascadeStatus::Design,
        Error::NoSolution { .. } => CascadeStatus::NoSolution,
        Error::Numeric(_) => CascadeStatus::Numeric,
        Error::RankDeficient(_) => CascadeStatus::RankDeficient,
        Error::Parse { .. } => CascadeStatus::Parse,
        Error::Io { .. } => CascadeStatus::Io,
    }
}

struct Failure(CascadeStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), format!("code={}, msg={e}", e.code()))
    }
}

fn null(what: &str) -> Failure {
    Failure(CascadeStatus::NullPointer, format!("null pointer: {what}"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CascadeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CascadeStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {what}"));
            CascadeStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn device_ref<'a>(p: *const CascadeDevice) -> Result<&'a Device, Failure> {
    p.as_ref().map(|d| &d.inner).ok_or_else(|| null("device"))
}

fn role_of(role: i32) -> Result<SectionRole, Failure> {
    match role {
        r if r == CascadeRole::Step1 as i32 => Ok(SectionRole::Step1),
        r if r == CascadeRole::Step2 as i32 => Ok(SectionRole::Step2),
        other => Err(Failure(CascadeStatus::Domain, format!("unknown section role {other}"))),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cascade_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a successful call.
/// The pointer stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn cascade_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a handle for the built-in reference device.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn cascade_device_reference(out: *mut *mut CascadeDevice) -> CascadeStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = Box::into_raw(Box::new(CascadeDevice { inner: Device::reference() }));
        Ok(())
    })
}

/// Loads a device description from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn cascade_device_load(path: *const c_char, out: *mut *mut CascadeDevice) -> CascadeStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| Failure(CascadeStatus::InvalidUtf8, format!("path is not UTF-8: {e}")))?;
        let device = Device::load(path)?;
        *out = Box::into_raw(Box::new(CascadeDevice { inner: device }));
        Ok(())
    })
}

/// Releases a device handle. NULL is ignored.
///
/// # Safety
/// `device` must come from a `cascade_device_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cascade_device_free(device: *mut CascadeDevice) {
    if !device.is_null() {
        drop(Box::from_raw(device));
    }
}

/// Poling period in µm of the section selected by a `CascadeRole` value, at its nominal temperature.
///
/// # Safety
/// `device` must be a live handle and `out_um` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cascade_device_poling_period(
    device: *const CascadeDevice,
    role: i32,
    out_um: *mut f64,
) -> CascadeStatus {
    guard(|| {
        let device = device_ref(device)?;
        let out = out_ref(out_um, "out_um")?;
        *out = device.section(role_of(role)?).poling_period_um;
        Ok(())
    })
}

/// sinc² transfer of both sections for the signal chain of the operating point,
/// with both sections at `temperature_c` and pump at `pump_nm`. A step whose
/// chain leaves the index model range reports NaN.
///
/// # Safety
/// `device` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cascade_device_transfer(
    device: *const CascadeDevice,
    temperature_c: f64,
    pump_nm: f64,
    out_step1: *mut f64,
    out_step2: *mut f64,
) -> CascadeStatus {
    guard(|| {
        let device = device_ref(device)?;
        let o1 = out_ref(out_step1, "out_step1")?;
        let o2 = out_ref(out_step2, "out_step2")?;
        let pump = Wavelength::from_nm(pump_nm)?;
        let (t1, t2) = step_transfers(device, temperature_c, pump);
        *o1 = t1.unwrap_or(f64::NAN);
        *o2 = t2.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Product of the loss-budget transmissions of a device.
///
/// # Safety
/// `device` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cascade_device_transmission(device: *const CascadeDevice, out: *mut f64) -> CascadeStatus {
    guard(|| {
        let device = device_ref(device)?;
        let out = out_ref(out, "out")?;
        *out = budget_transmission(&device.loss_budget)?;
        Ok(())
    })
}

/// DFG output wavelength 1/λ_t = 1/λ_s − 1/λ_p, all in nm.
///
/// # Safety
/// `out_nm` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cascade_dfg_target(signal_nm: f64, pump_nm: f64, out_nm: *mut f64) -> CascadeStatus {
    guard(|| {
        let out = out_ref(out_nm, "out_nm")?;
        let target = dfg_target(Wavelength::from_nm(signal_nm)?, Wavelength::from_nm(pump_nm)?)?;
        *out = target.nm();
        Ok(())
    })
}

/// Noise spectral densities from detector count rates.
///
/// # Safety
/// `input` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cascade_noise_report(
    input: *const CascadeNoiseInput,
    out: *mut CascadeNoiseReport,
) -> CascadeStatus {
    guard(|| {
        let input = input.as_ref().ok_or_else(|| null("input"))?;
        let out = out_ref(out, "out")?;
        let report = noise_report(&NoiseCounts {
            total_rate_cps: input.total_rate_cps,
            dark_rate_cps: input.dark_rate_cps,
            detector_efficiency: input.detector_efficiency,
            bandwidth_ghz: input.bandwidth_ghz,
            external_transmission: input.external_transmission,
        })?;
        *out = CascadeNoiseReport {
            pump_induced_rate_cps: report.pump_induced_rate_cps,
            external_nsd: report.external_nsd,
            internal_nsd: report.internal_nsd,
        };
        Ok(())
    })
}

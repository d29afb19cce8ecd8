//! C ABI over `lzforge`.
//!
//! Every fallible function returns an [`LzStatus`]; on failure a message is
//! available from [`lz_last_error_message`] on the same thread. Pulses are
//! opaque [`LzPulse`] handles released with [`lz_pulse_free`]. Unitaries cross
//! the boundary as [`LzUnitary`], row-major with interleaved real and
//! imaginary parts.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the reads and writes their
//! documentation describes, and `LzPulse` handles must come from this
//! library and be freed at most once. Null pointers are reported as
//! `LZ_STATUS_NULL_POINTER`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lzforge::analytic::{bessel_j, design_diabatic_pulse, multi_jump_unitary, JumpModelParams};
use lzforge::dynamics::{
    evolve, gate_fidelity, lz_probability, survival_error, ErfTanSweep, OscillatingSweep, PixelatedPulse,
    PulseWaveform, TwoLevelSystem, Unitary2, Window,
};
use lzforge::optim::{grape_optimize, GrapeConfig};
use lzforge::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Numeric = 4,
    Design = 5,
    Fit = 6,
    Validation = 7,
    Io = 8,
    Panic = 9,
}

/// `[re00, im00, re01, im01, re10, im10, re11, im11]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzUnitary {
    pub m: [f64; 8],
}

impl From<Unitary2> for LzUnitary {
    fn from(u: Unitary2) -> Self {
        LzUnitary { m: u.to_interleaved() }
    }
}

impl From<LzUnitary> for Unitary2 {
    fn from(u: LzUnitary) -> Self {
        Unitary2::from_interleaved(&u.m)
    }
}

/// Opaque drive waveform.
pub struct LzPulse {
    inner: PulseWaveform,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: LzStatus, message: impl Into<String>) -> LzStatus {
    set_error(message.into());
    status
}

fn from_error(e: Error) -> LzStatus {
    let status = match &e {
        Error::Domain(_) => LzStatus::Domain,
        Error::Numeric(_) => LzStatus::Numeric,
        Error::Design { .. } => LzStatus::Design,
        Error::Fit(_) => LzStatus::Fit,
        Error::Validation { .. } => LzStatus::Validation,
        Error::Io { .. } => LzStatus::Io,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), LzStatus>) -> LzStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LzStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(LzStatus::Panic, "internal panic"),
    }
}

fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, LzStatus> {
    // SAFETY: the caller guarantees a non-null pointer is valid for writes.
    unsafe { p.as_mut() }.ok_or_else(|| fail(LzStatus::NullPointer, format!("`{name}` is null")))
}

fn in_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, LzStatus> {
    // SAFETY: the caller guarantees a non-null pointer is valid for reads.
    unsafe { p.as_ref() }.ok_or_else(|| fail(LzStatus::NullPointer, format!("`{name}` is null")))
}

fn system(delta: f64) -> Result<TwoLevelSystem, LzStatus> {
    TwoLevelSystem::new(delta).map_err(from_error)
}

fn emit(out: *mut *mut LzPulse, pulse: PulseWaveform) -> Result<(), LzStatus> {
    let slot = out_ref(out, "out")?;
    pulse.validate().map_err(from_error)?;
    *slot = Box::into_raw(Box::new(LzPulse { inner: pulse }));
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn lz_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn lz_status_name(status: LzStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        LzStatus::Ok => b"ok\0",
        LzStatus::NullPointer => b"null pointer\0",
        LzStatus::InvalidArgument => b"invalid argument\0",
        LzStatus::Domain => b"domain error\0",
        LzStatus::Numeric => b"numeric error\0",
        LzStatus::Design => b"design constraint violated\0",
        LzStatus::Fit => b"fit error\0",
        LzStatus::Validation => b"validation error\0",
        LzStatus::Io => b"i/o error\0",
        LzStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn lz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Bessel function of the first kind `J_m(x)`.
#[no_mangle]
pub extern "C" fn lz_bessel_j(m: i32, x: f64) -> f64 {
    bessel_j(m, x)
}

/// `1 - exp(-pi delta^2 / 2v)`.
#[no_mangle]
pub unsafe extern "C" fn lz_landau_zener_probability(delta: f64, v: f64, out: *mut f64) -> LzStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = lz_probability(delta, v).map_err(from_error)?;
        Ok(())
    })
}

/// `v t + lambda cos(omega t + phi)`, unwindowed.
#[no_mangle]
pub unsafe extern "C" fn lz_pulse_oscillating(v: f64, lambda: f64, omega: f64, phi: f64, out: *mut *mut LzPulse) -> LzStatus {
    guard(|| {
        emit(
            out,
            OscillatingSweep {
                v,
                lambda_r: lambda,
                omega,
                phi,
                window: None,
            }
            .into(),
        )
    })
}

/// Oscillating sweep whose drive is gated by a window of plateau `total`
/// and ramp `switching`.
#[no_mangle]
pub unsafe extern "C" fn lz_pulse_windowed(
    v: f64,
    lambda: f64,
    omega: f64,
    phi: f64,
    total: f64,
    switching: f64,
    out: *mut *mut LzPulse,
) -> LzStatus {
    guard(|| {
        let window = Window::new(total, switching).map_err(from_error)?;
        emit(
            out,
            OscillatingSweep {
                v,
                lambda_r: lambda,
                omega,
                phi,
                window: Some(window),
            }
            .into(),
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn lz_pulse_erf_tan(
    eps0: f64,
    lambda_erf: f64,
    duration: f64,
    delta: f64,
    out: *mut *mut LzPulse,
) -> LzStatus {
    guard(|| {
        let p = ErfTanSweep::new(eps0, lambda_erf, duration, delta).map_err(from_error)?;
        emit(out, p.into())
    })
}

/// Copies `len` pixel values; pixel `k` spans `[start + k dt, start + (k+1) dt)`.
#[no_mangle]
pub unsafe extern "C" fn lz_pulse_pixelated(
    values: *const f64,
    len: usize,
    dt: f64,
    start: f64,
    out: *mut *mut LzPulse,
) -> LzStatus {
    guard(|| {
        if values.is_null() {
            return Err(fail(LzStatus::NullPointer, "`values` is null"));
        }
        // SAFETY: the caller guarantees `values` points to `len` doubles.
        let v = unsafe { std::slice::from_raw_parts(values, len) }.to_vec();
        let p = PixelatedPulse::new(v, dt, start).map_err(from_error)?;
        emit(out, p.into())
    })
}

/// Samples `pulse` at `n` pixel midpoints over `[t_start, t_end]`.
#[no_mangle]
pub unsafe extern "C" fn lz_pulse_pixelate(
    pulse: *const LzPulse,
    n: usize,
    t_start: f64,
    t_end: f64,
    out: *mut *mut LzPulse,
) -> LzStatus {
    guard(|| {
        let p = in_ref(pulse, "pulse")?;
        let px = p.inner.pixelate(n, t_start, t_end).map_err(from_error)?;
        emit(out, px.into())
    })
}

/// Releases a handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lz_pulse_free(pulse: *mut LzPulse) {
    if !pulse.is_null() {
        // SAFETY: non-null handles come from Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(pulse) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn lz_pulse_eval(pulse: *const LzPulse, t: f64, out: *mut f64) -> LzStatus {
    guard(|| {
        let p = in_ref(pulse, "pulse")?;
        let out = out_ref(out, "out")?;
        *out = p.inner.evaluate(t).map_err(from_error)?;
        Ok(())
    })
}

/// Pixel count of a pixelated pulse; 0 for analytic pulses.
#[no_mangle]
pub unsafe extern "C" fn lz_pulse_pixel_count(pulse: *const LzPulse, out: *mut usize) -> LzStatus {
    guard(|| {
        let p = in_ref(pulse, "pulse")?;
        *out_ref(out, "out")? = match &p.inner {
            PulseWaveform::Pixelated(px) => px.len(),
            _ => 0,
        };
        Ok(())
    })
}

/// Copies pixel values, pixel width and start time. `capacity` must be at
/// least the pixel count.
#[no_mangle]
pub unsafe extern "C" fn lz_pulse_pixels(
    pulse: *const LzPulse,
    values: *mut f64,
    capacity: usize,
    dt: *mut f64,
    start: *mut f64,
) -> LzStatus {
    guard(|| {
        let p = in_ref(pulse, "pulse")?;
        let PulseWaveform::Pixelated(px) = &p.inner else {
            return Err(fail(LzStatus::InvalidArgument, "pulse is not pixelated"));
        };
        if values.is_null() {
            return Err(fail(LzStatus::NullPointer, "`values` is null"));
        }
        if capacity < px.len() {
            return Err(fail(
                LzStatus::InvalidArgument,
                format!("capacity {capacity} is below the pixel count {}", px.len()),
            ));
        }
        *out_ref(dt, "dt")? = px.dt;
        *out_ref(start, "start")? = px.start;
        // SAFETY: the caller guarantees `values` holds `capacity` doubles.
        unsafe { std::slice::from_raw_parts_mut(values, px.len()) }.copy_from_slice(&px.values);
        Ok(())
    })
}

/// Time-ordered evolution operator of `delta sigma_x/2 + eps(t) sigma_z/2`.
#[no_mangle]
pub unsafe extern "C" fn lz_evolve(
    pulse: *const LzPulse,
    delta: f64,
    t_start: f64,
    t_end: f64,
    out: *mut LzUnitary,
) -> LzStatus {
    guard(|| {
        let p = in_ref(pulse, "pulse")?;
        let out = out_ref(out, "out")?;
        let u = evolve(&system(delta)?, &p.inner, t_start, t_end).map_err(from_error)?;
        *out = u.into();
        Ok(())
    })
}

/// `|<0|U|1>|^2`.
#[no_mangle]
pub unsafe extern "C" fn lz_survival_error(u: *const LzUnitary, out: *mut f64) -> LzStatus {
    guard(|| {
        let u = in_ref(u, "u")?;
        *out_ref(out, "out")? = survival_error(&(*u).into());
        Ok(())
    })
}

/// `|Tr(target^dagger U)|^2 / 4`.
#[no_mangle]
pub unsafe extern "C" fn lz_gate_fidelity(u: *const LzUnitary, target: *const LzUnitary, out: *mut f64) -> LzStatus {
    guard(|| {
        let u = in_ref(u, "u")?;
        let target = in_ref(target, "target")?;
        *out_ref(out, "out")? = gate_fidelity(&(*u).into(), &(*target).into());
        Ok(())
    })
}

/// Product of the jump matrices at `t = -m omega / v`. A negative `m0`
/// keeps every jump inside `[-duration/2, duration/2]`.
#[no_mangle]
pub unsafe extern "C" fn lz_multi_jump_unitary(
    delta: f64,
    v: f64,
    lambda: f64,
    omega: f64,
    phi: f64,
    duration: f64,
    m0: i32,
    out: *mut LzUnitary,
) -> LzStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let m0 = u32::try_from(m0).ok();
        let params = JumpModelParams::new(delta, v, lambda, omega, phi, duration, m0).map_err(from_error)?;
        *out = multi_jump_unitary(&params).map_err(from_error)?.into();
        Ok(())
    })
}

/// Windowed sweep cancelling the central crossing and the first-order pair.
#[no_mangle]
pub unsafe extern "C" fn lz_design_diabatic_pulse(
    v: f64,
    omega: f64,
    switching: f64,
    delta: f64,
    out: *mut *mut LzPulse,
) -> LzStatus {
    guard(|| {
        let d = design_diabatic_pulse(v, omega, switching, delta).map_err(from_error)?;
        emit(out, d.pulse.into())
    })
}

/// GRAPE on a pixelated pulse with default settings apart from the
/// iteration cap and target error. Writes a new handle and `1 - fidelity`.
#[no_mangle]
pub unsafe extern "C" fn lz_grape_optimize(
    pulse: *const LzPulse,
    delta: f64,
    target: *const LzUnitary,
    max_iterations: usize,
    target_error: f64,
    out: *mut *mut LzPulse,
    out_error: *mut f64,
) -> LzStatus {
    guard(|| {
        let p = in_ref(pulse, "pulse")?;
        let target: Unitary2 = (*in_ref(target, "target")?).into();
        let PulseWaveform::Pixelated(px) = &p.inner else {
            return Err(fail(LzStatus::InvalidArgument, "GRAPE needs a pixelated pulse"));
        };
        let err = out_ref(out_error, "out_error")?;
        out_ref(out, "out")?;
        let config = GrapeConfig {
            pixel_count: px.len(),
            max_iterations,
            target_error,
            ..Default::default()
        };
        let r = grape_optimize(&system(delta)?, px, &target, &config).map_err(from_error)?;
        *err = r.best_value;
        emit(out, r.best_pulse.unwrap_or_else(|| px.clone()).into())
    })
}

//! C interface to `dpe`.
//!
//! Objects are opaque handles created by `dpe_*_new` and released with the
//! matching `dpe_*_free`. Every fallible call returns a [`DpeStatus`]; on
//! failure the message is available from [`dpe_last_error_message`] on the
//! same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dpe::dynamics::{evolve_closed, EvolveOptions};
use dpe::pathint::{propagate_final, PathIntConfig};
use dpe::phonon::{Bath, InfluenceCoefficients, PhononParams};
use dpe::photonstats::{fit_g2, hom_visibility, G2FitOptions, Histogram, HistogramKind};
use dpe::pulse::{DichromaticPulse, PulseShape, PulseSpec};
use dpe::{Error, ErrorClass};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Resource = 4,
    Panic = 5,
    Io = 6,
}

/// `shape` argument of [`dpe_pulse_new`].
pub const DPE_SHAPE_RECT_SPECTRUM: u32 = 0;
pub const DPE_SHAPE_GAUSSIAN: u32 = 1;

/// Opaque dichromatic pulse.
pub struct DpePulse(DichromaticPulse);

/// Opaque phonon bath.
pub struct DpeBath(Bath);

/// Opaque table of influence coefficients.
pub struct DpeInfluence(InfluenceCoefficients);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> DpeStatus {
    match e.class() {
        ErrorClass::Config => DpeStatus::InvalidArgument,
        ErrorClass::Numerical => DpeStatus::Numerical,
        ErrorClass::Resource => DpeStatus::Resource,
        ErrorClass::Io => DpeStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status and recording the
/// message.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> DpeStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DpeStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed as '{name}'"));
            DpeStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            DpeStatus::Panic
        }
    }
}

unsafe fn non_null<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, name: &'static str) -> Result<&'a mut [T], Failure> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dpe_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dpe_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}

/// Creates a pulse. Energies in meV, `area` in radians, `t0` in ps.
///
/// # Safety
/// `out` must be a valid pointer to a `DpePulse *`.
#[no_mangle]
pub unsafe extern "C" fn dpe_pulse_new(
    shape: u32,
    delta: f64,
    w_red: f64,
    w_blue: f64,
    area: f64,
    t0: f64,
    out: *mut *mut DpePulse,
) -> DpeStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let shape = match shape {
            DPE_SHAPE_RECT_SPECTRUM => PulseShape::RectSpectrum,
            DPE_SHAPE_GAUSSIAN => PulseShape::Gaussian,
            other => return Err(Error::InvalidParameter(format!("unknown pulse shape {other}")).into()),
        };
        let spec = PulseSpec {
            shape,
            ..PulseSpec::rect(delta, w_red, w_blue, area).with_t0(t0)
        };
        *out = Box::into_raw(Box::new(DpePulse(DichromaticPulse::new(spec)?)));
        Ok(())
    })
}

/// # Safety
/// `pulse` must be null or a handle from [`dpe_pulse_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dpe_pulse_free(pulse: *mut DpePulse) {
    if !pulse.is_null() {
        drop(Box::from_raw(pulse));
    }
}

/// Complex drive `f(t)` in rad/ps.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dpe_pulse_field(pulse: *const DpePulse, t: f64, re: *mut f64, im: *mut f64) -> DpeStatus {
    guard(|| {
        let p = non_null(pulse, "pulse")?;
        let (re, im) = (out_ref(re, "re")?, out_ref(im, "im")?);
        let f = p.0.field(t);
        *re = f.re;
        *im = f.im;
        Ok(())
    })
}

/// Time interval (ps) outside which the field vanishes.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dpe_pulse_support(pulse: *const DpePulse, start: *mut f64, end: *mut f64) -> DpeStatus {
    guard(|| {
        let p = non_null(pulse, "pulse")?;
        let (s, e) = (out_ref(start, "start")?, out_ref(end, "end")?);
        (*s, *e) = p.0.support();
        Ok(())
    })
}

/// Pulse contrast `(I_B - I_R)/(I_B + I_R)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dpe_pulse_contrast(pulse: *const DpePulse, out: *mut f64) -> DpeStatus {
    guard(|| {
        let p = non_null(pulse, "pulse")?;
        *out_ref(out, "out")? = p.0.contrast()?;
        Ok(())
    })
}

/// Closed-system evolution from the ground state; writes the excited-state
/// occupation at each of the `n` grid times (ps, strictly increasing).
///
/// # Safety
/// `t_grid` and `occupation` must point to `n` elements.
#[no_mangle]
pub unsafe extern "C" fn dpe_evolve_closed(
    pulse: *const DpePulse,
    t_grid: *const f64,
    n: usize,
    occupation: *mut f64,
) -> DpeStatus {
    guard(|| {
        let p = non_null(pulse, "pulse")?;
        let grid = slice(t_grid, n, "t_grid")?;
        let out = slice_mut(occupation, n, "occupation")?;
        let traj = evolve_closed(&p.0, grid, &EvolveOptions::default())?;
        for (o, s) in out.iter_mut().zip(&traj.states) {
            *o = s.occupation();
        }
        Ok(())
    })
}

/// GaAs quantum-dot bath at `temperature` (K); `coupled = 0` switches the
/// coupling off.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dpe_bath_new(temperature: f64, coupled: i32, out: *mut *mut DpeBath) -> DpeStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let mut params = PhononParams { temperature, ..PhononParams::default() };
        if coupled == 0 {
            params = params.uncoupled();
        }
        *out = Box::into_raw(Box::new(DpeBath(Bath::new(params)?)));
        Ok(())
    })
}

/// # Safety
/// `bath` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dpe_bath_free(bath: *mut DpeBath) {
    if !bath.is_null() {
        drop(Box::from_raw(bath));
    }
}

/// Polaron shift in meV; the coupled transition sits this much below the
/// bare one.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dpe_bath_polaron_shift(bath: *const DpeBath, out: *mut f64) -> DpeStatus {
    guard(|| {
        let b = non_null(bath, "bath")?;
        *out_ref(out, "out")? = b.0.polaron_shift()? * dpe::units::HBAR;
        Ok(())
    })
}

/// Influence coefficients for step `dt` (ps) and memory depth `memory_k`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dpe_influence_new(
    bath: *const DpeBath,
    dt: f64,
    memory_k: usize,
    out: *mut *mut DpeInfluence,
) -> DpeStatus {
    guard(|| {
        let b = non_null(bath, "bath")?;
        let out = out_ref(out, "out")?;
        *out = Box::into_raw(Box::new(DpeInfluence(b.0.eta_coefficients(dt, memory_k)?)));
        Ok(())
    })
}

/// # Safety
/// `influence` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dpe_influence_free(influence: *mut DpeInfluence) {
    if !influence.is_null() {
        drop(Box::from_raw(influence));
    }
}

/// Final occupation from the path integral over the pulse support plus
/// `tail` ps.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dpe_pathint_final_occupation(
    pulse: *const DpePulse,
    influence: *const DpeInfluence,
    tail: f64,
    out: *mut f64,
) -> DpeStatus {
    guard(|| {
        let p = non_null(pulse, "pulse")?;
        let c = non_null(influence, "influence")?;
        let out = out_ref(out, "out")?;
        if !tail.is_finite() || tail < 0.0 {
            return Err(Error::InvalidParameter(format!("tail must be >= 0, got {tail}")).into());
        }
        let mut cfg = PathIntConfig::for_pulse(&p.0, c.0.dt, c.0.memory_k);
        cfg.t_end = p.0.support().1 + tail;
        *out = propagate_final(&p.0, &c.0, &cfg)?;
        Ok(())
    })
}

/// `V = 1 - g_par/g_perp`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dpe_hom_visibility(g_par: f64, g_perp: f64, out: *mut f64) -> DpeStatus {
    guard(|| {
        *out_ref(out, "out")? = hom_visibility(g_par, g_perp)?;
        Ok(())
    })
}

/// Fits the IRF-convolved HOM dip to `n` uniformly spaced bins (ns). Writes
/// `[t1, v_hom, tau_c]` to `params` and their uncertainties to
/// `uncertainties` (may be null).
///
/// # Safety
/// `taus` and `counts` must point to `n` elements, `params` to 3 and
/// `uncertainties` to 3 or be null.
#[no_mangle]
pub unsafe extern "C" fn dpe_fit_g2(
    taus: *const f64,
    counts: *const f64,
    n: usize,
    irf_fwhm: f64,
    params: *mut f64,
    uncertainties: *mut f64,
) -> DpeStatus {
    guard(|| {
        let x = slice(taus, n, "taus")?;
        let y = slice(counts, n, "counts")?;
        let params = slice_mut(params, 3, "params")?;
        let hist = Histogram::new(x.to_vec(), y.to_vec(), HistogramKind::G2)?;
        let r = fit_g2(&hist, irf_fwhm, &G2FitOptions::default())?;
        let names = ["t1", "v_hom", "tau_c"];
        for (p, name) in params.iter_mut().zip(names) {
            *p = r.param(name);
        }
        if !uncertainties.is_null() {
            let u = std::slice::from_raw_parts_mut(uncertainties, 3);
            for (u, name) in u.iter_mut().zip(names) {
                *u = r.uncertainties.get(name).copied().unwrap_or(f64::NAN);
            }
        }
        Ok(())
    })
}

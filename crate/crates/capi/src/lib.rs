//! C interface to `minlift`.
//!
//! Every function returns an [`MlStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`ml_last_error_message`]. Handles are created by `*_new` functions and
//! released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use minlift::catalog;
use minlift::cli::ExperimentConfig;
use minlift::conformal_metric::{diameter_power, ConformalMetric};
use minlift::criterion::{self, Grid};
use minlift::error::Error;
use minlift::expr::ExprError;
use minlift::harmonic_map::HarmonicMapData;
use minlift::injectivity_oracle::surface_collision_scan;
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Singular = 4,
    OutOfDomain = 5,
    NoConvergence = 6,
    Panic = 7,
}

/// Harmonic map with its lift.
pub struct MlMap(HarmonicMapData);

/// Conformal metric on a disk.
pub struct MlMetric(ConformalMetric);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MlStatus {
    match e {
        Error::Expr(ExprError::Syntax { .. } | ExprError::UnknownIdentifier { .. }) => MlStatus::Parse,
        Error::Expr(ExprError::NoConvergence { .. }) => MlStatus::NoConvergence,
        Error::Expr(_) => MlStatus::Singular,
        Error::Singular { .. } => MlStatus::Singular,
        Error::OutOfDomain(_) => MlStatus::OutOfDomain,
        Error::NoConvergence(_) | Error::Ode(_) => MlStatus::NoConvergence,
        _ => MlStatus::InvalidInput,
    }
}

fn guard<F: FnOnce() -> Result<(), MlStatus>>(f: F) -> MlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            MlStatus::Panic
        }
    }
}

fn check<T>(r: minlift::error::Result<T>) -> Result<T, MlStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, MlStatus> {
    if p.is_null() {
        set_error("null string".into());
        return Err(MlStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string is not UTF-8".into());
        MlStatus::InvalidInput
    })
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, MlStatus> {
    p.as_mut().ok_or_else(|| {
        set_error("null output pointer".into());
        MlStatus::NullPointer
    })
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, MlStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle".into());
        MlStatus::NullPointer
    })
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ml_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Map from expressions for `h′` and `q` in `z`.
///
/// # Safety
/// `h_prime` and `q` must be null or NUL-terminated strings; `out` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn ml_map_new(h_prime: *const c_char, q: *const c_char, out_map: *mut *mut MlMap) -> MlStatus {
    guard(|| {
        let m = check(HarmonicMapData::new(text(h_prime)?, text(q)?))?;
        *out(out_map)? = Box::into_raw(Box::new(MlMap(m)));
        Ok(())
    })
}

/// Map from the built-in catalog (`planar`, `catenoid`, `strip`, ...).
///
/// # Safety
/// As for [`ml_map_new`].
#[no_mangle]
pub unsafe extern "C" fn ml_map_from_catalog(name: *const c_char, out_map: *mut *mut MlMap) -> MlStatus {
    guard(|| {
        let m = check(catalog::map(text(name)?))?;
        *out(out_map)? = Box::into_raw(Box::new(MlMap(m)));
        Ok(())
    })
}

/// # Safety
/// `map` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_map_free(map: *mut MlMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Lifted point `(x, y, z)` written to `out_xyz[0..3]`.
///
/// # Safety
/// `map` must be a live handle and `out_xyz` must hold three doubles.
#[no_mangle]
pub unsafe extern "C" fn ml_map_lift(map: *const MlMap, re: f64, im: f64, out_xyz: *mut f64) -> MlStatus {
    guard(|| {
        let m = get(map)?;
        out(out_xyz)?;
        let x = check(m.0.lift(Complex64::new(re, im)))?;
        std::slice::from_raw_parts_mut(out_xyz, 3).copy_from_slice(x.as_slice());
        Ok(())
    })
}

/// Conformal factor `e^σ`.
///
/// # Safety
/// `map` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_map_conformal_factor(map: *const MlMap, re: f64, im: f64, out_value: *mut f64) -> MlStatus {
    guard(|| {
        *out(out_value)? = check(get(map)?.0.conformal_factor(Complex64::new(re, im)))?;
        Ok(())
    })
}

/// Gauss curvature of the lift.
///
/// # Safety
/// As for [`ml_map_conformal_factor`].
#[no_mangle]
pub unsafe extern "C" fn ml_map_gauss_curvature(map: *const MlMap, re: f64, im: f64, out_value: *mut f64) -> MlStatus {
    guard(|| {
        *out(out_value)? = check(get(map)?.0.gauss_curvature(Complex64::new(re, im)))?;
        Ok(())
    })
}

/// Harmonic Schwarzian `2(σ_zz − σ_z²)`.
///
/// # Safety
/// `map` must be a live handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_map_schwarzian(map: *const MlMap, re: f64, im: f64, out_re: *mut f64, out_im: *mut f64) -> MlStatus {
    guard(|| {
        let s = check(get(map)?.0.harmonic_schwarzian(Complex64::new(re, im)))?;
        *out(out_re)? = s.re;
        *out(out_im)? = s.im;
        Ok(())
    })
}

/// `ρ = −t log(1 − |z|²)` on the unit disk.
///
/// # Safety
/// `out_metric` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_metric_power(t: f64, out_metric: *mut *mut MlMetric) -> MlStatus {
    guard(|| {
        if !(t >= 0.0) {
            set_error(format!("power exponent must be non-negative, got {t}"));
            return Err(MlStatus::InvalidInput);
        }
        *out(out_metric)? = Box::into_raw(Box::new(MlMetric(ConformalMetric::power(t))));
        Ok(())
    })
}

/// Metric induced by the lift, on the disk of the given radius.
///
/// # Safety
/// `map` must be a live handle; `out_metric` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_metric_pullback(map: *const MlMap, domain_radius: f64, out_metric: *mut *mut MlMetric) -> MlStatus {
    guard(|| {
        if !(domain_radius > 0.0) {
            set_error("domain radius must be positive".into());
            return Err(MlStatus::InvalidInput);
        }
        let mt = ConformalMetric::pullback(&get(map)?.0).with_domain_radius(domain_radius);
        *out(out_metric)? = Box::into_raw(Box::new(MlMetric(mt)));
        Ok(())
    })
}

/// Sets the diameter used by the criteria.
///
/// # Safety
/// `metric` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ml_metric_set_diameter(metric: *mut MlMetric, delta: f64) -> MlStatus {
    guard(|| {
        let m = out(metric)?;
        if !(delta > 0.0) {
            set_error("diameter must be positive".into());
            return Err(MlStatus::InvalidInput);
        }
        m.0 = m.0.clone().with_delta(delta);
        Ok(())
    })
}

/// # Safety
/// `metric` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_metric_free(metric: *mut MlMetric) {
    if !metric.is_null() {
        drop(Box::from_raw(metric));
    }
}

/// Geodesic distance between two points.
///
/// # Safety
/// `metric` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_metric_distance(
    metric: *const MlMetric,
    re1: f64,
    im1: f64,
    re2: f64,
    im2: f64,
    out_value: *mut f64,
) -> MlStatus {
    guard(|| {
        *out(out_value)? = check(get(metric)?.0.distance(Complex64::new(re1, im1), Complex64::new(re2, im2)))?;
        Ok(())
    })
}

/// Diameter of the unit disk for `ρ = −t log(1 − |z|²)`; infinite for `t ≥ 1`.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_diameter_power(t: f64, out_value: *mut f64) -> MlStatus {
    guard(|| {
        *out(out_value)? = check(diameter_power(t))?;
        Ok(())
    })
}

/// Both sides of a criterion at one point. `variant` uses the names of the
/// configuration file (`main`, `nehari`, `power:0.5`, `intrinsic:6.28`, ...);
/// `metric` may be null for variants that do not need one.
///
/// # Safety
/// `variant` must be a NUL-terminated string, `map` a live handle, `metric`
/// null or a live handle, and both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn ml_criterion_sides(
    variant: *const c_char,
    map: *const MlMap,
    metric: *const MlMetric,
    re: f64,
    im: f64,
    out_lhs: *mut f64,
    out_rhs: *mut f64,
) -> MlStatus {
    guard(|| {
        let m = &get(map)?.0;
        let v = check(ExperimentConfig::default().parse_variant(text(variant)?, m))?;
        let mt = metric.as_ref().map(|x| &x.0);
        let (l, r) = check(criterion::point_sides(&v, m, mt, Complex64::new(re, im)))?;
        *out(out_lhs)? = l;
        *out(out_rhs)? = r;
        Ok(())
    })
}

/// Self-intersection scan of the lift over a polar grid of the unit disk.
/// Writes the refined gap and whether it counts as a collision.
///
/// # Safety
/// `map` must be a live handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_collision_scan(
    map: *const MlMap,
    nr: u32,
    ntheta: u32,
    out_gap: *mut f64,
    out_collision: *mut bool,
) -> MlStatus {
    guard(|| {
        let m = &get(map)?.0;
        if nr == 0 || ntheta < 3 {
            set_error("grid needs nr ≥ 1 and ntheta ≥ 3".into());
            return Err(MlStatus::InvalidInput);
        }
        let rep = surface_collision_scan(m, &Grid::polar(nr as usize, ntheta as usize), None);
        *out(out_gap)? = rep.witness.as_ref().map_or(rep.min_gap, |w| w.gap);
        *out(out_collision)? = rep.collision;
        Ok(())
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

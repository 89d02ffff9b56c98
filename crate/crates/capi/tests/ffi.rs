use std::ffi::{CStr, CString};
use std::ptr;

use minlift_capi::*;

fn cs(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn catalog(name: &str) -> *mut MlMap {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ml_map_from_catalog(cs(name).as_ptr(), &mut m) }, MlStatus::Ok);
    m
}

fn last_error() -> String {
    let p = ml_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn catenoid_lift_and_curvature() {
    let m = catalog("catenoid");
    let mut xyz = [0.0; 3];
    unsafe {
        assert_eq!(ml_map_lift(m, 0.5, 0.3, xyz.as_mut_ptr()), MlStatus::Ok);
        assert!((xyz[0].hypot(xyz[1]) - 0.5f64.cosh()).abs() < 1e-12);
        assert!((xyz[2] - 0.5).abs() < 1e-12);
        let mut k = 0.0;
        assert_eq!(ml_map_gauss_curvature(m, 0.5, 0.3, &mut k), MlStatus::Ok);
        assert!((k + 0.5f64.cosh().powi(-4)).abs() < 1e-12);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(ml_map_schwarzian(m, 0.0, 0.0, &mut re, &mut im), MlStatus::Ok);
        assert!((re - 0.5).abs() < 1e-12 && im.abs() < 1e-12);
        ml_map_free(m);
    }
}

#[test]
fn criterion_sides_through_the_abi() {
    let m = catalog("exp4");
    let mut metric = ptr::null_mut();
    let (mut l, mut r) = (0.0, 0.0);
    unsafe {
        assert_eq!(ml_metric_power(1.0, &mut metric), MlStatus::Ok);
        assert_eq!(ml_criterion_sides(cs("main").as_ptr(), m, metric, 0.0, 0.0, &mut l, &mut r), MlStatus::Ok);
        assert!((l - 8.0).abs() < 1e-12 && (r - 2.0).abs() < 1e-12);
        assert_eq!(ml_criterion_sides(cs("nehari").as_ptr(), m, ptr::null(), 0.0, 0.0, &mut l, &mut r), MlStatus::Ok);
        assert!((l - 8.0).abs() < 1e-12);
        let mut gap = 1.0;
        let mut hit = false;
        assert_eq!(ml_collision_scan(m, 16, 64, &mut gap, &mut hit), MlStatus::Ok);
        assert!(hit && gap < 1e-9);
        ml_metric_free(metric);
        ml_map_free(m);
    }
}

#[test]
fn metrics_and_diameters() {
    let mut d = 0.0;
    unsafe {
        assert_eq!(ml_diameter_power(0.5, &mut d), MlStatus::Ok);
        assert!((d - std::f64::consts::PI).abs() < 1e-12);
        let mut metric = ptr::null_mut();
        assert_eq!(ml_metric_power(1.0, &mut metric), MlStatus::Ok);
        assert_eq!(ml_metric_distance(metric, 0.0, 0.0, 0.5, 0.0, &mut d), MlStatus::Ok);
        assert!((d - 0.5f64.atanh()).abs() < 1e-9);
        assert_eq!(ml_metric_set_diameter(metric, -1.0), MlStatus::InvalidInput);
        ml_metric_free(metric);
        let m = catalog("catenoid");
        assert_eq!(ml_metric_pullback(m, 10.0, &mut metric), MlStatus::Ok);
        assert_eq!(ml_metric_set_diameter(metric, 2.0 * std::f64::consts::PI), MlStatus::Ok);
        let (mut l, mut r) = (0.0, 0.0);
        assert_eq!(ml_criterion_sides(cs("main").as_ptr(), m, metric, 0.0, 0.0, &mut l, &mut r), MlStatus::Ok);
        assert!((l - r).abs() < 1e-12);
        ml_metric_free(metric);
        ml_map_free(m);
    }
}

#[test]
fn errors_are_reported() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(ml_map_new(cs("exp(").as_ptr(), cs("0").as_ptr(), &mut m), MlStatus::Parse);
        assert!(m.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(ml_map_new(ptr::null(), cs("0").as_ptr(), &mut m), MlStatus::NullPointer);
        assert_eq!(ml_map_from_catalog(cs("nope").as_ptr(), &mut m), MlStatus::InvalidInput);
        assert!(last_error().contains("nope"));
        let p = catalog("planar");
        let mut v = 0.0;
        assert_eq!(ml_map_conformal_factor(p, 0.1, 0.1, ptr::null_mut()), MlStatus::NullPointer);
        assert_eq!(ml_criterion_sides(cs("nehari").as_ptr(), p, ptr::null(), 2.0, 0.0, &mut v, &mut v), MlStatus::OutOfDomain);
        assert_eq!(ml_criterion_sides(cs("bogus").as_ptr(), p, ptr::null(), 0.0, 0.0, &mut v, &mut v), MlStatus::InvalidInput);
        let s = catalog("strip");
        assert_eq!(ml_map_lift(s, 1.0, 0.0, [0.0; 3].as_mut_ptr()), MlStatus::Singular, "{}", last_error());
        ml_map_free(s);
        ml_map_free(p);
        ml_map_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(ml_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/minlift.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in ["ml_map_new", "ml_map_free", "ml_metric_power", "ml_criterion_sides", "ml_last_error_message", "ML_STATUS_OK"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let Ok(o) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).output() else {
        return;
    };
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

use std::f64::consts::PI;

use minlift::canonical_extension::{base_of, model_fiber, CanonicalFunction};
use minlift::catalog;
use minlift::conformal_metric::{ConformalMetric, GeodesicEnd, GeodesicOptions};
use minlift::criterion::{point_sides, Variant};
use minlift::expr::HoloExpr;
use minlift::harmonic_map::{HarmonicMapData, Vec3};
use minlift::injectivity_oracle::{chordal, chordal_to_infinity};
use minlift::schwarzian_ops::Mobius;
use num_complex::Complex64;
use proptest::prelude::*;

fn disk(r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..1.0f64, 0.0..2.0 * PI).prop_map(move |(a, t)| Complex64::from_polar(r * a.sqrt(), t))
}

fn vec3(h: f64) -> impl Strategy<Value = Vec3> {
    (-h..h, -h..h, -h..h).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jets_match_finite_differences(z in disk(0.9), a in -1.5..1.5f64) {
        let e = HoloExpr::parse(&format!("exp({a}*z)*sin(z) + 1/(2-z)")).unwrap();
        let j = e.eval_jet3(z).unwrap();
        let h = 1e-4;
        let f = |w: Complex64| e.eval(w).unwrap();
        let d1 = (f(z + h) - f(z - h)) / (2.0 * h);
        let d2 = (f(z + h) - 2.0 * f(z) + f(z - h)) / (h * h);
        prop_assert!((j.d1 - d1).norm() < 1e-6 * (1.0 + d1.norm()));
        prop_assert!((j.d2 - d2).norm() < 1e-5 * (1.0 + d2.norm()));
    }

    #[test]
    fn inversion_is_an_involution(p in vec3(4.0), c in vec3(4.0)) {
        prop_assume!((p - c).norm() > 1e-3);
        let m = Mobius::Inversion { center: c };
        let back = m.apply(&m.apply(&p).unwrap()).unwrap();
        prop_assert!((back - p).norm() < 1e-9 * (1.0 + p.norm()));
    }

    #[test]
    fn model_fibers_round_trip(z in disk(0.98), t in -3.1..3.1f64) {
        prop_assume!(z.norm() > 1e-3);
        let (zb, tb) = base_of(&model_fiber(z).unwrap().point(t)).unwrap();
        prop_assert!((zb - z).norm() < 1e-8);
        prop_assert!((tb - t).abs() < 1e-7);
    }

    #[test]
    fn chordal_metric_is_bounded_and_symmetric(a in vec3(1e3), b in vec3(1e3), c in vec3(1e3)) {
        let (ab, ba) = (chordal(&a, &b), chordal(&b, &a));
        prop_assert!((ab - ba).abs() < 1e-15);
        prop_assert!(ab <= 2.0 + 1e-15);
        prop_assert!(ab <= chordal(&a, &c) + chordal(&c, &b) + 1e-12);
        prop_assert!(chordal_to_infinity(&a) <= 2.0);
    }

    #[test]
    fn mobius_maps_have_vanishing_schwarzian(a in disk(0.8), z in disk(0.9)) {
        let m = HarmonicMapData::new(&format!("1/(1+({}+({})*i)*z)^2", a.re, a.im), "0").unwrap();
        prop_assert!(m.harmonic_schwarzian(z).unwrap().norm() < 1e-10);
    }

    #[test]
    fn geodesics_have_unit_speed(z0 in disk(0.6), th in 0.0..2.0 * PI, t in 0.0..1.5f64) {
        let metric = ConformalMetric::power(t);
        let p = metric.geodesic_ivp(z0, th, 1.0, &GeodesicOptions { ds: Some(0.1), ..Default::default() }).unwrap();
        let n = p.samples.len();
        for (k, s) in p.samples.iter().enumerate() {
            let rho = metric.jets(s.z).unwrap().rho;
            // the last sample of a ray cut off at the boundary sits where ρ blows up
            let tol = if k + 1 == n && p.end == GeodesicEnd::Boundary { 1e-6 } else { 1e-8 };
            prop_assert!((s.zdot.norm() * rho.exp() - 1.0).abs() < tol);
        }
    }

    #[test]
    fn power_margin_is_rotation_invariant(z in disk(0.9), alpha in 0.0..2.0 * PI, t in 0.0..2.0f64) {
        // the planar lift and the power metric are both rotation invariant
        let m = catalog::map("planar").unwrap();
        let v = Variant::Power { t };
        let a = point_sides(&v, &m, None, z).unwrap();
        let b = point_sides(&v, &m, None, z * Complex64::from_polar(1.0, alpha)).unwrap();
        prop_assert!((a.0 - b.0).abs() < 1e-9 * (1.0 + a.0) && (a.1 - b.1).abs() < 1e-9 * (1.0 + a.1));
    }

    #[test]
    fn fibers_are_critical_sets(z in disk(0.7), t in -3.0..3.0f64) {
        let m = catalog::map("twisted").unwrap();
        let metric = ConformalMetric::power(1.0);
        let cf = CanonicalFunction::new(&m, &metric);
        let f = cf.surface_fiber(z).unwrap();
        let q = f.point(t);
        prop_assume!((q - m.lift(z).unwrap()).norm() > 1e-3);
        let g = cf.log_jet(&Mobius::Inversion { center: q }, z).unwrap().grad_norm();
        prop_assert!(g < 1e-7, "{}", g);
    }
}

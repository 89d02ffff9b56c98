use minlift::catalog::{self, CATALOG};
use minlift::conformal_metric::ConformalMetric;
use minlift::criterion::{evaluate, EvalOptions, Grid, Variant};
use minlift::injectivity_oracle::{boundary_trace, surface_collision_scan, TraceOptions};
use num_complex::Complex64;

#[test]
fn passing_catalog_maps_have_no_collisions() {
    let grid = Grid::polar(32, 128);
    let metric = ConformalMetric::power(1.0);
    let mut checked = 0;
    for e in CATALOG {
        let m = catalog::map(e.name).unwrap();
        let Ok(r) = evaluate(&Variant::Main, &m, Some(&metric), &grid, &EvalOptions::default()) else { continue };
        let scan = surface_collision_scan(&m, &grid, None);
        if r.holds() {
            checked += 1;
            assert!(!scan.collision, "{}: criterion holds but the scan reports a collision", e.name);
        }
        if e.name == "exp4" {
            assert!(!r.holds() && scan.collision);
        }
    }
    assert!(checked >= 3);
}

#[test]
fn boundary_oscillation_shrinks_under_refinement() {
    let metric = ConformalMetric::power(1.0);
    let opts = TraceOptions { max_length: 12.0, ..Default::default() };
    for name in ["planar", "enneper-small"] {
        let m = catalog::map(name).unwrap();
        let osc: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| boundary_trace(&m, &metric, Complex64::new(0.0, 0.0), n, &opts).oscillation)
            .collect();
        assert!(osc[1] < osc[0] && osc[2] < osc[1], "{name}: {osc:?}");
    }
}

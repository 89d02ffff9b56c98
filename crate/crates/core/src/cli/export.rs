//! OBJ and CSV writers.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::canonical_extension::{CircleFiber, ExtValue};
use crate::conformal_metric::{ConformalMetric, GeodesicPath};
use crate::criterion::{CriterionReport, Grid};
use crate::harmonic_map::{HarmonicMapData, Vec3};
use crate::injectivity_oracle::BoundaryTrace;

#[derive(Clone, Debug, Serialize)]
pub struct Mesh {
    pub obj: String,
    pub vertices: usize,
    pub faces: usize,
    /// Grid points where the lift could not be evaluated.
    pub skipped: Vec<Complex64>,
}

/// Lift of a polar grid as an OBJ mesh with normals. Faces touching a
/// skipped vertex are dropped.
pub fn mesh_export(m: &HarmonicMapData, nr: usize, ntheta: usize, radius: f64, boundary_offset: f64) -> Mesh {
    let grid = Grid::Polar { nr, ntheta, radius, boundary_offset };
    let pts = grid.points();
    let data: Vec<Option<(Vec3, Vec3)>> = pts
        .par_iter()
        .map(|&z| {
            let j = m.surface_jet(z).ok()?;
            Some((j.position, j.normal))
        })
        .collect();
    let mut obj = String::from("# lifted surface\n");
    let mut skipped = Vec::new();
    for (z, d) in pts.iter().zip(&data) {
        match d {
            Some((p, _)) => writeln!(obj, "v {:.12} {:.12} {:.12}", p.x, p.y, p.z).unwrap(),
            None => {
                skipped.push(*z);
                obj.push_str("v 0 0 0\n");
            }
        }
    }
    for d in &data {
        let n = d.map_or(Vec3::zeros(), |x| x.1);
        writeln!(obj, "vn {:.12} {:.12} {:.12}", n.x, n.y, n.z).unwrap();
    }
    // OBJ indices are 1-based
    let idx = |ring: usize, j: usize| if ring == 0 { 1 } else { 2 + (ring - 1) * ntheta + (j % ntheta) };
    let ok = |i: usize| data[i - 1].is_some();
    let mut faces = 0;
    for j in 0..ntheta {
        let f = [idx(0, 0), idx(1, j), idx(1, j + 1)];
        if f.iter().all(|&i| ok(i)) {
            writeln!(obj, "f {0}//{0} {1}//{1} {2}//{2}", f[0], f[1], f[2]).unwrap();
            faces += 1;
        }
    }
    for ring in 1..nr {
        for j in 0..ntheta {
            let f = [idx(ring, j), idx(ring + 1, j), idx(ring + 1, j + 1), idx(ring, j + 1)];
            if f.iter().all(|&i| ok(i)) {
                writeln!(obj, "f {0}//{0} {1}//{1} {2}//{2} {3}//{3}", f[0], f[1], f[2], f[3]).unwrap();
                faces += 1;
            }
        }
    }
    Mesh { obj, vertices: pts.len(), faces, skipped }
}

pub fn criteria_csv(reports: &[CriterionReport]) -> String {
    let mut s = String::from("variant,re_z,im_z,lhs,rhs,margin\n");
    for r in reports {
        for p in &r.points {
            writeln!(s, "{},{:e},{:e},{:e},{:e},{:e}", r.variant, p.z.re, p.z.im, p.lhs, p.rhs, p.margin).unwrap();
        }
    }
    s
}

/// Columns `path,s,re_z,im_z,kappa` with `κ` the Euclidean curvature.
pub fn geodesics_csv(metric: &ConformalMetric, paths: &[GeodesicPath]) -> String {
    let mut s = String::from("path,s,re_z,im_z,kappa\n");
    for (k, p) in paths.iter().enumerate() {
        for sm in &p.samples {
            let kappa = metric
                .geodesic_derivatives(sm.z, sm.zdot)
                .map(|(zdd, _)| ConformalMetric::euclidean_curvature(sm.zdot, zdd))
                .unwrap_or(f64::NAN);
            writeln!(s, "{k},{:e},{:e},{:e},{:e}", sm.s, sm.z.re, sm.z.im, kappa).unwrap();
        }
    }
    s
}

/// Columns `theta,x,y,z,infinite`.
pub fn boundary_csv(trace: &BoundaryTrace) -> String {
    let mut s = String::from("theta,x,y,z,infinite\n");
    for b in &trace.samples {
        let v = b.value.unwrap_or(Vec3::repeat(f64::NAN));
        writeln!(s, "{:e},{:e},{:e},{:e},{}", b.theta, v.x, v.y, v.z, b.infinite).unwrap();
    }
    s
}

/// Columns `px,py,pz,ex,ey,ez,infinite`.
pub fn extension_csv(samples: &[(Vec3, ExtValue)]) -> String {
    let mut s = String::from("px,py,pz,ex,ey,ez,infinite\n");
    for (p, e) in samples {
        let (v, inf) = match e {
            ExtValue::Finite(v) => (*v, false),
            ExtValue::Infinity => (Vec3::repeat(f64::NAN), true),
        };
        writeln!(s, "{:e},{:e},{:e},{:e},{:e},{:e},{}", p.x, p.y, p.z, v.x, v.y, v.z, inf).unwrap();
    }
    s
}

/// Fibers as OBJ polylines; lines are cut at `line_extent` from the base.
pub fn fibers_obj(fibers: &[CircleFiber], segments: usize, line_extent: f64) -> String {
    let mut s = String::from("# fibers\n");
    let mut next = 1;
    for f in fibers {
        let pts: Vec<Vec3> = (0..=segments)
            .map(|k| {
                let u = k as f64 / segments as f64;
                if f.is_line {
                    f.point(line_extent * (2.0 * u - 1.0))
                } else {
                    f.point(std::f64::consts::PI * (2.0 * u - 1.0))
                }
            })
            .collect();
        for p in &pts {
            writeln!(s, "v {:.12} {:.12} {:.12}", p.x, p.y, p.z).unwrap();
        }
        s.push('l');
        for i in 0..pts.len() {
            write!(s, " {}", next + i).unwrap();
        }
        s.push('\n');
        next += pts.len();
    }
    s
}

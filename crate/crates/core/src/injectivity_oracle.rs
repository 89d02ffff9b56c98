//! Sampled checks of injectivity: collisions of the lifted surface,
//! injectivity of space curves, boundary values along geodesic rays and
//! boundary identifications.
//!
//! A report of no collision is only a statement at the sampling resolution.

use std::collections::HashMap;

use nalgebra::{Matrix3x4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::conformal_metric::{ConformalMetric, GeodesicEnd, GeodesicOptions};
use crate::criterion::Grid;
use crate::harmonic_map::{HarmonicMapData, Vec3};
use crate::schwarzian_ops::SpaceCurve;

/// Values beyond this norm are compared in the spherical metric.
pub const FAR: f64 = 1e8;
/// Gap below which two samples are declared to coincide.
pub const COLLISION_GAP: f64 = 1e-9;

/// Chordal distance on `ℝ³ ∪ {∞}` viewed as the unit 3-sphere.
pub fn chordal(a: &Vec3, b: &Vec3) -> f64 {
    2.0 * (a - b).norm() / ((1.0 + a.norm_squared()) * (1.0 + b.norm_squared())).sqrt()
}

/// Chordal distance from a point to infinity.
pub fn chordal_to_infinity(a: &Vec3) -> f64 {
    2.0 / (1.0 + a.norm_squared()).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub z1: Complex64,
    pub z2: Complex64,
    pub x1: Vec3,
    pub x2: Vec3,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CollisionReport {
    pub grid: Grid,
    pub spacing: f64,
    pub decorrelation_radius: f64,
    pub samples: usize,
    pub skipped: usize,
    /// Smallest gap over admissible pairs of grid samples.
    pub min_gap: f64,
    /// Closest admissible pair after refinement.
    pub witness: Option<Witness>,
    pub collision: bool,
}

/// Nearest admissible pair among `pts` by a uniform spatial hash. Pairs whose
/// parameters are within `sep` are ignored.
fn closest_pair(pts: &[(Complex64, Vec3)], sep: f64) -> Option<(usize, usize, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
    for (_, x) in pts {
        lo = lo.inf(x);
        hi = hi.sup(x);
    }
    let diag = (hi - lo).norm().max(1e-300);
    let mut cell = diag * 1e-4;
    loop {
        let key = |x: &Vec3| {
            let k = (x - lo) / cell;
            (k.x.floor() as i64, k.y.floor() as i64, k.z.floor() as i64)
        };
        let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, (_, x)) in pts.iter().enumerate() {
            buckets.entry(key(x)).or_default().push(i);
        }
        let keys: Vec<_> = buckets.keys().copied().collect();
        let best = keys
            .par_iter()
            .map(|&(a, b, c)| {
                let mut best: Option<(usize, usize, f64)> = None;
                let here = &buckets[&(a, b, c)];
                for da in -1..=1 {
                    for db in -1..=1 {
                        for dc in -1..=1 {
                            let nk = (a + da, b + db, c + dc);
                            // each unordered pair of buckets once
                            if nk < (a, b, c) {
                                continue;
                            }
                            let Some(there) = buckets.get(&nk) else { continue };
                            let same = nk == (a, b, c);
                            for (ii, &i) in here.iter().enumerate() {
                                let start = if same { ii + 1 } else { 0 };
                                for &j in &there[start..] {
                                    if (pts[i].0 - pts[j].0).norm() <= sep {
                                        continue;
                                    }
                                    let d = (pts[i].1 - pts[j].1).norm();
                                    if best.is_none_or(|b| d < b.2) {
                                        best = Some((i.min(j), i.max(j), d));
                                    }
                                }
                            }
                        }
                    }
                }
                best
            })
            .reduce(|| None, |a, b| match (a, b) {
                (Some(a), Some(b)) => Some(if (b.2, b.0, b.1) < (a.2, a.0, a.1) { b } else { a }),
                (a, None) => a,
                (None, b) => b,
            });
        match best {
            Some(b) if b.2 <= cell => return Some(b),
            _ if cell > 2.0 * diag => return best,
            _ => cell *= 4.0,
        }
    }
}

/// Gauss–Newton on `X(z1) − X(z2) = 0` with minimum-norm steps.
fn refine_pair(m: &HarmonicMapData, mut z1: Complex64, mut z2: Complex64) -> Option<(Complex64, Complex64)> {
    for _ in 0..30 {
        let r = m.lift(z1).ok()? - m.lift(z2).ok()?;
        if r.norm() < 1e-14 {
            break;
        }
        let p1 = m.partials(z1).ok()?;
        let p2 = m.partials(z2).ok()?;
        let j = Matrix3x4::from_columns(&[p1.d1[0], p1.d1[1], -p2.d1[0], -p2.d1[1]]);
        let step: Vector4<f64> = j.svd(true, true).solve(&(-r), 1e-14).ok()?;
        z1 += Complex64::new(step[0], step[1]);
        z2 += Complex64::new(step[2], step[3]);
        if step.norm() < 1e-15 {
            break;
        }
    }
    Some((z1, z2))
}

/// Scans the lift over a grid for pairs of distant parameters with nearly
/// equal images; the closest pair is refined and collisions are declared
/// below `COLLISION_GAP`.
pub fn surface_collision_scan(m: &HarmonicMapData, grid: &Grid, decorrelation_radius: Option<f64>) -> CollisionReport {
    let spacing = grid.spacing();
    let sep = decorrelation_radius.unwrap_or(3.0 * spacing);
    let zs = grid.points();
    let lifted: Vec<Option<Vec3>> = zs.par_iter().map(|&z| m.lift(z).ok().filter(|x| x.iter().all(|v| v.is_finite()))).collect();
    let mut near = Vec::new();
    let mut far = Vec::new();
    let mut skipped = 0;
    for (z, x) in zs.iter().zip(lifted) {
        match x {
            Some(x) if x.norm() <= FAR => near.push((*z, x)),
            Some(x) => far.push((*z, x)),
            None => skipped += 1,
        }
    }
    let mut best: Option<(Complex64, Complex64, f64)> =
        closest_pair(&near, sep).map(|(i, j, d)| (near[i].0, near[j].0, d));
    // far samples: spherical gaps, pairwise
    for (i, a) in far.iter().enumerate() {
        for b in far.iter().skip(i + 1) {
            if (a.0 - b.0).norm() > sep {
                let d = chordal(&a.1, &b.1);
                if best.is_none_or(|x| d < x.2) {
                    best = Some((a.0, b.0, d));
                }
            }
        }
    }
    let min_gap = best.map_or(f64::INFINITY, |b| b.2);
    let witness = best.and_then(|(z1, z2, _)| {
        let (r1, r2) = refine_pair(m, z1, z2)
            .filter(|(a, b)| (a - b).norm() > sep && a.norm() < 1.0 && b.norm() < 1.0)
            .unwrap_or((z1, z2));
        let x1 = m.lift(r1).ok()?;
        let x2 = m.lift(r2).ok()?;
        let gap = if x1.norm() > FAR || x2.norm() > FAR { chordal(&x1, &x2) } else { (x1 - x2).norm() };
        Some(Witness { z1: r1, z2: r2, x1, x2, gap })
    });
    let collision = witness.as_ref().is_some_and(|w| w.gap < COLLISION_GAP);
    CollisionReport {
        grid: grid.clone(),
        spacing,
        decorrelation_radius: sep,
        samples: near.len() + far.len(),
        skipped,
        min_gap,
        witness,
        collision,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveWitness {
    pub i: usize,
    pub j: usize,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveInjectivity {
    pub injective: bool,
    pub min_gap: f64,
    pub witness: Option<CurveWitness>,
    /// Both ends of the curve leave every bounded set.
    pub ends_at_infinity: bool,
}

/// Pairwise scan of a sampled curve with the same decorrelation rule as the
/// surface scan, in the spherical metric when samples are far out.
pub fn curve_injectivity(curve: &SpaceCurve, decorrelation: Option<usize>) -> CurveInjectivity {
    let n = curve.phi.len();
    let sep = decorrelation.unwrap_or(3);
    let mut best: Option<CurveWitness> = None;
    for i in 0..n {
        for j in (i + sep + 1)..n {
            let (a, b) = (&curve.phi[i], &curve.phi[j]);
            let d = if a.norm() > FAR || b.norm() > FAR || !a.iter().chain(b.iter()).all(|v| v.is_finite()) {
                spherical_gap(a, b)
            } else {
                (a - b).norm()
            };
            if best.as_ref().is_none_or(|w| d < w.gap) {
                best = Some(CurveWitness { i, j, gap: d });
            }
        }
    }
    let ends_at_infinity = n >= 2 && !(curve.phi[0].norm() <= FAR) && !(curve.phi[n - 1].norm() <= FAR);
    let min_gap = best.as_ref().map_or(f64::INFINITY, |w| w.gap);
    CurveInjectivity { injective: min_gap >= COLLISION_GAP, min_gap, witness: best.filter(|w| w.gap < COLLISION_GAP), ends_at_infinity }
}

fn spherical_gap(a: &Vec3, b: &Vec3) -> f64 {
    let fa = a.iter().all(|v| v.is_finite());
    let fb = b.iter().all(|v| v.is_finite());
    match (fa, fb) {
        (true, true) => chordal(a, b),
        (true, false) => chordal_to_infinity(a),
        (false, true) => chordal_to_infinity(b),
        (false, false) => 0.0,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundarySample {
    pub theta: f64,
    /// Image of the ray endpoint; `None` when flagged as infinite.
    pub value: Option<Vec3>,
    pub infinite: bool,
    /// `∫ |df̃|` along the ray.
    pub image_length: f64,
    /// Growth of `∫ |df̃|` over the final stretch of the ray.
    pub tail: f64,
    pub ray_length: f64,
    pub error: Option<String>,
}

impl BoundarySample {
    /// Point on the unit 3-sphere by stereographic projection.
    pub fn spherical(&self) -> Option<[f64; 4]> {
        if self.infinite {
            return Some([0.0, 0.0, 0.0, 1.0]);
        }
        let x = self.value?;
        let n2 = x.norm_squared();
        Some([2.0 * x.x / (1.0 + n2), 2.0 * x.y / (1.0 + n2), 2.0 * x.z / (1.0 + n2), (n2 - 1.0) / (n2 + 1.0)])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryTrace {
    pub z0: Complex64,
    pub samples: Vec<BoundarySample>,
    /// Largest spherical jump between neighbouring directions.
    pub oscillation: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct TraceOptions {
    /// Rays stop here if they have not reached the boundary.
    pub max_length: f64,
    /// Trace the boundary of the geodesic ball of radius `max_length`
    /// instead of the disk boundary.
    pub ball: bool,
    pub ds: f64,
    pub boundary_eps: f64,
    /// A ray ending at the boundary cutoff is flagged as reaching infinity
    /// when its image moves by more than this over the last decade of
    /// approach, from `1 − 10ε` to `1 − ε` of the radius. A ray stopped by
    /// `max_length` is flagged when its image length still grows by more
    /// than this over its final tenth, unless `ball` is set.
    pub tail_tol: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { max_length: 40.0, ball: false, ds: 0.01, boundary_eps: 1e-9, tail_tol: 1e-2 }
    }
}

fn spherical_distance(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Boundary values of the lift along geodesic rays from `z0`.
pub fn boundary_trace(m: &HarmonicMapData, metric: &ConformalMetric, z0: Complex64, n_dirs: usize, opts: &TraceOptions) -> BoundaryTrace {
    let gopts = GeodesicOptions { ds: Some(opts.ds), boundary_eps: opts.boundary_eps, ..Default::default() };
    let samples: Vec<BoundarySample> = (0..n_dirs)
        .into_par_iter()
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n_dirs as f64;
            let fail = |e: String| BoundarySample {
                theta,
                value: None,
                infinite: false,
                image_length: f64::NAN,
                tail: f64::NAN,
                ray_length: f64::NAN,
                error: Some(e),
            };
            let path = match metric.geodesic_ivp(z0, theta, opts.max_length, &gopts) {
                Ok(p) => p,
                Err(e) => return fail(e.to_string()),
            };
            // image speed e^σ|ż| integrated by the trapezoid rule
            let mut speeds = Vec::with_capacity(path.samples.len());
            for s in &path.samples {
                match m.conformal_factor(s.z) {
                    Ok(es) => speeds.push((s.s, es * s.zdot.norm())),
                    Err(e) => return fail(e.to_string()),
                }
            }
            let mut cum = vec![0.0; speeds.len()];
            for i in 1..speeds.len() {
                cum[i] = cum[i - 1] + 0.5 * (speeds[i].1 + speeds[i - 1].1) * (speeds[i].0 - speeds[i - 1].0);
            }
            let total = *cum.last().unwrap_or(&0.0);
            let l = path.length;
            let cut = speeds.iter().position(|(s, _)| *s >= 0.9 * l).unwrap_or(0);
            let tail = total - cum[cut];
            let end = path.end_point();
            let value = match m.lift(end) {
                Ok(v) => v,
                // the ray may stop within pole clearance of a boundary singularity
                Err(e) if path.end == GeodesicEnd::Boundary => {
                    match path.samples.iter().rev().skip(1).find_map(|s| m.lift(s.z).ok()) {
                        Some(v) => v,
                        None => return fail(e.to_string()),
                    }
                }
                Err(e) => return fail(e.to_string()),
            };
            let infinite = value.norm() > FAR
                || match path.end {
                    GeodesicEnd::Boundary => {
                        let r = metric.domain_radius;
                        let before = path.samples.iter().rev().find(|s| 1.0 - s.z.norm() / r >= 10.0 * opts.boundary_eps);
                        match before.map(|s| m.lift(s.z)) {
                            Some(Ok(x)) => (value - x).norm() > opts.tail_tol,
                            _ => tail > opts.tail_tol,
                        }
                    }
                    GeodesicEnd::Reached => !opts.ball && tail > opts.tail_tol,
                };
            BoundarySample {
                theta,
                value: if infinite { None } else { Some(value) },
                infinite,
                image_length: total,
                tail,
                ray_length: l,
                error: None,
            }
        })
        .collect();
    let sph: Vec<Option<[f64; 4]>> = samples.iter().map(|s| s.spherical()).collect();
    let mut osc: f64 = 0.0;
    for i in 0..sph.len() {
        if let (Some(a), Some(b)) = (&sph[i], &sph[(i + 1) % sph.len()]) {
            osc = osc.max(spherical_distance(a, b));
        }
    }
    BoundaryTrace { z0, samples, oscillation: osc }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Identification {
    pub theta1: f64,
    pub theta2: f64,
    pub distance: f64,
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * std::f64::consts::PI);
    d.min(2.0 * std::f64::consts::PI - d)
}

/// Pairs of well separated directions whose boundary values coincide within
/// `tol_id` in the spherical metric. Runs of adjacent matching pairs are
/// merged and represented by their closest member.
pub fn detect_extremal_identifications(trace: &BoundaryTrace, tol_id: f64, min_separation: f64) -> Vec<Identification> {
    let sph: Vec<Option<[f64; 4]>> = trace.samples.iter().map(|s| s.spherical()).collect();
    let n = sph.len();
    let mut raw: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if angle_gap(trace.samples[i].theta, trace.samples[j].theta) < min_separation {
                continue;
            }
            if let (Some(a), Some(b)) = (&sph[i], &sph[j]) {
                let d = spherical_distance(a, b);
                if d < tol_id {
                    raw.push((i, j, d));
                }
            }
        }
    }
    // cluster pairs that are neighbours in both indices
    let mut clusters: Vec<Vec<(usize, usize, f64)>> = Vec::new();
    let adj = |a: usize, b: usize| {
        let d = a.abs_diff(b);
        d <= 1 || d == n - 1
    };
    for p in raw {
        let hit = clusters.iter_mut().find(|c| c.iter().any(|q| (adj(p.0, q.0) && adj(p.1, q.1)) || (adj(p.0, q.1) && adj(p.1, q.0))));
        match hit {
            Some(c) => c.push(p),
            None => clusters.push(vec![p]),
        }
    }
    clusters
        .into_iter()
        .map(|c| {
            let b = c.into_iter().min_by(|a, b| a.2.total_cmp(&b.2)).unwrap();
            Identification { theta1: trace.samples[b.0].theta, theta2: trace.samples[b.1].theta, distance: b.2 }
        })
        .collect()
}

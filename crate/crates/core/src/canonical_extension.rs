//! The canonical function `u_f = e^{(ρ−σ)/2}`, its critical points under
//! Möbius shifts, the circle bundles over the disk and over the surface,
//! and the spatial extension of a lift built from them.

use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::conformal_metric::{ConformalMetric, GeodesicPath};
use crate::criterion::Grid;
use crate::error::{Error, Result};
use crate::harmonic_map::{partials_from_jets, sigma_from_jets, HarmonicMapData, PlaneJet2, Vec3};
use crate::schwarzian_ops::{schwarzian_real, Mobius};

const PI: f64 = std::f64::consts::PI;

/// `log u` at a point with Euclidean gradient and Hessian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl LogJet {
    pub fn grad_norm(&self) -> f64 {
        self.grad[0].hypot(self.grad[1])
    }
}

/// First-order frame of a lift at a point, possibly after a Möbius shift.
#[derive(Clone, Copy, Debug)]
struct Frame {
    base: Vec3,
    x_x: Vec3,
    x_y: Vec3,
    log_u: LogJet,
}

/// The canonical function of a lift relative to a metric.
#[derive(Clone, Copy, Debug)]
pub struct CanonicalFunction<'a> {
    pub map: &'a HarmonicMapData,
    pub metric: &'a ConformalMetric,
}

/// A circle of a bundle, or a line when `is_line`.
///
/// Points are parametrized from the base: on a circle,
/// `center + radius·(−inward cos φ + tangent sin φ)`; on a line,
/// `base + s·tangent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CircleFiber {
    pub base: Vec3,
    pub is_line: bool,
    pub center: Vec3,
    pub radius: f64,
    /// Unit direction of the fiber at its base.
    pub tangent: Vec3,
    /// Unit vector from the base toward the center.
    pub inward: Vec3,
}

impl CircleFiber {
    fn circle(base: Vec3, tangent: Vec3, inward: Vec3, radius: f64) -> Self {
        Self { base, is_line: false, center: base + inward * radius, radius, tangent, inward }
    }

    fn line(base: Vec3, tangent: Vec3, inward: Vec3) -> Self {
        Self { base, is_line: true, center: base, radius: f64::INFINITY, tangent, inward }
    }

    /// Unit normal of the plane of the fiber.
    pub fn plane_normal(&self) -> Vec3 {
        self.inward.cross(&self.tangent)
    }

    /// Point at angle `φ` on a circle or signed length `φ` on a line.
    pub fn point(&self, phi: f64) -> Vec3 {
        if self.is_line {
            self.base + self.tangent * phi
        } else {
            let (s, c) = phi.sin_cos();
            self.center + (self.tangent * s - self.inward * c) * self.radius
        }
    }

    /// Angle or signed length of the point of the fiber nearest `p`.
    pub fn parameter_of(&self, p: &Vec3) -> f64 {
        if self.is_line {
            (p - self.base).dot(&self.tangent)
        } else {
            let d = p - self.center;
            d.dot(&self.tangent).atan2(-d.dot(&self.inward))
        }
    }

    /// Euclidean distance from `p` to the fiber.
    pub fn distance_to(&self, p: &Vec3) -> f64 {
        if self.is_line {
            let d = p - self.base;
            (d - self.tangent * d.dot(&self.tangent)).norm()
        } else {
            let d = p - self.center;
            let n = self.plane_normal();
            let h = d.dot(&n);
            let inplane = (d - n * h).norm();
            ((inplane - self.radius).powi(2) + h * h).sqrt()
        }
    }
}

/// Fiber of the model bundle over the unit disk through `z`: the circle
/// orthogonal to the plane through `z` and `1/z̄`, a vertical line at 0.
pub fn model_fiber(z: Complex64) -> Result<CircleFiber> {
    let r = z.norm();
    if !(r < 1.0) {
        return Err(Error::OutOfDomain(z));
    }
    let base = Vec3::new(z.re, z.im, 0.0);
    let up = Vec3::new(0.0, 0.0, 1.0);
    if r == 0.0 {
        return Ok(CircleFiber::line(base, up, Vec3::new(1.0, 0.0, 0.0)));
    }
    let dir = Vec3::new(z.re / r, z.im / r, 0.0);
    Ok(CircleFiber::circle(base, up, dir, (1.0 - r * r) / (2.0 * r)))
}

/// Base point and fiber parameter of `p` in the model bundle. Points of the
/// unit circle lie on no fiber.
pub fn base_of(p: &Vec3) -> Result<(Complex64, f64)> {
    let rho = p.x.hypot(p.y);
    if rho == 0.0 {
        return Ok((Complex64::new(0.0, 0.0), p.z));
    }
    if p.z == 0.0 && (rho - 1.0).abs() < 1e-15 {
        return Err(Error::InvalidInput("point on the unit circle has no fiber".into()));
    }
    let a = (p.norm_squared() + 1.0) / rho;
    // smaller root of r + 1/r = a, written to avoid cancellation
    let r = 2.0 / (a + (a * a - 4.0).max(0.0).sqrt());
    let z = Complex64::new(p.x, p.y) * (r / rho);
    let f = model_fiber(z)?;
    Ok((z, f.parameter_of(p)))
}

/// Derivative of a Möbius shift applied to a tangent vector at `p`.
fn mobius_push(m: &Mobius, p: &Vec3, v: &Vec3) -> Vec3 {
    match m {
        Mobius::Identity => *v,
        Mobius::Inversion { center } => {
            let d = p - center;
            let r2 = d.norm_squared();
            let w = d / r2.sqrt();
            (v - w * (2.0 * v.dot(&w))) / r2
        }
        Mobius::Affine { rotation, scale, .. } => rotation * v * *scale,
    }
}

fn build_fiber(fr: &Frame, line_tol: f64) -> CircleFiber {
    let n = fr.x_x.cross(&fr.x_y).normalize();
    let e_sigma = fr.x_x.norm();
    let g = fr.log_u.grad;
    let gn = fr.log_u.grad_norm();
    if gn < line_tol {
        return CircleFiber::line(fr.base, n, fr.x_x / e_sigma);
    }
    let push = fr.x_x * g[0] + fr.x_y * g[1];
    let inward = push / push.norm();
    CircleFiber::circle(fr.base, n, inward, e_sigma / (2.0 * gn))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexitySample {
    pub s: f64,
    pub u: f64,
    pub u_ss: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityReport {
    pub samples: Vec<ConvexitySample>,
    /// `min (U″ + (π²/δ²)U)`
    pub min_residual: f64,
    /// `π²/δ²`
    pub coefficient: f64,
    /// Largest `|U″ + ½(Sτ)U|` with `τ′ = U^{−2}` differentiated numerically;
    /// `None` when samples are too few or unevenly spaced.
    pub ode_residual: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CriticalSearchOptions {
    pub starts: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for CriticalSearchOptions {
    fn default() -> Self {
        Self { starts: 16, grad_tol: 1e-10, max_iter: 200 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchRun {
    pub start: Complex64,
    pub end: Complex64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// The run left the domain while `u` kept decreasing.
    pub escaped: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPointReport {
    /// Distinct critical points found.
    pub points: Vec<Complex64>,
    pub values: Vec<f64>,
    pub runs: Vec<SearchRun>,
}

impl CriticalPointReport {
    pub fn unique(&self) -> Option<Complex64> {
        match self.points.as_slice() {
            [z] => Some(*z),
            _ => None,
        }
    }

    /// Every run either converged to the same point or left the domain
    /// downhill.
    pub fn boundary_decrease(&self) -> bool {
        self.points.is_empty() && self.runs.iter().all(|r| r.escaped)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusBound {
    pub critical_point: Complex64,
    /// Fitted lower bound of `e^{−ρ}|∇u|` away from the critical point.
    pub a: f64,
    /// Largest `r·u·a` over the grid, with `r` the fiber diameter.
    pub max_scaled: f64,
    pub bound_holds: bool,
    pub max_r_outer: f64,
    pub min_r_inner: f64,
    pub shrinks_at_boundary: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct UcpProbe {
    pub shifts: usize,
    pub max_critical_points: usize,
    pub counts: Vec<usize>,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageProbe {
    pub samples: usize,
    /// Points lying on exactly one located fiber.
    pub located: usize,
    pub max_distance: f64,
    pub failures: Vec<Vec3>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DisjointnessProbe {
    pub pairs: usize,
    pub min_distance: f64,
}

impl<'a> CanonicalFunction<'a> {
    pub fn new(map: &'a HarmonicMapData, metric: &'a ConformalMetric) -> Self {
        Self { map, metric }
    }

    fn base_log_jet(&self, z: Complex64) -> Result<(LogJet, crate::harmonic_map::MapJets)> {
        let j = self.map.jets(z)?;
        if j.hp.d0.norm() == 0.0 {
            return Err(Error::Singular { at: z, what: "h′ vanishes" });
        }
        let s = sigma_from_jets(&j);
        let r = self.metric.jets(z)?;
        let e = PlaneJet2::from_wirtinger(
            0.5 * (r.rho_z - s.sigma_z),
            0.5 * (r.rho_zz - s.sigma_zz),
            0.5 * (r.rho_zzbar - s.sigma_zzbar),
        );
        Ok((
            LogJet {
                value: 0.5 * (r.rho - s.sigma),
                grad: [e.psi_x, e.psi_y],
                hess: [[e.psi_xx, e.psi_xy], [e.psi_xy, e.psi_yy]],
            },
            j,
        ))
    }

    fn frame(&self, shift: &Mobius, z: Complex64) -> Result<Frame> {
        let (mut lj, j) = self.base_log_jet(z)?;
        let p = partials_from_jets(&j);
        let (xx, xy) = (p.d1[0], p.d1[1]);
        match shift {
            Mobius::Identity => Ok(Frame { base: self.map.lift(z)?, x_x: xx, x_y: xy, log_u: lj }),
            Mobius::Affine { scale, .. } => {
                lj.value -= 0.5 * scale.ln();
                let base = self.map.lift(z)?;
                Ok(Frame {
                    base: shift.apply(&base)?,
                    x_x: mobius_push(shift, &base, &xx),
                    x_y: mobius_push(shift, &base, &xy),
                    log_u: lj,
                })
            }
            Mobius::Inversion { center } => {
                let x = self.map.lift(z)?;
                let d = x - center;
                let r2 = d.norm_squared();
                if r2 == 0.0 {
                    return Err(Error::Singular { at: z, what: "shift center lies on the surface" });
                }
                let xi = [xx, xy];
                let xij = [[p.d2[0], p.d2[1]], [p.d2[1], p.d2[2]]];
                // log|X − c| and its derivatives
                let g: [f64; 2] = std::array::from_fn(|i| d.dot(&xi[i]) / r2);
                lj.value += 0.5 * r2.ln();
                for i in 0..2 {
                    lj.grad[i] += g[i];
                    for k in 0..2 {
                        lj.hess[i][k] += (xi[i].dot(&xi[k]) + d.dot(&xij[i][k])) / r2 - 2.0 * g[i] * g[k];
                    }
                }
                Ok(Frame {
                    base: shift.apply(&x)?,
                    x_x: mobius_push(shift, &x, &xx),
                    x_y: mobius_push(shift, &x, &xy),
                    log_u: lj,
                })
            }
        }
    }

    /// `log u` of the shifted lift with its derivatives.
    pub fn log_jet(&self, shift: &Mobius, z: Complex64) -> Result<LogJet> {
        match shift {
            Mobius::Identity => Ok(self.base_log_jet(z)?.0),
            _ => Ok(self.frame(shift, z)?.log_u),
        }
    }

    pub fn u(&self, z: Complex64) -> Result<f64> {
        Ok(self.base_log_jet(z)?.0.value.exp())
    }

    /// Canonical function of the shifted lift `M∘f̃`.
    pub fn shifted_u(&self, shift: &Mobius, z: Complex64) -> Result<f64> {
        match shift {
            Mobius::Identity => self.u(z),
            Mobius::Inversion { center } => {
                let d = self.map.lift(z)? - center;
                if d.norm() == 0.0 {
                    return Err(Error::Singular { at: z, what: "shift center lies on the surface" });
                }
                Ok(d.norm() * self.u(z)?)
            }
            Mobius::Affine { scale, .. } => Ok(self.u(z)? / scale.sqrt()),
        }
    }

    /// `U″ + (π²/δ²)U` along a unit-speed geodesic for the shifted lift.
    pub fn convexity_check(&self, path: &GeodesicPath, shift: &Mobius) -> Result<ConvexityReport> {
        let delta = self.metric.delta().unwrap_or(f64::INFINITY);
        let coef = if delta.is_finite() { PI * PI / (delta * delta) } else { 0.0 };
        let mut samples = Vec::with_capacity(path.samples.len());
        let mut min_res = f64::INFINITY;
        for sm in &path.samples {
            let lj = self.log_jet(shift, sm.z)?;
            let (zdd, _) = self.metric.geodesic_derivatives(sm.z, sm.zdot)?;
            let a = [sm.zdot.re, sm.zdot.im];
            let b = [zdd.re, zdd.im];
            let l1 = lj.grad[0] * a[0] + lj.grad[1] * a[1];
            let l2 = lj.hess[0][0] * a[0] * a[0]
                + 2.0 * lj.hess[0][1] * a[0] * a[1]
                + lj.hess[1][1] * a[1] * a[1]
                + lj.grad[0] * b[0]
                + lj.grad[1] * b[1];
            let u = lj.value.exp();
            let u_ss = u * (l2 + l1 * l1);
            let residual = u_ss + coef * u;
            min_res = min_res.min(residual);
            samples.push(ConvexitySample { s: sm.s, u, u_ss, residual });
        }
        let ode_residual = ode_cross_check(&samples);
        Ok(ConvexityReport { samples, min_residual: min_res, coefficient: coef, ode_residual })
    }

    fn newton_run(&self, shift: &Mobius, start: Complex64, opts: &CriticalSearchOptions) -> SearchRun {
        let radius = self.metric.domain_radius;
        let mut z = start;
        let mut run = SearchRun { start, end: z, iterations: 0, grad_norm: f64::INFINITY, converged: false, escaped: false };
        let Ok(mut lj) = self.log_jet(shift, z) else {
            return run;
        };
        for it in 0..opts.max_iter {
            run.iterations = it;
            let gn = lj.grad_norm();
            run.grad_norm = gn;
            run.end = z;
            if gn < opts.grad_tol {
                run.converged = true;
                return run;
            }
            let [[a, b], [_, d]] = lj.hess;
            let det = a * d - b * b;
            let g = lj.grad;
            let mut step = if a > 0.0 && det > 0.0 {
                Complex64::new(-(d * g[0] - b * g[1]) / det, -(a * g[1] - b * g[0]) / det)
            } else {
                Complex64::new(-g[0], -g[1]) * (0.1 / gn.max(1e-300)) * (1.0 - (z.norm() / radius).powi(2)).max(1e-3)
            };
            // keep steps inside the domain and decreasing log u
            let mut accepted = None;
            for _ in 0..60 {
                let zn = z + step;
                if zn.norm() < radius {
                    if let Ok(ln) = self.log_jet(shift, zn) {
                        if ln.value <= lj.value + 1e-12 * lj.value.abs().max(1.0) || ln.grad_norm() < gn {
                            accepted = Some((zn, ln));
                            break;
                        }
                    }
                }
                step *= 0.5;
            }
            match accepted {
                Some((zn, ln)) => {
                    if (zn - z).norm() < 1e-15 && gn < 1e-7 {
                        run.end = zn;
                        run.grad_norm = ln.grad_norm();
                        run.converged = true;
                        return run;
                    }
                    z = zn;
                    lj = ln;
                }
                None => {
                    run.escaped = z.norm() > 0.9 * radius;
                    return run;
                }
            }
            if z.norm() > radius * (1.0 - 1e-9) {
                run.escaped = true;
                return run;
            }
        }
        run.end = z;
        run.escaped = z.norm() > 0.9 * radius;
        run
    }

    /// Multi-start damped Newton search for critical points of the shifted
    /// canonical function.
    pub fn find_critical_points(&self, shift: &Mobius, opts: &CriticalSearchOptions) -> CriticalPointReport {
        let radius = self.metric.domain_radius;
        let starts: Vec<Complex64> = (0..opts.starts)
            .map(|k| {
                if k == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let ring = if k % 2 == 0 { 0.4 } else { 0.8 };
                    Complex64::from_polar(ring * radius, 2.0 * PI * k as f64 / (opts.starts - 1) as f64)
                }
            })
            .collect();
        let runs: Vec<SearchRun> = starts.par_iter().map(|&s| self.newton_run(shift, s, opts)).collect();
        let mut points: Vec<Complex64> = Vec::new();
        let mut values = Vec::new();
        for r in runs.iter().filter(|r| r.converged) {
            if points.iter().all(|p| (p - r.end).norm() > 1e-6) {
                points.push(r.end);
                values.push(self.shifted_u(shift, r.end).unwrap_or(f64::NAN));
            }
        }
        CriticalPointReport { points, values, runs }
    }

    /// Fiber over `f̃(z)`: the set of inversion centers `q` for which the
    /// shifted canonical function is critical at `z`.
    pub fn surface_fiber(&self, z: Complex64) -> Result<CircleFiber> {
        Ok(build_fiber(&self.frame(&Mobius::Identity, z)?, 1e-10))
    }

    /// Fiber over `M(f̃(z))` of the bundle of the shifted lift `M∘f̃`.
    pub fn shifted_surface_fiber(&self, shift: &Mobius, z: Complex64) -> Result<CircleFiber> {
        Ok(build_fiber(&self.frame(shift, z)?, 1e-10))
    }

    /// Fiber diameter `e^σ/|∇log u|` at the grid points against the bound by
    /// `1/(a u)`, and its decay toward the boundary.
    pub fn radius_bound_check(&self, grid: &Grid, opts: &CriticalSearchOptions) -> Result<RadiusBound> {
        let crit = self.find_critical_points(&Mobius::Identity, opts);
        let zc = crit
            .unique()
            .ok_or_else(|| Error::InvalidInput("canonical function has no unique critical point; bound inapplicable".into()))?;
        let radius = self.metric.domain_radius;
        let excl = 0.1 * radius;
        let data: Vec<(Complex64, f64, f64, f64)> = grid
            .points()
            .par_iter()
            .filter(|z| (*z - zc).norm() > excl)
            .filter_map(|&z| {
                let (lj, j) = self.base_log_jet(z).ok()?;
                let rho = self.metric.jets(z).ok()?.rho;
                let u = lj.value.exp();
                let e_sigma = sigma_from_jets(&j).sigma.exp();
                let gn = lj.grad_norm();
                // e^{−ρ}|∇u|, u, diameter
                Some((z, (-rho).exp() * u * gn, u, e_sigma / gn))
            })
            .collect();
        if data.is_empty() {
            return Err(Error::InvalidInput("no grid points away from the critical point".into()));
        }
        let a = data.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
        let max_scaled = data.iter().map(|d| d.3 * d.2 * a).fold(0.0, f64::max);
        let outer = data.iter().filter(|d| d.0.norm() > 0.99 * radius).map(|d| d.3).fold(f64::NEG_INFINITY, f64::max);
        let inner = data.iter().filter(|d| d.0.norm() < 0.5 * radius).map(|d| d.3).fold(f64::INFINITY, f64::min);
        Ok(RadiusBound {
            critical_point: zc,
            a,
            max_scaled,
            bound_holds: max_scaled <= 1.0 + 1e-3,
            max_r_outer: outer,
            min_r_inner: inner,
            shrinks_at_boundary: outer.is_finite() && inner.is_finite() && outer < inner,
        })
    }

    /// Counts critical points for random inversions and affine shifts.
    pub fn ucp_probe(&self, n_shifts: usize, seed: u64, box_half: f64, opts: &CriticalSearchOptions) -> UcpProbe {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shifts: Vec<Mobius> = (0..n_shifts)
            .map(|k| {
                if k % 4 == 3 {
                    random_affine(&mut rng)
                } else {
                    let c = Vec3::new(
                        rng.gen_range(-box_half..box_half),
                        rng.gen_range(-box_half..box_half),
                        rng.gen_range(-box_half..box_half),
                    );
                    Mobius::Inversion { center: c }
                }
            })
            .collect();
        let counts: Vec<usize> = shifts.iter().map(|m| self.find_critical_points(m, opts).points.len()).collect();
        let max = counts.iter().copied().max().unwrap_or(0);
        UcpProbe { shifts: n_shifts, max_critical_points: max, counts, holds: max <= 1 }
    }

    /// Random points of space, each located on a fiber through the critical
    /// point of the canonical function shifted by inversion at that point.
    pub fn coverage_probe(&self, n: usize, seed: u64, box_half: f64, opts: &CriticalSearchOptions) -> CoverageProbe {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec3> = (0..n)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-box_half..box_half),
                    rng.gen_range(-box_half..box_half),
                    rng.gen_range(-box_half..box_half),
                )
            })
            .collect();
        let res: Vec<(Vec3, Option<f64>)> = pts
            .par_iter()
            .map(|p| {
                let rep = self.find_critical_points(&Mobius::Inversion { center: *p }, opts);
                let d = rep.unique().and_then(|z| self.surface_fiber(z).ok()).map(|f| f.distance_to(p));
                (*p, d)
            })
            .collect();
        let mut located = 0;
        let mut max_distance: f64 = 0.0;
        let mut failures = Vec::new();
        for (p, d) in res {
            match d {
                Some(d) if d < 1e-6 * (1.0 + p.norm()) => {
                    located += 1;
                    max_distance = max_distance.max(d);
                }
                _ => failures.push(p),
            }
        }
        CoverageProbe { samples: n, located, max_distance, failures }
    }

    /// Minimal distance between surface fibers over random base pairs.
    pub fn disjointness_probe(&self, n_pairs: usize, seed: u64, radius: f64) -> Result<DisjointnessProbe> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random_z = |rng: &mut ChaCha8Rng| Complex64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI));
        let pairs: Vec<(Complex64, Complex64)> = (0..n_pairs).map(|_| (random_z(&mut rng), random_z(&mut rng))).collect();
        let ds: Vec<f64> = pairs
            .par_iter()
            .map(|&(a, b)| Ok(fiber_distance(&self.surface_fiber(a)?, &self.surface_fiber(b)?)))
            .collect::<Result<_>>()?;
        Ok(DisjointnessProbe { pairs: n_pairs, min_distance: ds.into_iter().fold(f64::INFINITY, f64::min) })
    }
}

fn random_affine(rng: &mut ChaCha8Rng) -> Mobius {
    let axis = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let rot = nalgebra::Rotation3::new(axis.normalize() * rng.gen_range(0.0..PI));
    Mobius::Affine {
        rotation: Matrix3::from(rot),
        scale: rng.gen_range(0.5..2.0),
        shift: Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
    }
}

/// `|U″ + ½(Sτ)U|` with `τ′ = U^{−2}` and `Sτ` from finite differences of the
/// samples.
fn ode_cross_check(samples: &[ConvexitySample]) -> Option<f64> {
    if samples.len() < 7 {
        return None;
    }
    let h = samples[1].s - samples[0].s;
    if samples.windows(2).any(|w| ((w[1].s - w[0].s) - h).abs() > 1e-9 * h.max(1.0)) {
        return None;
    }
    let tp: Vec<f64> = samples.iter().map(|s| s.u.powi(-2)).collect();
    let mut worst: f64 = 0.0;
    for i in 2..tp.len() - 2 {
        let d1 = (tp[i - 2] - 8.0 * tp[i - 1] + 8.0 * tp[i + 1] - tp[i + 2]) / (12.0 * h);
        let d2 = (-tp[i - 2] + 16.0 * tp[i - 1] - 30.0 * tp[i] + 16.0 * tp[i + 1] - tp[i + 2]) / (12.0 * h * h);
        let st = schwarzian_real(tp[i], d1, d2).ok()?;
        worst = worst.max((samples[i].u_ss + 0.5 * st * samples[i].u).abs());
    }
    Some(worst)
}

/// Distance between two fibers: sampled search refined on a shrinking grid.
pub fn fiber_distance(a: &CircleFiber, b: &CircleFiber) -> f64 {
    // lines are parametrized through a half-angle so both ranges are (−π, π)
    let pt = |f: &CircleFiber, t: f64| {
        if f.is_line {
            f.point((t / 2.0).tan())
        } else {
            f.point(t)
        }
    };
    let n = 128;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..n {
        let s = -PI + 2.0 * PI * (i as f64 + 0.5) / n as f64;
        let pa = pt(a, s);
        for j in 0..n {
            let t = -PI + 2.0 * PI * (j as f64 + 0.5) / n as f64;
            let d = (pa - pt(b, t)).norm();
            if d < best.0 {
                best = (d, s, t);
            }
        }
    }
    let mut step = 2.0 * PI / n as f64;
    for _ in 0..12 {
        let (_, s0, t0) = best;
        for i in -8..=8 {
            for j in -8..=8 {
                let s = (s0 + i as f64 * step / 8.0).clamp(-PI + 1e-9, PI - 1e-9);
                let t = (t0 + j as f64 * step / 8.0).clamp(-PI + 1e-9, PI - 1e-9);
                let d = (pt(a, s) - pt(b, t)).norm();
                if d < best.0 {
                    best = (d, s, t);
                }
            }
        }
        step /= 4.0;
    }
    best.0
}

/// Value of the spatial extension: finite, or the point at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ExtValue {
    Finite(Vec3),
    Infinity,
}

/// Spatial extension of a lift through matching fibers of the model bundle
/// and the surface bundle.
#[derive(Clone, Copy, Debug)]
pub struct ExtensionMap<'a> {
    pub canonical: CanonicalFunction<'a>,
}

impl<'a> ExtensionMap<'a> {
    pub fn new(canonical: CanonicalFunction<'a>) -> Self {
        Self { canonical }
    }

    /// Maps parameter `t` on the model fiber to the matching surface fiber.
    /// Circle to circle keeps the angle; a line meets a circle through
    /// `s = 2R tan(φ/2)`; line to line scales by the conformal factor.
    fn match_fiber(model: &CircleFiber, surf: &CircleFiber, t: f64, e_sigma: f64) -> ExtValue {
        match (model.is_line, surf.is_line) {
            (false, false) => ExtValue::Finite(surf.point(t)),
            (false, true) => {
                if (t.abs() - PI).abs() < 1e-15 {
                    ExtValue::Infinity
                } else {
                    ExtValue::Finite(surf.point(2.0 * model.radius * (t / 2.0).tan()))
                }
            }
            (true, false) => ExtValue::Finite(surf.point(2.0 * (t / (2.0 * surf.radius)).atan())),
            (true, true) => ExtValue::Finite(surf.point(t * e_sigma)),
        }
    }

    pub fn extend(&self, p: &Vec3) -> Result<ExtValue> {
        let zp = Complex64::new(p.x, p.y);
        if p.z == 0.0 && zp.norm() <= 1.0 {
            return Ok(ExtValue::Finite(self.canonical.map.lift(zp)?));
        }
        let (z, t) = base_of(p)?;
        let model = model_fiber(z)?;
        let surf = self.canonical.surface_fiber(z)?;
        let e_sigma = self.canonical.map.conformal_factor(z)?;
        Ok(Self::match_fiber(&model, &surf, t, e_sigma))
    }

    /// Image of the point at infinity, which lies on the model line.
    pub fn extend_infinity(&self) -> Result<ExtValue> {
        let z = Complex64::new(0.0, 0.0);
        let surf = self.canonical.surface_fiber(z)?;
        if surf.is_line {
            Ok(ExtValue::Infinity)
        } else {
            Ok(ExtValue::Finite(surf.point(PI)))
        }
    }
}

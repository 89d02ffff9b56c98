//! Conformal metrics `e^{2ρ}|dz|²` on a disk, their geodesics and diameters.
//!
//! Geodesics are integrated in metric arclength `s` as the first-order system
//! for `(z, ż)` with `z̈ = −2ρ_z ż²`, which keeps `|ż| e^ρ` constant.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::expr::{integrate_polyline, HoloExpr, DEFAULT_QUAD_TOL};
use crate::harmonic_map::{HarmonicMapData, PlaneJet2};
use crate::ode::{dopri5, Termination, Tolerances};

/// `ρ` and its Wirtinger derivatives at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RhoJets {
    pub rho: f64,
    pub rho_z: Complex64,
    pub rho_zz: Complex64,
    pub rho_zzbar: f64,
}

impl RhoJets {
    pub fn euclidean(&self) -> PlaneJet2 {
        PlaneJet2::from_wirtinger(self.rho_z, self.rho_zz, self.rho_zzbar)
    }

    /// `2(ρ_zz − ρ_z²)`.
    pub fn schwarzian(&self) -> Complex64 {
        2.0 * (self.rho_zz - self.rho_z * self.rho_z)
    }

    /// Gradient `(ρ_x, ρ_y)` as a complex number.
    pub fn gradient(&self) -> Complex64 {
        2.0 * self.rho_z.conj()
    }
}

/// Real-valued fields built from holomorphic data.
#[derive(Clone, Debug, PartialEq)]
pub enum RealField {
    /// `Re T`
    RealPart(HoloExpr),
    /// `log |T|`
    LogModulus(HoloExpr),
    /// the conformal factor exponent `σ` of a lift
    Sigma(Box<HarmonicMapData>),
}

impl RealField {
    pub fn jets(&self, z: Complex64) -> Result<RhoJets> {
        match self {
            RealField::RealPart(t) => {
                let j = t.eval_jet3(z)?;
                Ok(RhoJets { rho: j.d0.re, rho_z: 0.5 * j.d1, rho_zz: 0.5 * j.d2, rho_zzbar: 0.0 })
            }
            RealField::LogModulus(t) => {
                let j = t.eval_jet3(z)?;
                if j.d0.norm() == 0.0 {
                    return Err(Error::Singular { at: z, what: "log of zero modulus" });
                }
                let r = j.d1 / j.d0;
                Ok(RhoJets {
                    rho: j.d0.norm().ln(),
                    rho_z: 0.5 * r,
                    rho_zz: 0.5 * (j.d2 / j.d0 - r * r),
                    rho_zzbar: 0.0,
                })
            }
            RealField::Sigma(m) => {
                let s = m.sigma_jets(z)?;
                Ok(RhoJets { rho: s.sigma, rho_z: s.sigma_z, rho_zz: s.sigma_zz, rho_zzbar: s.sigma_zzbar })
            }
        }
    }
}

pub type CustomRho = Arc<dyn Fn(Complex64) -> Result<RhoJets> + Send + Sync>;

#[derive(Clone)]
pub enum MetricKind {
    /// `ρ = −t log(1 − |z|²)`
    Power { t: f64 },
    /// `ρ = τ − log(1 − |z|²)`
    Epstein { tau: RealField },
    /// `ρ = σ`, the metric induced by the lift
    Pullback { map: Box<HarmonicMapData> },
    Custom { name: String, rho: CustomRho },
}

impl fmt::Debug for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::Power { t } => write!(f, "Power {{ t: {t} }}"),
            MetricKind::Epstein { tau } => write!(f, "Epstein {{ tau: {tau:?} }}"),
            MetricKind::Pullback { map } => write!(f, "Pullback {{ map: {map:?} }}"),
            MetricKind::Custom { name, .. } => write!(f, "Custom {{ name: {name:?} }}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConformalMetric {
    pub kind: MetricKind,
    /// Diameter supplied by the caller; wins over any computed value.
    pub delta_override: Option<f64>,
    /// Radius of the disk the metric lives on.
    pub domain_radius: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct GeodesicOptions {
    /// Sample spacing in arclength; `None` records every accepted step.
    pub ds: Option<f64>,
    /// Integration stops once `|z| ≥ R(1 − boundary_eps)`.
    pub boundary_eps: f64,
    pub tol: Tolerances,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self { ds: None, boundary_eps: 1e-6, tol: Tolerances::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeodesicSample {
    pub s: f64,
    pub z: Complex64,
    pub zdot: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum GeodesicEnd {
    /// Integrated up to the requested length.
    Reached,
    /// Stopped at the boundary cutoff; the recorded length is finite.
    Boundary,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicPath {
    pub samples: Vec<GeodesicSample>,
    pub length: f64,
    pub end: GeodesicEnd,
}

impl GeodesicPath {
    pub fn start(&self) -> Complex64 {
        self.samples[0].z
    }

    pub fn end_point(&self) -> Complex64 {
        self.samples.last().unwrap().z
    }
}

/// Closed-form diameter of the disk for `ρ = −t log(1−|z|²)`, infinite for
/// `t ≥ 1`.
pub fn diameter_power(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("power exponent must be non-negative, got {t}")));
    }
    if t >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(std::f64::consts::PI.sqrt() * (ln_gamma(1.0 - t) - ln_gamma(1.5 - t)).exp())
}

impl ConformalMetric {
    pub fn new(kind: MetricKind) -> Self {
        Self { kind, delta_override: None, domain_radius: 1.0 }
    }

    pub fn power(t: f64) -> Self {
        Self::new(MetricKind::Power { t })
    }

    pub fn pullback(map: &HarmonicMapData) -> Self {
        Self::new(MetricKind::Pullback { map: Box::new(map.clone()) })
    }

    pub fn epstein(tau: RealField) -> Self {
        Self::new(MetricKind::Epstein { tau })
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta_override = Some(delta);
        self
    }

    pub fn with_domain_radius(mut self, r: f64) -> Self {
        self.domain_radius = r;
        self
    }

    pub fn name(&self) -> String {
        match &self.kind {
            MetricKind::Power { t } => format!("power(t={t})"),
            MetricKind::Epstein { .. } => "epstein".into(),
            MetricKind::Pullback { .. } => "pullback".into(),
            MetricKind::Custom { name, .. } => format!("custom({name})"),
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.norm() < self.domain_radius
    }

    pub fn jets(&self, z: Complex64) -> Result<RhoJets> {
        if !self.contains(z) {
            return Err(Error::OutOfDomain(z));
        }
        match &self.kind {
            MetricKind::Power { t } => Ok(power_jets(*t, z)),
            MetricKind::Epstein { tau } => {
                let a = tau.jets(z)?;
                let b = power_jets(1.0, z);
                Ok(RhoJets {
                    rho: a.rho + b.rho,
                    rho_z: a.rho_z + b.rho_z,
                    rho_zz: a.rho_zz + b.rho_zz,
                    rho_zzbar: a.rho_zzbar + b.rho_zzbar,
                })
            }
            MetricKind::Pullback { map } => RealField::Sigma(map.clone()).jets(z),
            MetricKind::Custom { rho, .. } => rho(z),
        }
    }

    /// Diameter: the override if present, the closed form for the power
    /// family, `None` when it has to be estimated.
    pub fn delta(&self) -> Option<f64> {
        if let Some(d) = self.delta_override {
            return Some(d);
        }
        match &self.kind {
            MetricKind::Power { t } => diameter_power(*t).ok(),
            _ => None,
        }
    }

    /// Completeness where it is known from the metric family.
    pub fn is_complete(&self) -> Option<bool> {
        match &self.kind {
            MetricKind::Power { t } => Some(*t >= 1.0),
            _ => self.delta_override.map(|d| d.is_infinite()),
        }
    }

    /// `z̈` and `z⃛` along a geodesic through `z` with velocity `zdot`.
    pub fn geodesic_derivatives(&self, z: Complex64, zdot: Complex64) -> Result<(Complex64, Complex64)> {
        let r = self.jets(z)?;
        let zdd = -2.0 * r.rho_z * zdot * zdot;
        let zddd = -2.0 * (r.rho_zz * zdot + r.rho_zzbar * zdot.conj()) * zdot * zdot - 4.0 * r.rho_z * zdot * zdd;
        Ok((zdd, zddd))
    }

    /// Euclidean curvature of a curve with the given velocity and acceleration.
    pub fn euclidean_curvature(zdot: Complex64, zdd: Complex64) -> f64 {
        (zdot.conj() * zdd).im / zdot.norm().powi(3)
    }

    fn rhs(&self, cutoff: f64) -> impl Fn(f64, &[f64; 4]) -> Option<[f64; 4]> + '_ {
        move |_, y| {
            let z = Complex64::new(y[0], y[1]);
            if z.norm() >= cutoff {
                return None;
            }
            let v = Complex64::new(y[2], y[3]);
            let r = self.jets(z).ok()?;
            let a = -2.0 * r.rho_z * v * v;
            Some([y[2], y[3], a.re, a.im])
        }
    }

    /// Unit-speed geodesic from `z0` leaving in direction `theta`.
    pub fn geodesic_ivp(&self, z0: Complex64, theta: f64, s_max: f64, opts: &GeodesicOptions) -> Result<GeodesicPath> {
        let r0 = self.jets(z0)?;
        let v0 = Complex64::from_polar((-r0.rho).exp(), theta);
        self.integrate_geodesic(z0, v0, s_max, opts)
    }

    fn integrate_geodesic(&self, z0: Complex64, v0: Complex64, s_max: f64, opts: &GeodesicOptions) -> Result<GeodesicPath> {
        if !(s_max > 0.0) {
            return Err(Error::InvalidInput(format!("geodesic length must be positive, got {s_max}")));
        }
        let cutoff = self.domain_radius * (1.0 - opts.boundary_eps);
        let outputs: Vec<f64> = match opts.ds {
            Some(ds) if ds > 0.0 => {
                let n = (s_max / ds).floor() as usize;
                (1..=n).map(|k| k as f64 * ds).collect()
            }
            _ => Vec::new(),
        };
        let tr = dopri5(self.rhs(cutoff), 0.0, [z0.re, z0.im, v0.re, v0.im], s_max, &outputs, &opts.tol, |_, _| true)?;
        let samples: Vec<GeodesicSample> = tr
            .t
            .iter()
            .zip(&tr.y)
            .map(|(&s, y)| GeodesicSample { s, z: Complex64::new(y[0], y[1]), zdot: Complex64::new(y[2], y[3]) })
            .collect();
        let (length, end) = match tr.termination {
            Termination::StepCollapse { t } => (t, GeodesicEnd::Boundary),
            _ => (tr.last().0, GeodesicEnd::Reached),
        };
        Ok(GeodesicPath { samples, length, end })
    }

    /// Metric length of the straight segment `a → b`.
    pub fn segment_length(&self, a: Complex64, b: Complex64) -> Result<f64> {
        let [l] = integrate_polyline(&[a, b], DEFAULT_QUAD_TOL, |z| {
            let r = self.jets(z).map_err(|_| crate::expr::ExprError::NonFinite)?;
            Ok([Complex64::new(r.rho.exp(), 0.0)])
        })?;
        // ∫ e^ρ dz along the segment, rotated onto its direction
        Ok((l * (b - a).conj()).re / (b - a).norm())
    }

    fn shoot(&self, z1: Complex64, theta: f64, len: f64) -> Option<(Complex64, Complex64)> {
        let opts = GeodesicOptions { ds: None, boundary_eps: 1e-9, tol: Tolerances { atol: 1e-13, rtol: 1e-12, ..Default::default() } };
        let p = self.geodesic_ivp(z1, theta, len, &opts).ok()?;
        if p.end != GeodesicEnd::Reached {
            return None;
        }
        let last = p.samples.last()?;
        Some((last.z, last.zdot))
    }

    /// Geodesic joining `z1` and `z2`, found by Newton iteration on the
    /// initial angle and the length.
    pub fn geodesic_bvp(&self, z1: Complex64, z2: Complex64, opts: &GeodesicOptions) -> Result<GeodesicPath> {
        if z1 == z2 {
            return Err(Error::InvalidInput("geodesic endpoints coincide".into()));
        }
        self.jets(z1)?;
        self.jets(z2)?;
        let mut theta = (z2 - z1).arg();
        let mut len = self.segment_length(z1, z2)?;
        let scale = (z2 - z1).norm();
        let mut converged = false;
        for _ in 0..60 {
            let mut first = self.shoot(z1, theta, len);
            let mut shrink = 0;
            while first.is_none() && shrink < 40 {
                len *= 0.5;
                shrink += 1;
                first = self.shoot(z1, theta, len);
            }
            let (end, v) = first.ok_or_else(|| Error::NoConvergence("shooting trajectory left the domain".into()))?;
            let res = end - z2;
            if res.norm() <= 1e-12 * scale.max(1.0) {
                converged = true;
                break;
            }
            let h = 1e-6;
            let (ep, _) = self.shoot(z1, theta + h, len).ok_or_else(|| Error::NoConvergence("shooting failed".into()))?;
            let (em, _) = self.shoot(z1, theta - h, len).ok_or_else(|| Error::NoConvergence("shooting failed".into()))?;
            let dth = (ep - em) / (2.0 * h);
            // solve [dth v] [dθ dL]^T = -res in real 2x2 form
            let det = dth.re * v.im - dth.im * v.re;
            if det.abs() < 1e-300 {
                return Err(Error::NoConvergence("singular shooting Jacobian".into()));
            }
            let d_theta = (-res.re * v.im + res.im * v.re) / det;
            let d_len = (-dth.re * res.im + dth.im * res.re) / det;
            let mut lambda = 1.0;
            loop {
                let nt = theta + lambda * d_theta;
                let nl = len + lambda * d_len;
                if nl > 0.0 {
                    if let Some((e2, _)) = self.shoot(z1, nt, nl) {
                        if (e2 - z2).norm() < res.norm() || lambda < 1e-3 {
                            theta = nt;
                            len = nl;
                            break;
                        }
                    }
                }
                lambda *= 0.5;
                if lambda < 1e-6 {
                    return Err(Error::NoConvergence("shooting line search stalled".into()));
                }
            }
        }
        if !converged {
            return Err(Error::NoConvergence(format!("geodesic from {z1} to {z2} not found")));
        }
        let fine = GeodesicOptions { boundary_eps: 1e-9, ..*opts };
        let mut path = self.integrate_geodesic(z1, Complex64::from_polar((-self.jets(z1)?.rho).exp(), theta), len, &fine)?;
        path.length = len;
        Ok(path)
    }

    pub fn distance(&self, z1: Complex64, z2: Complex64) -> Result<f64> {
        if z1 == z2 {
            return Ok(0.0);
        }
        Ok(self.geodesic_bvp(z1, z2, &GeodesicOptions::default())?.length)
    }

    /// Largest pairwise distance among `n` points on the circle of the given
    /// radius. This is a lower bound for the diameter.
    pub fn diameter_estimate(&self, n: usize, radius: f64) -> DiameterEstimate {
        let pts: Vec<Complex64> =
            (0..n).map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64)).collect();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let dists: Vec<Option<f64>> = pairs.par_iter().map(|&(i, j)| self.distance(pts[i], pts[j]).ok()).collect();
        let failures = dists.iter().filter(|d| d.is_none()).count();
        let lower_bound = dists.iter().flatten().copied().fold(0.0, f64::max);
        DiameterEstimate { lower_bound, radius, samples: n, failures }
    }

    /// Traces maximal geodesics from `z0` in `n_dirs` directions and reports
    /// on their limit points and lengths.
    pub fn ulp_probe(&self, z0: Complex64, n_dirs: usize, s_max: f64) -> Result<UlpReport> {
        let opts = GeodesicOptions::default();
        let rays: Vec<Result<GeodesicPath>> = (0..n_dirs)
            .into_par_iter()
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n_dirs as f64;
                self.geodesic_ivp(z0, th, s_max, &opts)
            })
            .collect();
        let mut limits = Vec::with_capacity(n_dirs);
        let mut lengths = Vec::with_capacity(n_dirs);
        let mut reached = 0;
        for r in rays {
            let p = r?;
            let end = p.end_point();
            limits.push(end / end.norm() * self.domain_radius);
            if p.end == GeodesicEnd::Boundary {
                reached += 1;
            }
            lengths.push(p.length);
        }
        let complete = match self.is_complete() {
            Some(c) => c,
            None => self.looks_complete(z0)?,
        };
        let max_jump = |v: &[Complex64]| {
            (0..v.len()).map(|k| (v[(k + 1) % v.len()] - v[k]).norm()).fold(0.0, f64::max)
        };
        let mut args: Vec<f64> = limits.iter().map(|z| z.arg()).collect();
        args.sort_by(f64::total_cmp);
        let mut gap: f64 = 0.0;
        for k in 0..args.len() {
            let next = if k + 1 < args.len() { args[k + 1] } else { args[0] + 2.0 * std::f64::consts::PI };
            gap = gap.max(next - args[k]);
        }
        let length_jump = if complete {
            None
        } else {
            Some((0..lengths.len()).map(|k| (lengths[(k + 1) % lengths.len()] - lengths[k]).abs()).fold(0.0, f64::max))
        };
        Ok(UlpReport {
            n_dirs,
            limit_points: limits.clone(),
            lengths: if complete { vec![f64::INFINITY; n_dirs] } else { lengths },
            all_reached_boundary: reached == n_dirs,
            max_limit_jump: max_jump(&limits),
            largest_uncovered_arc: gap,
            max_length_jump: length_jump,
            complete,
        })
    }

    /// Decides completeness from the growth of `e^ρ` along a ray towards the
    /// boundary: lengths diverge when `e^ρ ≳ (R − r)^{−1}`.
    fn looks_complete(&self, z0: Complex64) -> Result<bool> {
        let dir = if z0.norm() > 0.0 { z0 / z0.norm() } else { Complex64::new(1.0, 0.0) };
        let r = self.domain_radius;
        let d1 = 1e-4 * r;
        let d2 = 1e-6 * r;
        let a = self.jets(dir * (r - d1))?.rho;
        let b = self.jets(dir * (r - d2))?.rho;
        let slope = (b - a) / (d1 / d2).ln();
        Ok(slope >= 0.95)
    }
}

fn power_jets(t: f64, z: Complex64) -> RhoJets {
    let d = 1.0 - z.norm_sqr();
    let zb = z.conj();
    RhoJets {
        rho: -t * d.ln(),
        rho_z: t * zb / d,
        rho_zz: t * zb * zb / (d * d),
        rho_zzbar: t / (d * d),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiameterEstimate {
    pub lower_bound: f64,
    pub radius: f64,
    pub samples: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct UlpReport {
    pub n_dirs: usize,
    pub limit_points: Vec<Complex64>,
    /// Infinite for complete metrics.
    pub lengths: Vec<f64>,
    pub all_reached_boundary: bool,
    /// Largest distance between limit points of adjacent directions.
    pub max_limit_jump: f64,
    /// Largest arc of the boundary circle containing no limit point.
    pub largest_uncovered_arc: f64,
    /// Largest length difference between adjacent directions.
    pub max_length_jump: Option<f64>,
    pub complete: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diameter_closed_forms() {
        assert_relative_eq!(diameter_power(0.0).unwrap(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(diameter_power(0.5).unwrap(), std::f64::consts::PI, epsilon = 1e-14);
        assert!(diameter_power(1.0).unwrap().is_infinite());
        assert!(diameter_power(-0.1).is_err());
    }

    #[test]
    fn segment_lengths() {
        let a = c(0.2, 0.3);
        let b = c(-0.4, -0.1);
        assert_relative_eq!(ConformalMetric::power(0.0).segment_length(a, b).unwrap(), (b - a).norm(), epsilon = 1e-12);
        let r = c(-0.3, 0.4);
        assert_relative_eq!(ConformalMetric::power(1.0).segment_length(c(0.0, 0.0), r).unwrap(), 0.5f64.atanh(), epsilon = 1e-10);
    }

    #[test]
    fn flat_geodesic_is_a_ray() {
        let m = ConformalMetric::power(0.0);
        let p = m.geodesic_ivp(c(0.1, 0.0), 1.0, 0.5, &GeodesicOptions::default()).unwrap();
        let want = c(0.1, 0.0) + Complex64::from_polar(0.5, 1.0);
        assert!((p.end_point() - want).norm() < 1e-12);
    }

    #[test]
    fn poincare_radial_geodesic() {
        let m = ConformalMetric::power(1.0);
        let opts = GeodesicOptions { ds: Some(0.25), ..Default::default() };
        let p = m.geodesic_ivp(c(0.0, 0.0), 0.0, 2.0, &opts).unwrap();
        for s in &p.samples {
            assert!((s.z.re - s.s.tanh()).abs() < 1e-9);
            assert!(s.z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn bvp_on_real_axis() {
        let m = ConformalMetric::power(1.0);
        let p = m.geodesic_bvp(c(-0.4, 0.0), c(0.4, 0.0), &GeodesicOptions::default()).unwrap();
        assert_relative_eq!(p.length, 2.0 * 0.4f64.atanh(), epsilon = 1e-9);
        assert!((p.end_point() - c(0.4, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn euclidean_bvp_length() {
        let m = ConformalMetric::power(0.0);
        let d = m.distance(c(-0.3, 0.2), c(0.5, -0.1)).unwrap();
        assert_relative_eq!(d, (c(0.8, -0.3)).norm(), epsilon = 1e-10);
    }

    #[test]
    fn flat_ulp_probe() {
        let m = ConformalMetric::power(0.0);
        let r = m.ulp_probe(c(0.0, 0.0), 16, 10.0).unwrap();
        assert!(r.all_reached_boundary);
        for (k, z) in r.limit_points.iter().enumerate() {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
            assert!((z - Complex64::from_polar(1.0, th)).norm() < 1e-9);
        }
        assert!(!r.complete);
    }

    #[test]
    fn completeness_heuristic() {
        let tau = RealField::RealPart("0".parse().unwrap());
        assert!(ConformalMetric::epstein(tau).looks_complete(c(0.0, 0.0)).unwrap());
        let m = ConformalMetric::new(MetricKind::Custom {
            name: "half".into(),
            rho: Arc::new(|z| Ok(power_jets(0.5, z))),
        });
        assert!(!m.looks_complete(c(0.0, 0.0)).unwrap());
    }
}

//! Pointwise injectivity criteria for lifts, the bound along geodesics and
//! equality diagnostics.
//!
//! Every criterion is written `LHS ≤ RHS`; reports carry the margin
//! `RHS − LHS` at each grid point.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::conformal_metric::{ConformalMetric, GeodesicPath, RealField, RhoJets};
use crate::error::{Error, Result};
use crate::harmonic_map::{curvature_from_jets, partials_from_jets, sigma_from_jets, HarmonicMapData, Vec3};
use crate::schwarzian_ops::{ahlfors_s1, CurveJet};

const PI: f64 = std::f64::consts::PI;

/// Sample points in the disk.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Grid {
    /// The center plus `nr` rings of `ntheta` points, the outermost at
    /// `radius − boundary_offset`.
    Polar { nr: usize, ntheta: usize, radius: f64, boundary_offset: f64 },
    Points(Vec<Complex64>),
}

impl Default for Grid {
    fn default() -> Self {
        Grid::Polar { nr: 64, ntheta: 256, radius: 1.0, boundary_offset: 1e-3 }
    }
}

impl Grid {
    pub fn polar(nr: usize, ntheta: usize) -> Self {
        Grid::Polar { nr, ntheta, radius: 1.0, boundary_offset: 1e-3 }
    }

    pub fn points(&self) -> Vec<Complex64> {
        match self {
            Grid::Points(p) => p.clone(),
            Grid::Polar { nr, ntheta, radius, boundary_offset } => {
                let mut out = Vec::with_capacity(1 + nr * ntheta);
                out.push(Complex64::new(0.0, 0.0));
                let rmax = radius - boundary_offset;
                for i in 1..=*nr {
                    let r = rmax * i as f64 / *nr as f64;
                    for j in 0..*ntheta {
                        out.push(Complex64::from_polar(r, 2.0 * PI * j as f64 / *ntheta as f64));
                    }
                }
                out
            }
        }
    }

    /// Largest distance between neighbouring grid points.
    pub fn spacing(&self) -> f64 {
        match self {
            Grid::Polar { nr, ntheta, radius, boundary_offset } => {
                let rmax = radius - boundary_offset;
                (rmax / *nr as f64).max(2.0 * PI * rmax / *ntheta as f64)
            }
            Grid::Points(p) => {
                // nearest-neighbour distance, maximised over points
                let mut worst: f64 = 0.0;
                for (i, a) in p.iter().enumerate() {
                    let near = p
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, b)| (a - b).norm())
                        .fold(f64::INFINITY, f64::min);
                    if near.is_finite() {
                        worst = worst.max(near);
                    }
                }
                worst
            }
        }
    }
}

/// The criterion family.
#[derive(Clone, Debug)]
pub enum Variant {
    /// General conformal metric with diameter `δ`.
    Main,
    /// Complete metric; `printed` selects RHS `−½ρ_zz̄` instead of `2ρ_zz̄`.
    Complete { printed: bool },
    /// `ρ = −t log(1−|z|²)`.
    Power { t: f64 },
    /// `|𝒮f| + e^{2σ}|K| ≤ π²/2`
    Pi2,
    /// `|𝒮f| + e^{2σ}|K| ≤ 2/(1−|z|²)²`
    Nehari,
    /// `|𝒮f + 4z̄²/(1−|z|²)²| + e^{2σ}|K| ≤ 4/(1−|z|²)²`
    T2,
    /// `|𝒮f| + e^{2σ}|K| ≤ 4/(1−|z|²)`
    Porky,
    /// `|𝒮f − 2c(1−c)z̄²/(1−|z|²)²| + e^{2σ}|K| ≤ 2|c|/(1−|z|²)²`
    Ahlfors { c: Complex64 },
    /// `ρ = τ − log(1−|z|²)` with `|τ_z| ≤ c/(1−|z|²)`, `c < 1`.
    Epstein { tau: RealField },
    /// `τ = σ`; `printed` selects `|zσ_z|` in place of `2|zσ_z|`.
    Becker { printed: bool },
    /// `|K| ≤ 4π²/δ²` with `δ` the intrinsic diameter of the surface.
    Intrinsic { delta: f64 },
}

impl Variant {
    pub fn name(&self) -> String {
        match self {
            Variant::Main => "main".into(),
            Variant::Complete { printed: false } => "complete".into(),
            Variant::Complete { printed: true } => "complete-printed".into(),
            Variant::Power { t } => format!("power:{t}"),
            Variant::Pi2 => "pi2".into(),
            Variant::Nehari => "nehari".into(),
            Variant::T2 => "t2".into(),
            Variant::Porky => "porky".into(),
            Variant::Ahlfors { c } => {
                if c.im == 0.0 {
                    format!("ahlfors:{}", c.re)
                } else {
                    format!("ahlfors:{}{:+}i", c.re, c.im)
                }
            }
            Variant::Epstein { .. } => "epstein".into(),
            Variant::Becker { printed: false } => "becker".into(),
            Variant::Becker { printed: true } => "becker-printed".into(),
            Variant::Intrinsic { delta } => format!("intrinsic:{delta}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointMargin {
    pub z: Complex64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkippedPoint {
    pub z: Complex64,
    pub reason: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    HoldsWithEqualityLocus,
    HypothesisFails,
}

/// Gradient hypothesis `|τ_z| ≤ c/(1−|z|²)`, `c < 1`, sampled on the grid.
#[derive(Clone, Debug, Serialize)]
pub struct GradientHypothesis {
    pub c_estimate: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub variant: String,
    pub points: Vec<PointMargin>,
    pub skipped: Vec<SkippedPoint>,
    pub min_margin: f64,
    pub verdict: Verdict,
    pub tol_eq: f64,
    pub equality_locus: Vec<Complex64>,
    pub hypothesis: Option<GradientHypothesis>,
    /// Diameter entering the right-hand side, if any.
    pub delta: Option<f64>,
}

impl CriterionReport {
    fn assemble(
        variant: String,
        results: Vec<(Complex64, Result<(f64, f64)>)>,
        tol_eq: f64,
        hypothesis: Option<GradientHypothesis>,
        delta: Option<f64>,
    ) -> Self {
        let mut points = Vec::new();
        let mut skipped = Vec::new();
        for (z, r) in results {
            match r {
                Ok((lhs, rhs)) if lhs.is_finite() && rhs.is_finite() => {
                    points.push(PointMargin { z, lhs, rhs, margin: rhs - lhs })
                }
                Ok(_) => skipped.push(SkippedPoint { z, reason: "non-finite value".into() }),
                Err(e) => skipped.push(SkippedPoint { z, reason: e.to_string() }),
            }
        }
        let min_margin = points.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min);
        let equality_locus: Vec<Complex64> =
            points.iter().filter(|p| p.margin.abs() < tol_eq).map(|p| p.z).collect();
        let verdict = if hypothesis.as_ref().is_some_and(|h| !h.holds) {
            Verdict::HypothesisFails
        } else if min_margin < -tol_eq {
            Verdict::Fails
        } else if !equality_locus.is_empty() {
            Verdict::HoldsWithEqualityLocus
        } else {
            Verdict::Holds
        };
        Self { variant, points, skipped, min_margin, verdict, tol_eq, equality_locus, hypothesis, delta }
    }

    pub fn holds(&self) -> bool {
        matches!(self.verdict, Verdict::Holds | Verdict::HoldsWithEqualityLocus)
    }
}

/// Pointwise data shared by all criteria.
#[derive(Clone, Copy, Debug)]
pub struct LiftPoint {
    pub schwarzian: Complex64,
    /// `e^{2σ}|K|`
    pub curvature_term: f64,
    pub abs_k: f64,
    pub sigma_z: Complex64,
    pub sigma: f64,
}

pub fn lift_point(m: &HarmonicMapData, z: Complex64) -> Result<LiftPoint> {
    let j = m.jets(z)?;
    if j.hp.d0.norm() == 0.0 {
        return Err(Error::Singular { at: z, what: "h′ vanishes" });
    }
    let s = sigma_from_jets(&j);
    let k = curvature_from_jets(&j).abs();
    Ok(LiftPoint {
        schwarzian: 2.0 * (s.sigma_zz - s.sigma_z * s.sigma_z),
        curvature_term: (2.0 * s.sigma).exp() * k,
        abs_k: k,
        sigma_z: s.sigma_z,
        sigma: s.sigma,
    })
}

/// Sides of the general criterion at a point given `ρ` data and `δ`.
pub fn main_sides(p: &LiftPoint, r: &RhoJets, delta: f64) -> (f64, f64) {
    let lhs = (p.schwarzian - r.schwarzian()).norm() + p.curvature_term;
    let diam = if delta.is_infinite() { 0.0 } else { 2.0 * PI * PI * (2.0 * r.rho).exp() / (delta * delta) };
    (lhs, diam + 2.0 * r.rho_zzbar)
}

/// `2π²/δ²` for the power family written with Gamma functions,
/// `2π (Γ(3/2−t)/Γ(1−t))²`.
fn power_diameter_coefficient(t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        2.0 * PI * (2.0 * (ln_gamma(1.5 - t) - ln_gamma(1.0 - t))).exp()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvalOptions {
    pub tol_eq: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { tol_eq: 1e-6 }
    }
}

fn sample_gradient_hypothesis(points: &[Complex64], f: impl Fn(Complex64) -> Result<Complex64> + Sync) -> GradientHypothesis {
    let c = points
        .par_iter()
        .filter_map(|&z| f(z).ok().map(|g| g.norm() * (1.0 - z.norm_sqr())))
        .reduce(|| 0.0, f64::max);
    GradientHypothesis { c_estimate: c, holds: c < 1.0 }
}

/// Evaluates the general criterion for `metric` with its diameter.
pub fn evaluate_main(m: &HarmonicMapData, metric: &ConformalMetric, grid: &Grid, opts: &EvalOptions) -> Result<CriterionReport> {
    let delta = metric.delta().ok_or_else(|| {
        Error::InvalidInput(format!("diameter of {} unknown; supply an override", metric.name()))
    })?;
    let pts = grid.points();
    let results: Vec<_> = pts
        .par_iter()
        .map(|&z| {
            let r = (|| {
                let p = lift_point(m, z)?;
                let rho = metric.jets(z)?;
                Ok(main_sides(&p, &rho, delta))
            })();
            (z, r)
        })
        .collect();
    Ok(CriterionReport::assemble("main".into(), results, opts.tol_eq, None, Some(delta)))
}

/// Evaluates one member of the criterion family. Variants that depend on a
/// metric (`Main`, `Complete`) take it from `metric`.
pub fn evaluate(
    variant: &Variant,
    m: &HarmonicMapData,
    metric: Option<&ConformalMetric>,
    grid: &Grid,
    opts: &EvalOptions,
) -> Result<CriterionReport> {
    if let Variant::Main = variant {
        let metric = metric.ok_or_else(|| Error::InvalidInput("main criterion needs a metric".into()))?;
        return evaluate_main(m, metric, grid, opts);
    }
    let pts = grid.points();
    let need_metric = || metric.ok_or_else(|| Error::InvalidInput(format!("{} needs a metric", variant.name())));
    let hypothesis = match variant {
        Variant::Epstein { tau } => Some(sample_gradient_hypothesis(&pts, |z| Ok(tau.jets(z)?.rho_z))),
        Variant::Becker { .. } => Some(sample_gradient_hypothesis(&pts, |z| Ok(m.sigma_jets(z)?.sigma_z))),
        _ => None,
    };
    if let Variant::Complete { .. } = variant {
        if need_metric()?.is_complete() == Some(false) {
            return Err(Error::InvalidInput("metric is not complete".into()));
        }
    }
    let delta = match variant {
        Variant::Power { t } => Some(crate::conformal_metric::diameter_power(*t)?),
        Variant::Pi2 => Some(2.0),
        Variant::Intrinsic { delta } => Some(*delta),
        _ => None,
    };
    let metric_ref = metric;
    let results: Vec<_> = pts
        .par_iter()
        .map(|&z| (z, point_sides(variant, m, metric_ref, z)))
        .collect();
    Ok(CriterionReport::assemble(variant.name(), results, opts.tol_eq, hypothesis, delta))
}

/// `(LHS, RHS)` of a variant at one point.
pub fn point_sides(variant: &Variant, m: &HarmonicMapData, metric: Option<&ConformalMetric>, z: Complex64) -> Result<(f64, f64)> {
    let p = lift_point(m, z)?;
    let d = 1.0 - z.norm_sqr();
    let in_disk = || if d > 0.0 { Ok(()) } else { Err(Error::OutOfDomain(z)) };
    let zb = z.conj();
    match variant {
        Variant::Main => {
            let metric = metric.ok_or_else(|| Error::InvalidInput("main criterion needs a metric".into()))?;
            let delta = metric.delta().ok_or_else(|| Error::InvalidInput("diameter unknown".into()))?;
            Ok(main_sides(&p, &metric.jets(z)?, delta))
        }
        Variant::Complete { printed } => {
            let metric = metric.ok_or_else(|| Error::InvalidInput("complete criterion needs a metric".into()))?;
            let r = metric.jets(z)?;
            let lhs = (p.schwarzian - r.schwarzian()).norm() + p.curvature_term;
            let rhs = if *printed { -0.5 * r.rho_zzbar } else { 2.0 * r.rho_zzbar };
            Ok((lhs, rhs))
        }
        Variant::Power { t } => {
            in_disk()?;
            let t = *t;
            let lhs = (p.schwarzian - 2.0 * t * (1.0 - t) * zb * zb / (d * d)).norm() + p.curvature_term;
            let rhs = 2.0 * t / (d * d) + power_diameter_coefficient(t) * d.powf(-2.0 * t);
            Ok((lhs, rhs))
        }
        Variant::Pi2 => Ok((p.schwarzian.norm() + p.curvature_term, PI * PI / 2.0)),
        Variant::Nehari => {
            in_disk()?;
            Ok((p.schwarzian.norm() + p.curvature_term, 2.0 / (d * d)))
        }
        Variant::T2 => {
            in_disk()?;
            Ok(((p.schwarzian + 4.0 * zb * zb / (d * d)).norm() + p.curvature_term, 4.0 / (d * d)))
        }
        Variant::Porky => {
            in_disk()?;
            Ok((p.schwarzian.norm() + p.curvature_term, 4.0 / d))
        }
        Variant::Ahlfors { c } => {
            in_disk()?;
            let c = *c;
            let real_ok = c.im == 0.0 && c.re >= 0.0;
            let disk_ok = (c - 1.0).norm() < 1.0 && p.abs_k == 0.0;
            if !(real_ok || disk_ok) {
                return Err(Error::InvalidInput(format!("parameter c = {c} not admissible at this point")));
            }
            let lhs = (p.schwarzian - 2.0 * c * (1.0 - c) * zb * zb / (d * d)).norm() + p.curvature_term;
            Ok((lhs, 2.0 * c.norm() / (d * d)))
        }
        Variant::Epstein { tau } => {
            in_disk()?;
            let t = tau.jets(z)?;
            let lhs = (p.schwarzian - 2.0 * (t.rho_zz - t.rho_z * t.rho_z) + 4.0 * zb * t.rho_z / d).norm()
                + p.curvature_term;
            Ok((lhs, 2.0 * (1.0 + d * d * t.rho_zzbar) / (d * d)))
        }
        Variant::Becker { printed } => {
            in_disk()?;
            let k = if *printed { 1.0 } else { 2.0 };
            Ok((k * (z * p.sigma_z).norm() + 0.25 * d * p.curvature_term, 1.0 / d))
        }
        Variant::Intrinsic { delta } => Ok((p.abs_k, 4.0 * PI * PI / (delta * delta))),
    }
}

/// Checks `|𝒮f + 4z̄²/(1−|z|²)²| ≤ |𝒮f| + 4|z|²/(1−|z|²)²` at the grid points,
/// the step by which `porky` implies `t2`. Returns the worst violation.
pub fn porky_implication_residual(m: &HarmonicMapData, grid: &Grid) -> f64 {
    grid.points()
        .par_iter()
        .filter_map(|&z| {
            let p = lift_point(m, z).ok()?;
            let d = 1.0 - z.norm_sqr();
            let zb = z.conj();
            let lhs = (p.schwarzian + 4.0 * zb * zb / (d * d)).norm();
            Some(lhs - (p.schwarzian.norm() + 4.0 * z.norm_sqr() / (d * d)))
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// `𝒮₁` of the lifted geodesic computed two ways at one sample.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct S1Sample {
    pub s: f64,
    pub via_formula: f64,
    pub direct: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicBound {
    pub samples: Vec<S1Sample>,
    pub max_s1: f64,
    pub bound: f64,
    pub max_discrepancy: f64,
    pub holds: bool,
}

/// Data at one point of a geodesic needed by both computations.
struct PathPoint {
    via_formula: f64,
    direct: f64,
    kappa_n: f64,
    abs_k: f64,
    lhs: f64,
    rhs: f64,
}

fn path_point(m: &HarmonicMapData, metric: &ConformalMetric, z: Complex64, zdot: Complex64, delta: f64) -> Result<PathPoint> {
    let j = m.jets(z)?;
    if j.hp.d0.norm() == 0.0 {
        return Err(Error::Singular { at: z, what: "h′ vanishes" });
    }
    let sj = sigma_from_jets(&j);
    let k = curvature_from_jets(&j).abs();
    let sf = 2.0 * (sj.sigma_zz - sj.sigma_z * sj.sigma_z);
    let e2s = (2.0 * sj.sigma).exp();
    let r = metric.jets(z)?;
    let e = r.euclidean();
    let (zdd, zddd) = metric.geodesic_derivatives(z, zdot)?;

    let that = zdot / zdot.norm();
    let (c, s) = (that.re, that.im);
    let parts = partials_from_jets(&j);
    let n = parts.d1[0].cross(&parts.d1[1]).normalize();
    let ii = |d2: &[Vec3; 3]| (d2[0].dot(&n) * c * c + 2.0 * d2[1].dot(&n) * c * s + d2[2].dot(&n) * s * s) / e2s;
    let kappa_n = ii(&parts.d2);
    let kappa = ConformalMetric::euclidean_curvature(zdot, zdd);

    // 𝒮₁ in Euclidean arclength, then reparametrized to metric arclength
    let s1_phi = (sf * that * that).re + 0.5 * e2s * (k + kappa_n * kappa_n) + 0.5 * kappa * kappa;
    let hess = e.psi_xx * c * c + 2.0 * e.psi_xy * c * s + e.psi_yy * s * s;
    let grad_t = e.psi_x * c + e.psi_y * s;
    let e2r = (2.0 * r.rho).exp();
    let s_t = (-hess + 0.5 * grad_t * grad_t - kappa * kappa) / e2r;
    let via_formula = s1_phi / e2r + s_t;

    // direct differentiation of s ↦ X(γ(s))
    let a = [zdot.re, zdot.im];
    let b = [zdd.re, zdd.im];
    let cc = [zddd.re, zddd.im];
    let d1 = parts.d1[0] * a[0] + parts.d1[1] * a[1];
    let quad = |v: &[f64; 2], w: &[f64; 2]| {
        parts.d2[0] * (v[0] * w[0]) + parts.d2[1] * (v[0] * w[1] + v[1] * w[0]) + parts.d2[2] * (v[1] * w[1])
    };
    let d2 = quad(&a, &a) + parts.d1[0] * b[0] + parts.d1[1] * b[1];
    let cubic = parts.d3[0] * a[0].powi(3)
        + parts.d3[1] * (3.0 * a[0] * a[0] * a[1])
        + parts.d3[2] * (3.0 * a[0] * a[1] * a[1])
        + parts.d3[3] * a[1].powi(3);
    let d3 = cubic + quad(&a, &b) * 3.0 + parts.d1[0] * cc[0] + parts.d1[1] * cc[1];
    let direct = ahlfors_s1(&CurveJet { d1, d2, d3 })?;

    let lp = LiftPoint { schwarzian: sf, curvature_term: e2s * k, abs_k: k, sigma_z: sj.sigma_z, sigma: sj.sigma };
    let (lhs, rhs) = main_sides(&lp, &r, delta);
    Ok(PathPoint { via_formula, direct, kappa_n, abs_k: k, lhs, rhs })
}

/// `𝒮₁` of `s ↦ f̃(γ(s))` along a unit-speed geodesic, compared with
/// `2π²/δ²`.
pub fn geodesic_restriction_check(m: &HarmonicMapData, metric: &ConformalMetric, path: &GeodesicPath) -> Result<GeodesicBound> {
    let delta = metric.delta().unwrap_or(f64::INFINITY);
    let bound = if delta.is_infinite() { 0.0 } else { 2.0 * PI * PI / (delta * delta) };
    let mut samples = Vec::with_capacity(path.samples.len());
    let mut max_s1 = f64::NEG_INFINITY;
    let mut disc: f64 = 0.0;
    for sm in &path.samples {
        let p = path_point(m, metric, sm.z, sm.zdot, delta)?;
        max_s1 = max_s1.max(p.direct);
        disc = disc.max((p.direct - p.via_formula).abs() / (1.0 + p.direct.abs()));
        samples.push(S1Sample { s: sm.s, via_formula: p.via_formula, direct: p.direct });
    }
    Ok(GeodesicBound { samples, max_s1, bound, max_discrepancy: disc, holds: max_s1 <= bound + 1e-9 })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtremalDiagnostics {
    /// Per-sample margin of the general criterion.
    pub equality_residuals: Vec<f64>,
    /// Per-sample `II(V,V)² − |K|`.
    pub curvature_residuals: Vec<f64>,
    /// RMS distance of the image curve to its best-fit circle.
    pub circle_rms: f64,
    pub length: f64,
    pub delta: f64,
    pub extremal: bool,
}

/// Best-fit circle in space: plane by least squares, then an algebraic
/// circle fit in that plane. Returns center, radius and RMS residual.
pub fn fit_circle(points: &[Vec3]) -> Result<(Vec3, f64, f64)> {
    use nalgebra::{DMatrix, DVector, Matrix3};
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidInput("need three points for a circle".into()));
    }
    let mean = points.iter().fold(Vec3::zeros(), |a, p| a + p) / n as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let mut idx = [0, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let e1: Vec3 = eig.eigenvectors.column(idx[0]).into();
    let e2: Vec3 = eig.eigenvectors.column(idx[1]).into();
    let mut a = DMatrix::zeros(n, 3);
    let mut rhs = DVector::zeros(n);
    for (i, p) in points.iter().enumerate() {
        let d = p - mean;
        let (x, y) = (d.dot(&e1), d.dot(&e2));
        a[(i, 0)] = x;
        a[(i, 1)] = y;
        a[(i, 2)] = 1.0;
        rhs[i] = x * x + y * y;
    }
    let sol = a
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::NoConvergence(format!("circle fit: {e}")))?;
    let (cx, cy) = (sol[0] / 2.0, sol[1] / 2.0);
    let r = (sol[2] + cx * cx + cy * cy).sqrt();
    let center = mean + e1 * cx + e2 * cy;
    let rms = (points.iter().map(|p| ((p - center).norm() - r).powi(2)).sum::<f64>() / n as f64).sqrt();
    Ok((center, r, rms))
}

/// Equality diagnostics along a candidate extremal geodesic.
pub fn extremal_diagnostics(m: &HarmonicMapData, metric: &ConformalMetric, path: &GeodesicPath, tol: f64) -> Result<ExtremalDiagnostics> {
    let delta = metric.delta().unwrap_or(f64::INFINITY);
    let mut eq = Vec::new();
    let mut cr = Vec::new();
    let mut pts = Vec::new();
    for sm in &path.samples {
        let p = path_point(m, metric, sm.z, sm.zdot, delta)?;
        eq.push(p.rhs - p.lhs);
        cr.push(p.kappa_n * p.kappa_n - p.abs_k);
        pts.push(m.lift(sm.z)?);
    }
    let (_, _, rms) = fit_circle(&pts)?;
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let extremal = max_abs(&eq) <= tol && max_abs(&cr) <= tol && rms <= tol && (path.length - delta).abs() <= tol * delta.max(1.0);
    Ok(ExtremalDiagnostics {
        equality_residuals: eq,
        curvature_residuals: cr,
        circle_rms: rms,
        length: path.length,
        delta,
        extremal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal_metric::GeodesicOptions;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn planar() -> HarmonicMapData {
        HarmonicMapData::new("1", "0").unwrap()
    }

    fn catenoid() -> HarmonicMapData {
        HarmonicMapData::new("exp(z)/2", "i*exp(-z)").unwrap().with_anchor(c(0.0, 0.0), c(1.0, 0.0))
    }

    #[test]
    fn planar_poincare_margin() {
        let g = Grid::Points(vec![c(0.0, 0.0), c(0.5, 0.1), c(-0.2, 0.7)]);
        let r = evaluate_main(&planar(), &ConformalMetric::power(1.0), &g, &EvalOptions::default()).unwrap();
        for p in &r.points {
            assert_relative_eq!(p.margin, 2.0 / (1.0 - p.z.norm_sqr()).powi(2), epsilon = 1e-12);
        }
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn catenoid_equality_at_waist() {
        let m = catenoid();
        let metric = ConformalMetric::pullback(&m).with_delta(2.0 * PI).with_domain_radius(10.0);
        let g = Grid::Points(vec![c(0.0, 0.0), c(0.0, 1.0)]);
        let r = evaluate_main(&m, &metric, &g, &EvalOptions::default()).unwrap();
        assert!(r.points[0].margin.abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::HoldsWithEqualityLocus);
    }

    #[test]
    fn exponential_fails() {
        let m = HarmonicMapData::new("4*exp(4*z)", "0").unwrap();
        let r = evaluate_main(&m, &ConformalMetric::power(1.0), &Grid::Points(vec![c(0.0, 0.0)]), &EvalOptions::default()).unwrap();
        assert_relative_eq!(r.points[0].lhs, 8.0, epsilon = 1e-12);
        assert_relative_eq!(r.points[0].rhs, 2.0, epsilon = 1e-12);
        assert_eq!(r.verdict, Verdict::Fails);
    }

    #[test]
    fn named_corollaries() {
        let strip = HarmonicMapData::new("2/(1-z^2)", "0").unwrap();
        let g = Grid::polar(8, 32);
        assert!(evaluate(&Variant::Nehari, &strip, None, &g, &EvalOptions::default()).unwrap().holds());
        let r = evaluate(&Variant::Pi2, &planar(), None, &g, &EvalOptions::default()).unwrap();
        assert!(r.points.iter().all(|p| p.lhs == 0.0 && p.rhs == PI * PI / 2.0));
    }

    #[test]
    fn power_family_matches_named_cases() {
        let m = HarmonicMapData::new("exp(z)", "0.3*z").unwrap();
        for z in [c(0.1, 0.2), c(-0.5, 0.3), c(0.0, -0.8)] {
            let eq = |a: (f64, f64), b: (f64, f64)| {
                assert_relative_eq!(a.0, b.0, max_relative = 1e-12);
                assert_relative_eq!(a.1, b.1, max_relative = 1e-12);
            };
            eq(point_sides(&Variant::Power { t: 0.0 }, &m, None, z).unwrap(), point_sides(&Variant::Pi2, &m, None, z).unwrap());
            eq(point_sides(&Variant::Power { t: 1.0 }, &m, None, z).unwrap(), point_sides(&Variant::Nehari, &m, None, z).unwrap());
            eq(point_sides(&Variant::Power { t: 2.0 }, &m, None, z).unwrap(), point_sides(&Variant::T2, &m, None, z).unwrap());
        }
    }

    #[test]
    fn planar_chord_has_zero_s1() {
        let metric = ConformalMetric::power(0.0);
        let path = metric.geodesic_bvp(c(-0.5, 0.1), c(0.4, -0.3), &GeodesicOptions { ds: Some(0.05), ..Default::default() }).unwrap();
        let b = geodesic_restriction_check(&planar(), &metric, &path).unwrap();
        assert!(b.max_s1.abs() < 1e-12);
        assert!(b.holds);
        assert_relative_eq!(b.bound, PI * PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn circle_fit_recovers_circle() {
        let pts: Vec<Vec3> = (0..20)
            .map(|k| {
                let t = k as f64 * 0.3;
                Vec3::new(1.0 + 2.0 * t.cos(), 2.0 * t.sin(), 3.0)
            })
            .collect();
        let (center, r, rms) = fit_circle(&pts).unwrap();
        assert_relative_eq!(center, Vec3::new(1.0, 0.0, 3.0), epsilon = 1e-10);
        assert_relative_eq!(r, 2.0, epsilon = 1e-10);
        assert!(rms < 1e-10);
    }

    #[test]
    fn catenoid_waist_saturates_geodesic_bound() {
        let m = catenoid();
        let metric = ConformalMetric::pullback(&m).with_delta(2.0 * PI).with_domain_radius(10.0);
        let opts = GeodesicOptions { ds: Some(0.05), ..Default::default() };
        let path = metric.geodesic_ivp(c(0.0, 0.0), PI / 2.0, PI, &opts).unwrap();
        let b = geodesic_restriction_check(&m, &metric, &path).unwrap();
        assert!(b.max_discrepancy < 1e-8, "{}", b.max_discrepancy);
        for s in &b.samples {
            assert_relative_eq!(s.direct, 0.5, epsilon = 1e-8);
        }
        let d = extremal_diagnostics(&m, &metric, &path, 1e-6).unwrap();
        assert!(d.circle_rms < 1e-8);
        assert!(d.curvature_residuals.iter().all(|r| r.abs() < 1e-8));
    }

    #[test]
    fn routes_agree_on_curved_surface() {
        let m = HarmonicMapData::new("exp(z)", "0.3*z+0.1").unwrap();
        let metric = ConformalMetric::power(0.5);
        let opts = GeodesicOptions { ds: Some(0.05), ..Default::default() };
        let path = metric.geodesic_ivp(c(0.1, -0.2), 0.7, 1.0, &opts).unwrap();
        let b = geodesic_restriction_check(&m, &metric, &path).unwrap();
        assert!(b.max_discrepancy < 1e-7, "{}", b.max_discrepancy);
    }
}

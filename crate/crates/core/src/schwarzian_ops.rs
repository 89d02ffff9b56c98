//! Ahlfors' Schwarzian `𝒮₁` of space curves, Möbius maps of space,
//! disconjugacy of `u″ + pu = 0` and the extremal function `Φ`.

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Taylor;
use crate::harmonic_map::Vec3;
use crate::ode::{dopri5, Termination, Tolerances};

pub type RealJet = Taylor<f64>;

/// First three derivatives of a curve at a parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveJet {
    pub d1: Vec3,
    pub d2: Vec3,
    pub d3: Vec3,
}

impl CurveJet {
    pub fn from_taylor(p: &[RealJet; 3]) -> (Vec3, Self) {
        let d = p.map(|t| t.derivatives());
        let col = |k: usize| Vec3::new(d[0][k], d[1][k], d[2][k]);
        (col(0), Self { d1: col(1), d2: col(2), d3: col(3) })
    }
}

/// Classical Schwarzian `x‴/x′ − 3/2 (x″/x′)²` of a real function.
pub fn schwarzian_real(d1: f64, d2: f64, d3: f64) -> Result<f64> {
    if d1 == 0.0 {
        return Err(Error::InvalidInput("critical point of the reparametrization".into()));
    }
    let r = d2 / d1;
    Ok(d3 / d1 - 1.5 * r * r)
}

/// `𝒮₁φ = φ‴·φ′/|φ′|² − 3(φ″·φ′)²/|φ′|⁴ + 3/2 |φ″|²/|φ′|²`.
pub fn ahlfors_s1(j: &CurveJet) -> Result<f64> {
    let v2 = j.d1.norm_squared();
    if v2 == 0.0 {
        return Err(Error::InvalidInput("zero tangent".into()));
    }
    let a = j.d2.dot(&j.d1);
    Ok(j.d3.dot(&j.d1) / v2 - 3.0 * a * a / (v2 * v2) + 1.5 * j.d2.norm_squared() / v2)
}

/// Speed `v`, its derivatives and the curvature `k` of a curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frenet {
    pub v: f64,
    pub dv: f64,
    pub ddv: f64,
    pub k: f64,
}

impl Frenet {
    pub fn of(j: &CurveJet) -> Result<Self> {
        let v = j.d1.norm();
        if v == 0.0 {
            return Err(Error::InvalidInput("zero tangent".into()));
        }
        let t = j.d1 / v;
        let a = j.d1.dot(&j.d2);
        let dv = a / v;
        let ddv = (j.d2.norm_squared() + j.d1.dot(&j.d3)) / v - a * a / (v * v * v);
        let normal_part = j.d2 - t * j.d2.dot(&t);
        let k = if normal_part.norm() < 1e-12 { 0.0 } else { normal_part.norm() / (v * v) };
        Ok(Self { v, dv, ddv, k })
    }

    /// `𝒮s + ½ v² k²` where `s` is the arclength function.
    pub fn s1(&self) -> f64 {
        let r = self.dv / self.v;
        self.ddv / self.v - 1.5 * r * r + 0.5 * self.v * self.v * self.k * self.k
    }
}

pub fn s1_frenet(j: &CurveJet) -> Result<f64> {
    Ok(Frenet::of(j)?.s1())
}

/// Right-hand side of the chain rule for `ψ = φ∘x`: `𝒮₁φ(x) x′² + 𝒮x`.
pub fn s1_chain_rule(phi_at_x: &CurveJet, x1: f64, x2: f64, x3: f64) -> Result<f64> {
    Ok(ahlfors_s1(phi_at_x)? * x1 * x1 + schwarzian_real(x1, x2, x3)?)
}

/// Curve sampled on a uniform parameter grid with derivatives at the samples.
#[derive(Clone, Debug)]
pub struct SpaceCurve {
    pub x: Vec<f64>,
    pub phi: Vec<Vec3>,
    pub jets: Vec<CurveJet>,
}

impl SpaceCurve {
    /// Samples a curve given as a map of real jets; derivatives are exact.
    pub fn from_jet_fn<F>(xs: &[f64], f: F) -> Result<Self>
    where
        F: Fn(RealJet) -> Result<[RealJet; 3]>,
    {
        let mut phi = Vec::with_capacity(xs.len());
        let mut jets = Vec::with_capacity(xs.len());
        for &x in xs {
            let (p, j) = CurveJet::from_taylor(&f(RealJet::variable(x))?);
            phi.push(p);
            jets.push(j);
        }
        Ok(Self { x: xs.to_vec(), phi, jets })
    }

    /// Derivatives by fourth-order finite differences of dense samples; the
    /// two points at each end use one-sided stencils of lower order.
    pub fn from_samples(xs: &[f64], phi: &[Vec3]) -> Result<Self> {
        let n = xs.len();
        if n < 7 || phi.len() != n {
            return Err(Error::InvalidInput("need at least 7 matching samples".into()));
        }
        let h = xs[1] - xs[0];
        let mut jets = Vec::with_capacity(n);
        for i in 0..n {
            let c = i.clamp(3, n - 4);
            let p = |k: isize| phi[(c as isize + k) as usize];
            let mut d1 = (p(-2) - p(2) + (p(1) - p(-1)) * 8.0) / (12.0 * h);
            let mut d2 = (-p(2) - p(-2) + (p(1) + p(-1)) * 16.0 - p(0) * 30.0) / (12.0 * h * h);
            let d3 = (p(-3) - p(3) + (p(2) - p(-2)) * 8.0 - (p(1) - p(-1)) * 13.0) / (8.0 * h * h * h);
            if c != i {
                // shift by Taylor expansion to the requested sample
                let dx = xs[i] - xs[c];
                d1 += d2 * dx + d3 * (0.5 * dx * dx);
                d2 += d3 * dx;
            }
            jets.push(CurveJet { d1, d2, d3 });
        }
        Ok(Self { x: xs.to_vec(), phi: phi.to_vec(), jets })
    }

    pub fn s1(&self, i: usize) -> Result<f64> {
        ahlfors_s1(&self.jets[i])
    }

    /// Frenet form with the speed differentiated numerically along the
    /// samples and the curvature taken pointwise.
    pub fn s1_frenet_sampled(&self, i: usize) -> Result<f64> {
        let n = self.x.len();
        if i < 2 || i + 2 >= n {
            return Err(Error::InvalidInput("sample too close to the end of the curve".into()));
        }
        let h = self.x[1] - self.x[0];
        let v = |k: usize| self.jets[k].d1.norm();
        let dv = (v(i - 2) - v(i + 2) + 8.0 * (v(i + 1) - v(i - 1))) / (12.0 * h);
        let ddv = (-v(i + 2) - v(i - 2) + 16.0 * (v(i + 1) + v(i - 1)) - 30.0 * v(i)) / (12.0 * h * h);
        let k = Frenet::of(&self.jets[i])?.k;
        Ok(Frenet { v: v(i), dv, ddv, k }.s1())
    }
}

/// Möbius transformations of space used to shift lifts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Mobius {
    Identity,
    /// `p ↦ c + (p − c)/|p − c|²`
    Inversion { center: Vec3 },
    /// `p ↦ scale·R p + shift`
    Affine { rotation: Matrix3<f64>, scale: f64, shift: Vec3 },
}

impl Mobius {
    pub fn apply(&self, p: &Vec3) -> Result<Vec3> {
        match self {
            Mobius::Identity => Ok(*p),
            Mobius::Inversion { center } => {
                let d = p - center;
                let r2 = d.norm_squared();
                if r2 == 0.0 {
                    return Err(Error::InvalidInput("inversion at its center".into()));
                }
                Ok(center + d / r2)
            }
            Mobius::Affine { rotation, scale, shift } => Ok(rotation * p * *scale + shift),
        }
    }

    /// Image of a curve jet, for composing with curves.
    pub fn apply_jet(&self, p: &[RealJet; 3]) -> Result<[RealJet; 3]> {
        match self {
            Mobius::Identity => Ok(*p),
            Mobius::Inversion { center } => {
                let d: [RealJet; 3] = std::array::from_fn(|i| p[i] - RealJet::constant(center[i]));
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                let mut out = [RealJet::constant(0.0); 3];
                for i in 0..3 {
                    out[i] = RealJet::constant(center[i]) + d[i].checked_div(r2)?;
                }
                Ok(out)
            }
            Mobius::Affine { rotation, scale, shift } => Ok(std::array::from_fn(|i| {
                let mut acc = RealJet::constant(shift[i]);
                for k in 0..3 {
                    acc = acc + p[k].scale(rotation[(i, k)] * scale);
                }
                acc
            })),
        }
    }

    /// Inverse transformation.
    pub fn inverse(&self) -> Mobius {
        match self {
            Mobius::Affine { rotation, scale, shift } => Mobius::Affine {
                rotation: rotation.transpose(),
                scale: 1.0 / scale,
                shift: -(rotation.transpose() * shift) / *scale,
            },
            other => other.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroWitness {
    /// Initial condition `u(a) = sin α, u′(a) = cos α`.
    pub alpha: f64,
    pub zeros: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct Disconjugacy {
    pub disconjugate: bool,
    pub witness: Option<ZeroWitness>,
    pub sweep: usize,
    pub grid: usize,
}

/// Searches for a solution of `u″ + p u = 0` with two zeros in `(a, b)`
/// among the initial conditions `(sin α, cos α)` at `a`, `α` on a uniform
/// sweep of `[0, π)`. A negative answer is a numerical claim at that
/// resolution.
pub fn sturm_disconjugate<P>(p: P, a: f64, b: f64, sweep: usize, grid: usize) -> Result<Disconjugacy>
where
    P: Fn(f64) -> f64 + Sync,
{
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput("interval must be finite and nonempty".into()));
    }
    let xs: Vec<f64> = (1..grid).map(|k| a + (b - a) * k as f64 / grid as f64).collect();
    let tol = Tolerances::default();
    for s in 0..sweep {
        let alpha = std::f64::consts::PI * s as f64 / sweep as f64;
        let tr = dopri5(|x, y| Some([y[1], -p(x) * y[0]]), a, [alpha.sin(), alpha.cos()], b, &xs, &tol, |_, _| true)?;
        if let Termination::StepCollapse { .. } = tr.termination {
            return Err(Error::NoConvergence("integration of u'' + pu = 0 failed".into()));
        }
        let mut zeros = Vec::new();
        // interior samples only: drop the endpoints
        let n = tr.t.len();
        let mut last: Option<(f64, f64)> = None;
        for k in 1..n - 1 {
            let (x, u) = (tr.t[k], tr.y[k][0]);
            if u == 0.0 {
                zeros.push(x);
                last = None;
                continue;
            }
            if let Some((x0, u0)) = last {
                if u0.signum() != u.signum() {
                    zeros.push(x0 + (x - x0) * u0 / (u0 - u));
                }
            }
            last = Some((x, u));
        }
        if zeros.len() >= 2 {
            return Ok(Disconjugacy {
                disconjugate: false,
                witness: Some(ZeroWitness { alpha, zeros: (zeros[0], zeros[1]) }),
                sweep,
                grid,
            });
        }
    }
    Ok(Disconjugacy { disconjugate: true, witness: None, sweep, grid })
}

/// `Φ(x) = ∫₀ˣ u₀⁻²` on `[−L, L]` for even `p`, with `u₀(0) = 1`, `u₀′(0) = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct ExtremalTable {
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    /// `u₀` vanishes at `±L`, sending both ends to infinity.
    pub ends_at_infinity: bool,
}

impl ExtremalTable {
    /// `Φ′` at `|x|` by linear interpolation in the table.
    pub fn dphi_at(&self, x: f64) -> f64 {
        let x = x.abs();
        let i = self.x.partition_point(|&t| t < x);
        if i == 0 {
            return self.dphi[0];
        }
        if i >= self.x.len() {
            return *self.dphi.last().unwrap();
        }
        let (x0, x1) = (self.x[i - 1], self.x[i]);
        let w = (x - x0) / (x1 - x0);
        self.dphi[i - 1] * (1.0 - w) + self.dphi[i] * w
    }
}

/// Tabulates the extremal function on `n` uniform steps of `[0, L]` and
/// mirrors it to `[−L, 0]`.
pub fn extremal_phi<P>(p: P, half_length: f64, n: usize) -> Result<ExtremalTable>
where
    P: Fn(f64) -> f64,
{
    let l = half_length;
    let xs: Vec<f64> = (1..=n).map(|k| l * k as f64 / n as f64).collect();
    let cutoff = 1e-7;
    let tr = dopri5(
        |x, y| (y[0] > cutoff).then(|| [y[1], -p(x) * y[0], 1.0 / (y[0] * y[0])]),
        0.0,
        [1.0, 0.0, 0.0],
        l,
        &xs,
        &Tolerances { atol: 1e-12, rtol: 1e-12, ..Default::default() },
        |_, _| true,
    )?;
    let mut ends_at_infinity = false;
    let mut pos_x = tr.t.clone();
    let mut pos_phi: Vec<f64> = tr.y.iter().map(|y| y[2]).collect();
    let mut pos_dphi: Vec<f64> = tr.y.iter().map(|y| 1.0 / (y[0] * y[0])).collect();
    if let Termination::StepCollapse { t } = tr.termination {
        // u₀ reached zero; only acceptable at the end of the interval
        if l - t > 1e-4 * l.max(1.0) {
            return Err(Error::InvalidInput(format!("u0 vanishes at {t:.6} inside the interval")));
        }
        ends_at_infinity = true;
        pos_x.pop();
        pos_phi.pop();
        pos_dphi.pop();
        pos_x.push(l);
        pos_phi.push(f64::INFINITY);
        pos_dphi.push(f64::INFINITY);
    }
    let m = pos_x.len();
    let mut x = Vec::with_capacity(2 * m - 1);
    let mut phi = Vec::with_capacity(2 * m - 1);
    let mut dphi = Vec::with_capacity(2 * m - 1);
    for k in (1..m).rev() {
        x.push(-pos_x[k]);
        phi.push(-pos_phi[k]);
        dphi.push(pos_dphi[k]);
    }
    x.extend_from_slice(&pos_x);
    phi.extend_from_slice(&pos_phi);
    dphi.extend_from_slice(&pos_dphi);
    Ok(ExtremalTable { x, phi, dphi, ends_at_infinity })
}

impl ExtremalTable {
    fn nonnegative(&self) -> ExtremalTable {
        let i = self.x.partition_point(|&t| t < 0.0);
        ExtremalTable {
            x: self.x[i..].to_vec(),
            phi: self.phi[i..].to_vec(),
            dphi: self.dphi[i..].to_vec(),
            ends_at_infinity: self.ends_at_infinity,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeBound {
    /// `max |φ′(x)| / Φ′(|x|)` over the samples.
    pub max_ratio: f64,
    /// Largest `𝒮₁φ − 2p` seen; the hypothesis asks for it to be `≤ 0`.
    pub max_hypothesis_excess: f64,
}

/// Compares `|φ′|` with `Φ′(|x|)` for a normalized curve on `[−L, L]`.
pub fn derivative_bound<P>(curve: &SpaceCurve, p: P, half_length: f64) -> Result<DerivativeBound>
where
    P: Fn(f64) -> f64,
{
    let i0 = curve
        .x
        .iter()
        .position(|&x| x == 0.0)
        .ok_or_else(|| Error::InvalidInput("curve must be sampled at 0".into()))?;
    let j0 = &curve.jets[i0];
    let tol = 1e-9;
    if curve.phi[i0].norm() > tol || (j0.d1.norm() - 1.0).abs() > tol || j0.d2.norm() > tol {
        return Err(Error::InvalidInput("curve is not normalized at 0".into()));
    }
    let table = extremal_phi(&p, half_length, 4096)?.nonnegative();
    let mut max_ratio: f64 = 0.0;
    let mut excess = f64::NEG_INFINITY;
    for (x, j) in curve.x.iter().zip(&curve.jets) {
        if x.abs() > half_length {
            return Err(Error::InvalidInput("sample outside the interval".into()));
        }
        let bound = table.dphi_at(*x);
        if bound.is_finite() {
            max_ratio = max_ratio.max(j.d1.norm() / bound);
        }
        excess = excess.max(ahlfors_s1(j)? - 2.0 * p(*x));
    }
    Ok(DerivativeBound { max_ratio, max_hypothesis_excess: excess })
}

/// Embeds a planar point as `(x, y, 0)`.
pub fn planar(z: Complex64) -> Vec3 {
    Vec3::new(z.re, z.im, 0.0)
}

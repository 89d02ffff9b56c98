//! Harmonic maps `f = h + conj(g)` with dilatation `q²` and their minimal
//! lifts `X = (Re f, Im f, W)`, `W = 2 Im ∫ h′q`.
//!
//! Everything pointwise is computed from order-3 jets of `h′` and `q`; the
//! lift itself needs a path integral from the anchor `z0`.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{check_path, integrate_polyline, HoloExpr, Jet3, DEFAULT_POLE_CLEARANCE, DEFAULT_QUAD_TOL};

pub type Vec3 = Vector3<f64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMapData {
    pub h_prime: HoloExpr,
    pub q: HoloExpr,
    /// Base point of the lift: integration starts here and `W(z0) = 0`.
    #[serde(default)]
    pub z0: Complex64,
    /// Value of `f` at `z0`. The default 0 makes `f̃(z0)` the origin.
    #[serde(default)]
    pub f0: Complex64,
}

/// Jets at a point of the holomorphic data entering the lift.
#[derive(Clone, Copy, Debug)]
pub struct MapJets {
    /// `h′, h″, h‴, h⁗`
    pub hp: Jet3,
    pub q: Jet3,
    /// `g′ = h′q²`
    pub gp: Jet3,
    /// `h′q`, whose primitive gives the height
    pub fp: Jet3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SigmaJets {
    pub sigma: f64,
    pub sigma_z: Complex64,
    pub sigma_zz: Complex64,
    pub sigma_zzbar: f64,
}

/// Position, partial derivatives through order 2 and unit normal of the lift.
#[derive(Clone, Copy, Debug)]
pub struct SurfaceJet {
    pub position: Vec3,
    pub x_x: Vec3,
    pub x_y: Vec3,
    pub x_xx: Vec3,
    pub x_xy: Vec3,
    pub x_yy: Vec3,
    pub normal: Vec3,
}

/// Partial derivatives `∂_x^a ∂_y^b X` for `1 ≤ a+b ≤ 3`, indexed by
/// order then by `b`.
#[derive(Clone, Copy, Debug)]
pub struct LiftPartials {
    pub d1: [Vec3; 2],
    pub d2: [Vec3; 3],
    pub d3: [Vec3; 4],
}

impl HarmonicMapData {
    pub fn new(h_prime: &str, q: &str) -> Result<Self> {
        Ok(Self {
            h_prime: h_prime.parse()?,
            q: q.parse()?,
            z0: Complex64::new(0.0, 0.0),
            f0: Complex64::new(0.0, 0.0),
        })
    }

    pub fn with_anchor(mut self, z0: Complex64, f0: Complex64) -> Self {
        self.z0 = z0;
        self.f0 = f0;
        self
    }

    pub fn jets(&self, z: Complex64) -> Result<MapJets> {
        let hp = self.h_prime.taylor(z)?;
        let q = self.q.taylor(z)?;
        let fp = hp * q;
        let gp = fp * q;
        Ok(MapJets { hp: hp.to_jet(), q: q.to_jet(), gp: gp.to_jet(), fp: fp.to_jet() })
    }

    fn regular_jets(&self, z: Complex64) -> Result<MapJets> {
        let j = self.jets(z)?;
        if j.hp.d0.norm() == 0.0 {
            return Err(Error::Singular { at: z, what: "h′ vanishes" });
        }
        Ok(j)
    }

    pub fn sigma_jets(&self, z: Complex64) -> Result<SigmaJets> {
        let j = self.regular_jets(z)?;
        Ok(sigma_from_jets(&j))
    }

    /// Conformal factor `e^σ = |h′| + |g′|`.
    pub fn conformal_factor(&self, z: Complex64) -> Result<f64> {
        let j = self.regular_jets(z)?;
        Ok(j.hp.d0.norm() + j.gp.d0.norm())
    }

    pub fn gauss_curvature(&self, z: Complex64) -> Result<f64> {
        let j = self.regular_jets(z)?;
        Ok(curvature_from_jets(&j))
    }

    /// `2(σ_zz − σ_z²)`.
    pub fn harmonic_schwarzian(&self, z: Complex64) -> Result<Complex64> {
        let s = self.sigma_jets(z)?;
        Ok(2.0 * (s.sigma_zz - s.sigma_z * s.sigma_z))
    }

    /// The same quantity written as the classical Schwarzian of `h` plus
    /// correction terms in `q`.
    pub fn harmonic_schwarzian_expanded(&self, z: Complex64) -> Result<Complex64> {
        let j = self.regular_jets(z)?;
        let r = j.hp.d1 / j.hp.d0;
        let sh = j.hp.d2 / j.hp.d0 - 1.5 * r * r;
        let qb = j.q.d0.conj();
        let d = 1.0 + j.q.d0.norm_sqr();
        let w = j.q.d1 * qb / d;
        Ok(sh + 2.0 * qb / d * (j.q.d2 - j.q.d1 * r) - 4.0 * w * w)
    }

    /// Traceless and trace parts of the Ahlfors derivative: `(𝒮f, ½|K|)`.
    pub fn ahlfors_derivative(&self, z: Complex64) -> Result<(Complex64, f64)> {
        Ok((self.harmonic_schwarzian(z)?, 0.5 * self.gauss_curvature(z)?.abs()))
    }

    /// Value of `f = h + conj(g)` and height `W`, by quadrature from `z0`.
    pub fn lift(&self, z: Complex64) -> Result<Vec3> {
        let path = [self.z0, z];
        check_path(&[&self.h_prime, &self.q], &path, DEFAULT_POLE_CLEARANCE)?;
        let [h, g, w] = integrate_polyline(&path, DEFAULT_QUAD_TOL, |zeta| {
            let hp = self.h_prime.eval(zeta)?;
            let q = self.q.eval(zeta)?;
            Ok([hp, hp * q * q, hp * q])
        })?;
        let f = self.f0 + h + g.conj();
        Ok(Vec3::new(f.re, f.im, 2.0 * w.im))
    }

    /// Partial derivatives of the lift; these need no integration.
    pub fn partials(&self, z: Complex64) -> Result<LiftPartials> {
        let j = self.regular_jets(z)?;
        Ok(partials_from_jets(&j))
    }

    pub fn surface_jet(&self, z: Complex64) -> Result<SurfaceJet> {
        let p = self.partials(z)?;
        let n = p.d1[0].cross(&p.d1[1]);
        Ok(SurfaceJet {
            position: self.lift(z)?,
            x_x: p.d1[0],
            x_y: p.d1[1],
            x_xx: p.d2[0],
            x_xy: p.d2[1],
            x_yy: p.d2[2],
            normal: n / n.norm(),
        })
    }

    /// Coefficients `(L, M, N)` of the second fundamental form in the
    /// coordinates `x, y`.
    pub fn second_fundamental_form(&self, z: Complex64) -> Result<(f64, f64, f64)> {
        let p = self.partials(z)?;
        let n = p.d1[0].cross(&p.d1[1]).normalize();
        Ok((p.d2[0].dot(&n), p.d2[1].dot(&n), p.d2[2].dot(&n)))
    }

    /// `II(V, V)` for the unit tangent `V` pointing in direction `theta` of
    /// the parameter plane.
    pub fn normal_curvature(&self, z: Complex64, theta: f64) -> Result<f64> {
        let (l, m, n) = self.second_fundamental_form(z)?;
        let e2s = (2.0 * self.sigma_jets(z)?.sigma).exp();
        let (s, c) = theta.sin_cos();
        Ok((l * c * c + 2.0 * m * c * s + n * s * s) / e2s)
    }

    /// Largest normal curvature over all directions.
    pub fn principal_curvature(&self, z: Complex64) -> Result<f64> {
        let (l, m, n) = self.second_fundamental_form(z)?;
        let e2s = (2.0 * self.sigma_jets(z)?.sigma).exp();
        Ok((0.5 * (l + n) + (0.25 * (l - n).powi(2) + m * m).sqrt()) / e2s)
    }
}

pub(crate) fn sigma_from_jets(j: &MapJets) -> SigmaJets {
    let hp = j.hp;
    let q = j.q;
    let r = hp.d1 / hp.d0;
    let d = 1.0 + q.d0.norm_sqr();
    let qb = q.d0.conj();
    let w = q.d1 * qb / d;
    SigmaJets {
        sigma: hp.d0.norm().ln() + d.ln(),
        sigma_z: 0.5 * r + w,
        sigma_zz: 0.5 * (hp.d2 / hp.d0 - r * r) + q.d2 * qb / d - w * w,
        sigma_zzbar: q.d1.norm_sqr() / (d * d),
    }
}

pub(crate) fn curvature_from_jets(j: &MapJets) -> f64 {
    let d = 1.0 + j.q.d0.norm_sqr();
    -4.0 * j.q.d1.norm_sqr() / (j.hp.d0.norm_sqr() * d.powi(4))
}

pub(crate) fn partials_from_jets(j: &MapJets) -> LiftPartials {
    // n-th derivatives of h, g and of the height primitive, n = 1..3
    let h = [j.hp.d0, j.hp.d1, j.hp.d2];
    let g = [j.gp.d0, j.gp.d1, j.gp.d2];
    let f = [j.fp.d0, j.fp.d1, j.fp.d2];
    let part = |n: usize, b: usize| {
        let ib = I.powi(b as i32);
        let v = ib * h[n - 1] + (ib * g[n - 1]).conj();
        Vec3::new(v.re, v.im, 2.0 * (ib * f[n - 1]).im)
    };
    LiftPartials {
        d1: [part(1, 0), part(1, 1)],
        d2: [part(2, 0), part(2, 1), part(2, 2)],
        d3: [part(3, 0), part(3, 1), part(3, 2), part(3, 3)],
    }
}

/// Derivatives of a real function of the plane through order 2.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlaneJet2 {
    pub psi_x: f64,
    pub psi_y: f64,
    pub psi_xx: f64,
    pub psi_xy: f64,
    pub psi_yy: f64,
}

impl PlaneJet2 {
    /// Builds the Euclidean jet from Wirtinger data `ψ_z, ψ_zz, ψ_zz̄`.
    pub fn from_wirtinger(psi_z: Complex64, psi_zz: Complex64, psi_zzbar: f64) -> Self {
        Self {
            psi_x: 2.0 * psi_z.re,
            psi_y: -2.0 * psi_z.im,
            psi_xx: 2.0 * psi_zz.re + 2.0 * psi_zzbar,
            psi_yy: -2.0 * psi_zz.re + 2.0 * psi_zzbar,
            psi_xy: -2.0 * psi_zz.im,
        }
    }
}

/// Schwarzian tensor `Hess ψ − dψ⊗dψ` with respect to the Euclidean metric,
/// split into its traceless part `a + ib` (matrix `[[a, −b], [−b, −a]]`) and
/// the trace scalar `½(Δψ − |∇ψ|²)`.
pub fn schwarzian_tensor(j: &PlaneJet2) -> (Complex64, f64) {
    let a = 0.5 * (j.psi_xx - j.psi_yy) - 0.5 * (j.psi_x * j.psi_x - j.psi_y * j.psi_y);
    let b = -(j.psi_xy - j.psi_x * j.psi_y);
    let trace = 0.5 * (j.psi_xx + j.psi_yy - j.psi_x * j.psi_x - j.psi_y * j.psi_y);
    (Complex64::new(a, b), trace)
}

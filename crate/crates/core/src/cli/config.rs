//! Experiment configuration, read from TOML.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::conformal_metric::{ConformalMetric, RealField};
use crate::criterion::{Grid, Variant};
use crate::error::{Error, Result};
use crate::expr::HoloExpr;
use crate::harmonic_map::HarmonicMapData;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub map: MapSpec,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub criteria: CriteriaSpec,
    #[serde(default)]
    pub run: RunFlags,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
}

/// A catalog name, or `h_prime` and `q` as expression text.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub name: Option<String>,
    pub h_prime: Option<String>,
    pub q: Option<String>,
    pub z0: Option<[f64; 2]>,
    pub f0: Option<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKindSpec {
    #[default]
    Power,
    Pullback,
    Epstein,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauKind {
    #[default]
    RealPart,
    LogModulus,
    Sigma,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    #[serde(default)]
    pub kind: MetricKindSpec,
    #[serde(default = "one")]
    pub t: f64,
    /// Holomorphic `T` defining `τ` for the Epstein family.
    pub tau: Option<String>,
    #[serde(default)]
    pub tau_kind: TauKind,
    /// Diameter override.
    pub delta: Option<f64>,
    #[serde(default = "one")]
    pub domain_radius: f64,
    /// Boundary samples used when the diameter has to be estimated.
    #[serde(default = "default_diameter_samples")]
    pub diameter_samples: usize,
}

fn one() -> f64 {
    1.0
}

fn default_diameter_samples() -> usize {
    24
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self {
            kind: MetricKindSpec::Power,
            t: 1.0,
            tau: None,
            tau_kind: TauKind::RealPart,
            delta: None,
            domain_radius: 1.0,
            diameter_samples: default_diameter_samples(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_nr")]
    pub nr: usize,
    #[serde(default = "default_ntheta")]
    pub ntheta: usize,
    /// Defaults to the metric's domain radius.
    pub radius: Option<f64>,
    #[serde(default = "default_offset")]
    pub boundary_offset: f64,
}

fn default_nr() -> usize {
    32
}
fn default_ntheta() -> usize {
    128
}
fn default_offset() -> f64 {
    1e-3
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nr: default_nr(), ntheta: default_ntheta(), radius: None, boundary_offset: default_offset() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaSpec {
    #[serde(default = "default_variants")]
    pub variants: Vec<String>,
    #[serde(default = "default_tol_eq")]
    pub tol_eq: f64,
}

fn default_variants() -> Vec<String> {
    vec!["main".into()]
}
fn default_tol_eq() -> f64 {
    1e-6
}

impl Default for CriteriaSpec {
    fn default() -> Self {
        Self { variants: default_variants(), tol_eq: default_tol_eq() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFlags {
    #[serde(default)]
    pub oracle: bool,
    #[serde(default)]
    pub extension: bool,
    #[serde(default)]
    pub boundary_trace: bool,
    /// Number of geodesics traced from the origin.
    #[serde(default = "default_geodesics")]
    pub geodesics: usize,
    /// Length of traced geodesics; rays stop earlier at the boundary.
    #[serde(default = "default_geodesic_length")]
    pub geodesic_length: f64,
    /// Extension samples in the cube `[−2, 2]³`.
    #[serde(default = "default_extension_samples")]
    pub extension_samples: usize,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_geodesics() -> usize {
    8
}
fn default_geodesic_length() -> f64 {
    2.0
}
fn default_extension_samples() -> usize {
    200
}

impl Default for RunFlags {
    fn default() -> Self {
        Self {
            oracle: false,
            extension: false,
            boundary_trace: false,
            geodesics: default_geodesics(),
            geodesic_length: default_geodesic_length(),
            extension_samples: default_extension_samples(),
            output: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    /// Decorrelation radius of the collision scan; three grid spacings when absent.
    pub decorrelation_radius: Option<f64>,
    #[serde(default = "default_tol_id")]
    pub identification: f64,
    #[serde(default = "default_trace_dirs")]
    pub trace_directions: usize,
    #[serde(default = "default_ucp_shifts")]
    pub ucp_shifts: usize,
}

fn default_tol_id() -> f64 {
    1e-6
}
fn default_trace_dirs() -> usize {
    64
}
fn default_ucp_shifts() -> usize {
    16
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            decorrelation_radius: None,
            identification: default_tol_id(),
            trace_directions: default_trace_dirs(),
            ucp_shifts: default_ucp_shifts(),
        }
    }
}

fn complex(p: Option<[f64; 2]>) -> Complex64 {
    p.map_or(Complex64::new(0.0, 0.0), |[a, b]| Complex64::new(a, b))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.build_map()?;
        self.build_metric(&self.build_map()?)?;
        for v in &self.criteria.variants {
            self.parse_variant(v, &self.build_map()?)?;
        }
        let r = self.grid_radius();
        if !(r > 0.0 && r <= self.metric.domain_radius) {
            return Err(Error::Config(format!("grid.radius = {r} must lie in (0, metric.domain_radius]")));
        }
        if self.grid.nr == 0 || self.grid.ntheta == 0 {
            return Err(Error::Config("grid.nr and grid.ntheta must be positive".into()));
        }
        Ok(())
    }

    pub fn build_map(&self) -> Result<HarmonicMapData> {
        let s = &self.map;
        let mut m = match (&s.name, &s.h_prime, &s.q) {
            (Some(n), None, None) => catalog::map(n).map_err(|e| Error::Config(format!("map.name: {e}")))?,
            (None, Some(h), q) => HarmonicMapData::new(h, q.as_deref().unwrap_or("0"))
                .map_err(|e| Error::Config(format!("map.h_prime / map.q: {e}")))?,
            _ => return Err(Error::Config("map: give either `name` or `h_prime` (and optionally `q`)".into())),
        };
        if s.z0.is_some() || s.f0.is_some() {
            let z0 = s.z0.map_or(m.z0, |_| complex(s.z0));
            let f0 = s.f0.map_or(m.f0, |_| complex(s.f0));
            m = m.with_anchor(z0, f0);
        }
        Ok(m)
    }

    pub fn build_metric(&self, m: &HarmonicMapData) -> Result<ConformalMetric> {
        let s = &self.metric;
        let mut metric = match s.kind {
            MetricKindSpec::Power => {
                if !(s.t >= 0.0) {
                    return Err(Error::Config(format!("metric.t = {} must be non-negative", s.t)));
                }
                ConformalMetric::power(s.t)
            }
            MetricKindSpec::Pullback => ConformalMetric::pullback(m),
            MetricKindSpec::Epstein => ConformalMetric::epstein(self.tau_field(m)?),
        };
        metric = metric.with_domain_radius(s.domain_radius);
        if let Some(d) = s.delta {
            metric = metric.with_delta(d);
        }
        Ok(metric)
    }

    fn tau_field(&self, m: &HarmonicMapData) -> Result<RealField> {
        let s = &self.metric;
        match s.tau_kind {
            TauKind::Sigma => Ok(RealField::Sigma(Box::new(m.clone()))),
            k => {
                let text = s.tau.as_deref().ok_or_else(|| Error::Config("metric.tau is required for this tau_kind".into()))?;
                let e = HoloExpr::parse(text).map_err(|e| Error::Config(format!("metric.tau: {e}")))?;
                Ok(if k == TauKind::RealPart { RealField::RealPart(e) } else { RealField::LogModulus(e) })
            }
        }
    }

    pub fn grid_radius(&self) -> f64 {
        self.grid.radius.unwrap_or(self.metric.domain_radius)
    }

    pub fn grid(&self) -> Grid {
        Grid::Polar {
            nr: self.grid.nr,
            ntheta: self.grid.ntheta,
            radius: self.grid_radius(),
            boundary_offset: self.grid.boundary_offset,
        }
    }

    /// Variant names: `main`, `complete`, `complete-printed`, `power:<t>`,
    /// `pi2`, `nehari`, `t2`, `porky`, `ahlfors:<c>` or `ahlfors:<re>,<im>`,
    /// `epstein`, `becker`, `becker-printed`, `intrinsic:<δ>`.
    pub fn parse_variant(&self, name: &str, m: &HarmonicMapData) -> Result<Variant> {
        let bad = |why: &str| Error::Config(format!("criteria.variants: {name:?}: {why}"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("expected a number"));
        let (head, arg) = match name.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (name, None),
        };
        let need = || arg.ok_or_else(|| bad("missing parameter after ':'"));
        Ok(match head {
            "main" => Variant::Main,
            "complete" => Variant::Complete { printed: false },
            "complete-printed" => Variant::Complete { printed: true },
            "power" => Variant::Power { t: num(need()?)? },
            "pi2" => Variant::Pi2,
            "nehari" => Variant::Nehari,
            "t2" => Variant::T2,
            "porky" => Variant::Porky,
            "ahlfors" => {
                let a = need()?;
                let c = match a.split_once(',') {
                    Some((re, im)) => Complex64::new(num(re)?, num(im)?),
                    None => Complex64::new(num(a)?, 0.0),
                };
                Variant::Ahlfors { c }
            }
            "epstein" => Variant::Epstein { tau: self.tau_field(m)? },
            "becker" => Variant::Becker { printed: false },
            "becker-printed" => Variant::Becker { printed: true },
            "intrinsic" => Variant::Intrinsic { delta: num(need()?)? },
            _ => return Err(bad("unknown variant")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_toml("[map]\nname = \"planar\"\n").unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.criteria.variants, vec!["main".to_string()]);
        assert_eq!(c.grid(), Grid::Polar { nr: 32, ntheta: 128, radius: 1.0, boundary_offset: 1e-3 });
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::from_toml("[map]\nname = \"planar\"\n[grid]\nnr = \"x\"\n").unwrap_err().to_string();
        assert!(e.contains("line 4") || e.contains("nr"), "{e}");
        let e = ExperimentConfig::from_toml("[map]\nname = \"planar\"\n[criteria]\nvariants = [\"nope\"]\n").unwrap_err().to_string();
        assert!(e.contains("nope"), "{e}");
        let e = ExperimentConfig::from_toml("[map]\nh_prime = \"exp(\"\n").unwrap_err().to_string();
        assert!(e.contains("map.h_prime"), "{e}");
    }

    #[test]
    fn config_round_trips() {
        let text = "seed = 3\n[map]\nh_prime = \"exp(z)\"\nq = \"0.3*z\"\n[metric]\nkind = \"power\"\nt = 0.5\n[criteria]\nvariants = [\"main\", \"ahlfors:0.5\", \"intrinsic:6.28\"]\n";
        let c = ExperimentConfig::from_toml(text).unwrap();
        let again = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, again);
    }
}

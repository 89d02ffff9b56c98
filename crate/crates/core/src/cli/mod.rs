//! Experiment orchestration behind the `minlift` binary.

pub mod config;
pub mod export;

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::canonical_extension::{CanonicalFunction, CriticalSearchOptions, ExtValue, ExtensionMap, UcpProbe};
use crate::conformal_metric::{ConformalMetric, GeodesicOptions, GeodesicPath};
use crate::criterion::{self, CriterionReport, EvalOptions, Variant, Verdict};
use crate::error::{Error, Result};
use crate::harmonic_map::Vec3;
use crate::injectivity_oracle::{self, BoundaryTrace, CollisionReport, Identification, TraceOptions};

pub use config::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Check,
    Trace,
    Lift,
    Extend,
    Oracle,
    Report,
}

impl Command {
    fn criteria(self) -> bool {
        matches!(self, Command::Check | Command::Report)
    }
    fn trace(self) -> bool {
        matches!(self, Command::Trace | Command::Report)
    }
    fn lift(self) -> bool {
        matches!(self, Command::Lift | Command::Report)
    }
    fn extend(self, cfg: &ExperimentConfig) -> bool {
        self == Command::Extend || (self == Command::Report && cfg.run.extension)
    }
    fn oracle(self, cfg: &ExperimentConfig) -> bool {
        self == Command::Oracle || (matches!(self, Command::Check | Command::Report) && cfg.run.oracle)
    }
    fn boundary(self, cfg: &ExperimentConfig) -> bool {
        cfg.run.boundary_trace && matches!(self, Command::Trace | Command::Oracle | Command::Report)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiameterSource {
    Override,
    ClosedForm,
    /// Largest sampled distance between boundary points; a lower bound.
    LowerBound,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiameterInfo {
    pub value: f64,
    pub source: DiameterSource,
}

#[derive(Clone, Debug, Serialize)]
pub struct VariantError {
    pub variant: String,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicSummary {
    pub theta: f64,
    pub length: f64,
    pub max_s1: f64,
    pub bound: f64,
    pub max_discrepancy: f64,
    pub holds: bool,
    pub convexity_min: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionSummary {
    pub ucp: UcpProbe,
    pub samples: usize,
    pub infinite: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub faces: usize,
    pub skipped: Vec<Complex64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: Command,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub metric: String,
    pub diameter: Option<DiameterInfo>,
    pub criteria: Vec<CriterionReport>,
    pub criterion_errors: Vec<VariantError>,
    pub geodesics: Vec<GeodesicSummary>,
    pub oracle: Option<CollisionReport>,
    pub boundary: Option<BoundaryTrace>,
    pub identifications: Vec<Identification>,
    pub extension: Option<ExtensionSummary>,
    pub mesh: Option<MeshSummary>,
}

pub struct RunOutcome {
    pub exit_code: i32,
    pub report: Report,
    pub files: Vec<PathBuf>,
}

/// Attaches a diameter to metrics without one, estimated from boundary
/// samples, and reports where it came from.
fn resolve_diameter(cfg: &ExperimentConfig, metric: ConformalMetric) -> (ConformalMetric, DiameterInfo) {
    if let Some(d) = metric.delta_override {
        return (metric, DiameterInfo { value: d, source: DiameterSource::Override });
    }
    if let Some(d) = metric.delta() {
        return (metric, DiameterInfo { value: d, source: DiameterSource::ClosedForm });
    }
    let r = metric.domain_radius * (1.0 - 1e-4);
    let est = metric.diameter_estimate(cfg.metric.diameter_samples, r);
    let d = est.lower_bound;
    (metric.with_delta(d), DiameterInfo { value: d, source: DiameterSource::LowerBound })
}

fn needs_diameter(variants: &[Variant]) -> bool {
    variants.iter().any(|v| matches!(v, Variant::Main))
}

fn write(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, contents)?;
    files.push(p);
    Ok(())
}

fn trace_geodesics(cfg: &ExperimentConfig, metric: &ConformalMetric) -> Vec<(f64, Result<GeodesicPath>)> {
    let n = cfg.run.geodesics;
    let opts = GeodesicOptions { ds: Some(0.01), ..Default::default() };
    (0..n)
        .into_par_iter()
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (th, metric.geodesic_ivp(Complex64::new(0.0, 0.0), th, cfg.run.geodesic_length, &opts))
        })
        .collect()
}

/// Runs one command and writes its artifacts into `out`.
pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let m = cfg.build_map()?;
    let base_metric = cfg.build_metric(&m)?;
    let variants: Vec<Variant> =
        cfg.criteria.variants.iter().map(|v| cfg.parse_variant(v, &m)).collect::<Result<_>>()?;
    let (metric, diameter) = if (cmd.criteria() && needs_diameter(&variants)) || cmd.trace() {
        let (mt, d) = resolve_diameter(cfg, base_metric);
        (mt, Some(d))
    } else {
        (base_metric, None)
    };
    let grid = cfg.grid();
    let mut files = Vec::new();
    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        command: cmd,
        seed: cfg.seed,
        config: cfg.clone(),
        metric: metric.name(),
        diameter,
        criteria: Vec::new(),
        criterion_errors: Vec::new(),
        geodesics: Vec::new(),
        oracle: None,
        boundary: None,
        identifications: Vec::new(),
        extension: None,
        mesh: None,
    };
    let mut failed = false;
    let mut hypothesis_failed = false;

    if cmd.criteria() {
        let opts = EvalOptions { tol_eq: cfg.criteria.tol_eq };
        for v in &variants {
            match criterion::evaluate(v, &m, Some(&metric), &grid, &opts) {
                Ok(r) => {
                    match r.verdict {
                        Verdict::Fails => failed = true,
                        Verdict::HypothesisFails => hypothesis_failed = true,
                        _ => {}
                    }
                    report.criteria.push(r);
                }
                Err(e) => {
                    failed = true;
                    report.criterion_errors.push(VariantError { variant: v.name(), error: e.to_string() });
                }
            }
        }
        write(out, "criteria.csv", &export::criteria_csv(&report.criteria), &mut files)?;
    }

    if cmd.trace() {
        let traced = trace_geodesics(cfg, &metric);
        let cf = CanonicalFunction::new(&m, &metric);
        let mut paths = Vec::new();
        for (th, p) in traced {
            let p = p?;
            let b = criterion::geodesic_restriction_check(&m, &metric, &p)?;
            let conv = cf.convexity_check(&p, &crate::schwarzian_ops::Mobius::Identity)?;
            if !b.holds {
                failed = true;
            }
            report.geodesics.push(GeodesicSummary {
                theta: th,
                length: p.length,
                max_s1: b.max_s1,
                bound: b.bound,
                max_discrepancy: b.max_discrepancy,
                holds: b.holds,
                convexity_min: conv.min_residual,
            });
            paths.push(p);
        }
        write(out, "geodesics.csv", &export::geodesics_csv(&metric, &paths), &mut files)?;
    }

    if cmd.boundary(cfg) {
        let t = injectivity_oracle::boundary_trace(&m, &metric, Complex64::new(0.0, 0.0), cfg.tolerances.trace_directions, &TraceOptions::default());
        report.identifications = injectivity_oracle::detect_extremal_identifications(&t, cfg.tolerances.identification, 0.1);
        write(out, "boundary.csv", &export::boundary_csv(&t), &mut files)?;
        report.boundary = Some(t);
    }

    if cmd.oracle(cfg) {
        let r = injectivity_oracle::surface_collision_scan(&m, &grid, cfg.tolerances.decorrelation_radius);
        if r.collision {
            failed = true;
        }
        report.oracle = Some(r);
    }

    if cmd.lift() {
        let g = &cfg.grid;
        let mesh = export::mesh_export(&m, g.nr, g.ntheta, cfg.grid_radius(), g.boundary_offset);
        write(out, "surface.obj", &mesh.obj, &mut files)?;
        report.mesh = Some(MeshSummary { vertices: mesh.vertices, faces: mesh.faces, skipped: mesh.skipped });
    }

    if cmd.extend(cfg) {
        let cf = CanonicalFunction::new(&m, &metric);
        let copts = CriticalSearchOptions::default();
        let ucp = cf.ucp_probe(cfg.tolerances.ucp_shifts, cfg.seed, 2.0, &copts);
        let base = cf.find_critical_points(&crate::schwarzian_ops::Mobius::Identity, &copts);
        if !ucp.holds || base.unique().is_none() {
            hypothesis_failed = true;
            report.extension = Some(ExtensionSummary { ucp, samples: 0, infinite: 0, failures: 0 });
        } else {
            let ext = ExtensionMap::new(cf);
            let samples = extension_samples(&ext, cfg.run.extension_samples, cfg.seed);
            let failures = samples.iter().filter(|s| s.1.is_none()).count();
            let ok: Vec<(Vec3, ExtValue)> = samples.into_iter().filter_map(|(p, e)| e.map(|e| (p, e))).collect();
            let infinite = ok.iter().filter(|s| s.1 == ExtValue::Infinity).count();
            write(out, "extension_samples.csv", &export::extension_csv(&ok), &mut files)?;
            let fibers: Vec<_> = crate::criterion::Grid::Polar { nr: 4, ntheta: 16, radius: metric.domain_radius, boundary_offset: 0.05 }
                .points()
                .into_iter()
                .filter_map(|z| cf.surface_fiber(z).ok())
                .collect();
            write(out, "fibers.obj", &export::fibers_obj(&fibers, 128, 4.0), &mut files)?;
            report.extension = Some(ExtensionSummary { ucp, samples: ok.len(), infinite, failures });
        }
    }

    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::InvalidInput(e.to_string()))?;
    write(out, "report.json", &json, &mut files)?;
    let exit_code = if hypothesis_failed {
        3
    } else if failed {
        2
    } else {
        0
    };
    Ok(RunOutcome { exit_code, report, files })
}

/// Seeded uniform samples of `[−2, 2]³` and their images.
pub fn extension_samples(ext: &ExtensionMap, n: usize, seed: u64) -> Vec<(Vec3, Option<ExtValue>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec3> =
        (0..n).map(|_| Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
    pts.par_iter().map(|p| (*p, ext.extend(p).ok())).collect()
}

/// Parses `RxT` into ring and angle counts.
pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| Error::InvalidInput(format!("grid {s:?} is not of the form <r>x<theta>")))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|_| Error::InvalidInput(format!("grid {s:?}: {t:?} is not a count")));
    Ok((p(a)?, p(b)?))
}

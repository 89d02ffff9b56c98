//! Weierstrass–Enneper lifts of planar harmonic maps: curvature and
//! Schwarzian data, conformal-metric geodesics, injectivity criteria with
//! their equality cases, and a spatial extension of injective lifts built
//! from circle bundles.

pub mod expr;
pub mod ode;
pub mod error;
pub mod harmonic_map;
pub mod conformal_metric;
pub mod schwarzian_ops;
pub mod criterion;
pub mod canonical_extension;
pub mod injectivity_oracle;
pub mod catalog;
pub mod cli;

//! Named example maps.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic_map::HarmonicMapData;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub h_prime: &'static str,
    pub q: &'static str,
    pub f0: (f64, f64),
    pub description: &'static str,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry { name: "planar", h_prime: "1", q: "0", f0: (0.0, 0.0), description: "identity map; flat disk" },
    CatalogEntry {
        name: "catenoid",
        h_prime: "exp(z)/2",
        q: "i*exp(-z)",
        f0: (1.0, 0.0),
        description: "catenoid (cosh u cos v, cosh u sin v, u) in w = u + iv",
    },
    CatalogEntry { name: "strip", h_prime: "2/(1-z^2)", q: "0", f0: (0.0, 0.0), description: "conformal map onto a parallel strip" },
    CatalogEntry { name: "exp4", h_prime: "4*exp(4*z)", q: "0", f0: (1.0, 0.0), description: "exp(4z), not injective in the disk" },
    CatalogEntry { name: "enneper", h_prime: "1", q: "z", f0: (0.0, 0.0), description: "Enneper surface" },
    CatalogEntry { name: "enneper-small", h_prime: "1", q: "0.3*z", f0: (0.0, 0.0), description: "rescaled Enneper patch" },
    CatalogEntry {
        name: "twisted",
        h_prime: "exp(z)",
        q: "0.3*z+0.1",
        f0: (0.0, 0.0),
        description: "exponential with a linear Gauss map",
    },
];

pub fn entry(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

pub fn map(name: &str) -> Result<HarmonicMapData> {
    let e = entry(name).ok_or_else(|| {
        let names: Vec<_> = CATALOG.iter().map(|e| e.name).collect();
        Error::InvalidInput(format!("unknown catalog map {name:?}; known: {}", names.join(", ")))
    })?;
    Ok(HarmonicMapData::new(e.h_prime, e.q)?.with_anchor(Complex64::new(0.0, 0.0), Complex64::new(e.f0.0, e.f0.1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_parses() {
        for e in CATALOG {
            let m = map(e.name).unwrap();
            assert!(m.jets(Complex64::new(0.1, 0.2)).is_ok(), "{}", e.name);
        }
        assert!(map("nope").is_err());
    }

    #[test]
    fn exp4_lift_is_exponential() {
        let m = map("exp4").unwrap();
        let z = Complex64::new(0.2, -0.4);
        let x = m.lift(z).unwrap();
        let w = (4.0 * z).exp();
        assert!((x.x - w.re).abs() < 1e-10 && (x.y - w.im).abs() < 1e-10 && x.z == 0.0);
    }
}

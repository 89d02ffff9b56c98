//! Adaptive composite Gauss–Legendre quadrature along polylines in the
//! complex plane.

use std::sync::OnceLock;

use num_complex::Complex64;

use super::ExprError;

const NODES: usize = 10;
const MAX_DEPTH: u32 = 40;

/// Nodes and weights on [-1, 1], computed by Newton iteration on P_n.
fn gauss_legendre() -> &'static [(f64, f64); NODES] {
    static RULE: OnceLock<[(f64, f64); NODES]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NODES;
        let mut rule = [(0.0, 0.0); NODES];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

fn rule_on<const K: usize, F>(a: Complex64, b: Complex64, f: &F) -> Result<[Complex64; K], ExprError>
where
    F: Fn(Complex64) -> Result<[Complex64; K], ExprError>,
{
    let half = (b - a) * 0.5;
    let mid = (a + b) * 0.5;
    let mut acc = [Complex64::new(0.0, 0.0); K];
    for &(x, w) in gauss_legendre() {
        let v = f(mid + half * x)?;
        for (s, vi) in acc.iter_mut().zip(v) {
            *s += vi * w;
        }
    }
    for s in acc.iter_mut() {
        *s *= half;
    }
    Ok(acc)
}

fn adapt<const K: usize, F>(
    a: Complex64,
    b: Complex64,
    whole: [Complex64; K],
    tol: f64,
    depth: u32,
    f: &F,
) -> Result<[Complex64; K], ExprError>
where
    F: Fn(Complex64) -> Result<[Complex64; K], ExprError>,
{
    let m = (a + b) * 0.5;
    let left = rule_on(a, m, f)?;
    let right = rule_on(m, b, f)?;
    let mut refined = [Complex64::new(0.0, 0.0); K];
    let mut err: f64 = 0.0;
    for k in 0..K {
        refined[k] = left[k] + right[k];
        err = err.max((refined[k] - whole[k]).norm());
    }
    if err <= tol {
        return Ok(refined);
    }
    if depth >= MAX_DEPTH {
        return Err(ExprError::NoConvergence { tol });
    }
    let l = adapt(a, m, left, tol * 0.5, depth + 1, f)?;
    let r = adapt(m, b, right, tol * 0.5, depth + 1, f)?;
    let mut out = [Complex64::new(0.0, 0.0); K];
    for k in 0..K {
        out[k] = l[k] + r[k];
    }
    Ok(out)
}

/// Integrates a vector-valued integrand along a polyline with absolute
/// tolerance `tol` split evenly across segments.
pub fn integrate_polyline<const K: usize, F>(
    path: &[Complex64],
    tol: f64,
    f: F,
) -> Result<[Complex64; K], ExprError>
where
    F: Fn(Complex64) -> Result<[Complex64; K], ExprError>,
{
    let mut total = [Complex64::new(0.0, 0.0); K];
    let segments = path.len().saturating_sub(1).max(1);
    let seg_tol = tol / segments as f64;
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let whole = rule_on(a, b, &f)?;
        let part = adapt(a, b, whole, seg_tol, 0, &f)?;
        for k in 0..K {
            total[k] += part[k];
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let s: f64 = gauss_legendre().iter().map(|&(_, w)| w).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exact_for_degree_19() {
        let path = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let v = integrate_polyline(&path, 1e-12, |z| Ok([z.powi(19)])).unwrap();
        assert!((v[0].re - 0.05).abs() < 1e-15);
    }
}

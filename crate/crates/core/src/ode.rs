//! Explicit Runge–Kutta integrators for small autonomous or time-dependent
//! systems with a fixed state size.
//!
//! [`dopri5`] is the Dormand–Prince 5(4) pair with PI-free step control and
//! the usual safety factor. Right-hand sides return `None` when the state
//! leaves their domain; the step is then rejected and shrunk, so a trajectory
//! running into a boundary ends in [`Termination::StepCollapse`] close to it.

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum OdeError {
    #[error("initial state outside the domain of the right-hand side")]
    BadInitialState,
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { atol: 1e-10, rtol: 1e-10, h_init: 1e-3, h_min: 1e-13, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    Completed,
    /// Step size fell below `h_min` at the recorded time.
    StepCollapse { t: f64 },
    /// The observer asked to stop.
    Stopped,
}

#[derive(Clone, Debug)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub termination: Termination,
    pub rejected: usize,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
/// Rejections by the right-hand side tolerated before giving up.
const MAX_REFUSALS: usize = 400;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients: b - b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One Dormand–Prince step. Returns the 5th-order state, the derivative at
/// the new point and the scaled error norm.
#[allow(clippy::type_complexity)]
fn dp_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    tol: &Tolerances,
) -> Option<([f64; N], [f64; N], f64)>
where
    F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(t + h, &y_new)?;
    let mut err = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
        err += (e / sc).powi(2);
    }
    let err = (err / N as f64).sqrt();
    if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((y_new, k7, err))
}

/// Integrates `y' = f(t, y)` from `t0` towards `t_end` (either direction).
///
/// Every time in `outputs` lying between `t0` and `t_end` is hit exactly and
/// recorded, as are `t0` and the final time. With empty `outputs` every
/// accepted step is recorded instead. The observer sees each recorded point and
/// may stop the integration by returning `false`.
pub fn dopri5<const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    outputs: &[f64],
    tol: &Tolerances,
    mut observer: O,
) -> Result<Trajectory<N>, OdeError>
where
    F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
    O: FnMut(f64, &[f64; N]) -> bool,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut stops: Vec<f64> = outputs
        .iter()
        .copied()
        .filter(|&s| (s - t0) * dir > 0.0 && (t_end - s) * dir >= 0.0)
        .collect();
    stops.sort_by(|a, b| (a * dir).total_cmp(&(b * dir)));
    stops.dedup();
    if stops.last().is_none_or(|&s| s != t_end) {
        stops.push(t_end);
    }
    let record_all = outputs.is_empty();

    let mut traj = Trajectory { t: vec![t0], y: vec![y0], termination: Termination::Completed, rejected: 0 };
    if !observer(t0, &y0) {
        traj.termination = Termination::Stopped;
        return Ok(traj);
    }
    if t0 == t_end {
        return Ok(traj);
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y).ok_or(OdeError::BadInitialState)?;
    let mut h = tol.h_init.min(tol.h_max).min((t_end - t0).abs());
    let mut next = 0;
    let mut steps = 0;
    // rejections by `f`; an edge approached in ever smaller steps counts as collapse
    let mut refused = 0usize;
    while next < stops.len() {
        steps += 1;
        if steps > tol.max_steps {
            return Err(OdeError::TooManySteps(tol.max_steps));
        }
        let target = stops[next];
        let remaining = (target - t).abs();
        let lands = h >= remaining;
        let step = if lands { remaining } else { h };
        match dp_step(&mut f, t, &y, &k1, dir * step, tol) {
            Some((y_new, k_new, err)) if err <= 1.0 => {
                t = if lands { target } else { t + dir * step };
                y = y_new;
                k1 = k_new;
                if lands {
                    next += 1;
                }
                if lands || record_all {
                    traj.t.push(t);
                    traj.y.push(y);
                    if !observer(t, &y) {
                        traj.termination = Termination::Stopped;
                        return Ok(traj);
                    }
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a landing step may have been truncated; do not let it shrink h
                h = if lands { h.max(step * fac) } else { step * fac };
                h = h.min(tol.h_max);
            }
            outcome => {
                traj.rejected += 1;
                let fac = match outcome {
                    Some((_, _, err)) => (0.9 * err.powf(-0.2)).clamp(0.1, 0.5),
                    None => {
                        refused += 1;
                        0.25
                    }
                };
                h = step * fac;
                if h < tol.h_min || refused > MAX_REFUSALS {
                    if !record_all || traj.t.last() != Some(&t) {
                        traj.t.push(t);
                        traj.y.push(y);
                    }
                    traj.termination = Termination::StepCollapse { t };
                    return Ok(traj);
                }
            }
        }
    }
    Ok(traj)
}

/// Classical fixed-step fourth-order Runge–Kutta over `n` equal steps.
pub fn rk4<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], t1: f64, n: usize) -> Option<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
{
    let h = (t1 - t0) / n as f64;
    let mut y = y0;
    let mut t = t0;
    for _ in 0..n {
        let k1 = f(t, &y)?;
        let k2 = f(t + 0.5 * h, &axpy(&y, 0.5 * h, &[(1.0, &k1)]))?;
        let k3 = f(t + 0.5 * h, &axpy(&y, 0.5 * h, &[(1.0, &k2)]))?;
        let k4 = f(t + h, &axpy(&y, h, &[(1.0, &k3)]))?;
        y = axpy(&y, h / 6.0, &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
        t += h;
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_hits_outputs() {
        let outs: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let tr = dopri5(|_, y| Some([y[1], -y[0]]), 0.0, [0.0, 1.0], 10.0, &outs, &Tolerances::default(), |_, _| true)
            .unwrap();
        assert_eq!(tr.t.len(), 11);
        for (t, y) in tr.t.iter().zip(&tr.y) {
            assert!((y[0] - t.sin()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn backwards_integration() {
        let tr = dopri5(|_, y| Some([y[0]]), 1.0, [1.0], 0.0, &[], &Tolerances::default(), |_, _| true).unwrap();
        let (t, y) = tr.last();
        assert_eq!(t, 0.0);
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn domain_boundary_collapses_step() {
        // y' = 1 on y < 1: the trajectory stalls just below 1
        let tr = dopri5(
            |_, y| (y[0] < 1.0).then_some([1.0]),
            0.0,
            [0.0],
            5.0,
            &[],
            &Tolerances::default(),
            |_, _| true,
        )
        .unwrap();
        match tr.termination {
            Termination::StepCollapse { t } => assert!((t - 1.0).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |n| (rk4(|_, y| Some([y[0]]), 0.0, [1.0], 1.0, n).unwrap()[0] - 1f64.exp()).abs();
        let ratio = err(20) / err(40);
        assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
    }
}

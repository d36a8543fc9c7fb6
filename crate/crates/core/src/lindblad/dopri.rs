//! Dormand–Prince 5(4) embedded pair with PI step-size control.
//!
//! Works on a flat `f64` state. Output times are hit exactly by shortening
//! the step that would overshoot them; the step proposed before shortening
//! is restored afterwards so the controller does not collapse near grid
//! points.

use crate::error::{Error, Result};

// The right-hand side is autonomous, so the node times c_i are not needed.
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order solution minus embedded fourth-order solution
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;

#[derive(Clone, Debug)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates the autonomous system `y' = f(y)` from `grid[0]`, calling
/// `output(i, t, y)` at every grid point (including the first).
pub fn integrate<F, O>(
    f: &mut F,
    y0: &[f64],
    grid: &[f64],
    tol: &Tolerances,
    mut output: O,
) -> Result<Stats>
where
    F: FnMut(&[f64], &mut [f64]),
    O: FnMut(usize, f64, &[f64]),
{
    let n = y0.len();
    let mut stats = Stats::default();
    let mut y = y0.to_vec();
    let mut t = grid[0];
    output(0, t, &y);
    if grid.len() == 1 {
        return Ok(stats);
    }

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    f(&y, &mut k1);
    stats.evaluations += 1;

    let t_end = *grid.last().unwrap();
    let mut h = initial_step(f, &y, &k1, t_end - t, tol, &mut stats);
    let mut err_old: f64 = 1e-4;
    let mut next = 1;
    let mut reject_last = false;

    while next < grid.len() {
        let target = grid[next];
        let h_min = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < h_min {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Error::StepLimit {
                t,
                steps: tol.max_steps,
            });
        }
        let mut h_step = h.min(tol.max_step);
        let hits_target = t + h_step >= target - h_min;
        if hits_target {
            h_step = target - t;
        }

        for i in 0..n {
            stage[i] = y[i] + h_step * A21 * k1[i];
        }
        f(&stage, &mut k2);
        for i in 0..n {
            stage[i] = y[i] + h_step * (A31 * k1[i] + A32 * k2[i]);
        }
        f(&stage, &mut k3);
        for i in 0..n {
            stage[i] = y[i] + h_step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(&stage, &mut k4);
        for i in 0..n {
            stage[i] = y[i] + h_step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(&stage, &mut k5);
        for i in 0..n {
            stage[i] = y[i]
                + h_step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(&stage, &mut k6);
        for i in 0..n {
            y_new[i] = y[i]
                + h_step * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(&y_new, &mut k7);
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = h_step
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            if y_new.iter().any(|v| !v.is_finite()) && h_step <= h_min * 2.0 {
                return Err(Error::Divergence { t });
            }
            h = h_step * FAC_MIN;
            stats.rejected += 1;
            reject_last = true;
            continue;
        }

        if err <= 1.0 {
            let mut fac = err.powf(EXPO) * err_old.powf(-BETA) / SAFETY;
            fac = fac.clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_proposed = h_step / fac;
            if reject_last {
                h_proposed = h_proposed.min(h_step);
            }
            err_old = err.max(1e-4);
            stats.accepted += 1;
            reject_last = false;

            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { t: t + h_step });
            }
            if hits_target {
                t = target;
                output(next, t, &y);
                next += 1;
                // a grid-shortened step says nothing about the natural step size
                h = h_proposed.max(h);
            } else {
                t += h_step;
                h = h_proposed;
            }
        } else {
            let fac = (err.powf(EXPO) / SAFETY).min(1.0 / FAC_MIN);
            h = h_step / fac;
            stats.rejected += 1;
            reject_last = true;
        }
    }
    Ok(stats)
}

/// Starting step from the norms of y and f(y) (Hairer, Nørsett & Wanner, II.4).
fn initial_step<F>(
    f: &mut F,
    y: &[f64],
    f0: &[f64],
    span: f64,
    tol: &Tolerances,
    stats: &mut Stats,
) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = y.len();
    let scale = |i: usize| tol.abs + tol.rel * y[i].abs();
    let rms =
        |v: &dyn Fn(usize) -> f64| ((0..n).map(|i| v(i) * v(i)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(&|i| y[i] / scale(i));
    let d1 = rms(&|i| f0[i] / scale(i));
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span).min(tol.max_step);
    let y1: Vec<f64> = (0..n).map(|i| y[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    f(&y1, &mut f1);
    stats.evaluations += 1;
    let d2 = rms(&|i| (f1[i] - f0[i]) / scale(i)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span).min(tol.max_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances {
            rel: 1e-10,
            abs: 1e-12,
            max_step: 1.0,
            max_steps: 1_000_000,
        }
    }

    #[test]
    fn exponential_decay_hits_grid() {
        let grid = [0.0, 0.3, 1.0, 2.5];
        let mut out = Vec::new();
        integrate(
            &mut |y: &[f64], dy: &mut [f64]| dy[0] = -2.0 * y[0],
            &[1.0],
            &grid,
            &tol(),
            |i, t, y| out.push((i, t, y[0])),
        )
        .unwrap();
        assert_eq!(out.len(), 4);
        for (i, t, v) in out {
            assert_eq!(t, grid[i]);
            assert!((v - (-2.0 * t).exp()).abs() < 1e-9, "t={t} v={v}");
        }
    }

    #[test]
    fn harmonic_oscillator_conserves_energy() {
        let grid: Vec<f64> = (0..=20).map(|k| k as f64).collect();
        let mut last = vec![];
        integrate(
            &mut |y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -4.0 * y[0];
            },
            &[1.0, 0.0],
            &grid,
            &tol(),
            |_, t, y| last = vec![t, y[0], y[1]],
        )
        .unwrap();
        let (t, x) = (last[0], last[1]);
        assert!((x - (2.0 * t).cos()).abs() < 1e-8);
    }

    #[test]
    fn blow_up_reports_failure() {
        let r = integrate(
            &mut |y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0],
            &[1.0],
            &[0.0, 2.0],
            &tol(),
            |_, _, _| {},
        );
        assert!(matches!(
            r,
            Err(Error::StepSizeUnderflow { .. })
                | Err(Error::StepLimit { .. })
                | Err(Error::Divergence { .. })
        ));
    }
}

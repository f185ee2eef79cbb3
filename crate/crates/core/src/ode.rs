// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! Explicit Runge–Kutta integrators for complex-valued ODE systems.
//!
//! [`dopri5`] is the adaptive Dormand–Prince 5(4) pair with FSAL and
//! mixed absolute/relative error control. [`rk4_fixed`] is a plain
//! fixed-step classical RK4 used as an independent cross-check.

use thiserror::Error;

use crate::operator::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: None,
            h_min: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `y' = rhs(t, y)` from `t0` to `t1` in place.
///
/// `sample_times` (ascending, inside `[t0, t1]`) are hit exactly and reported
/// through `on_sample`.
pub fn dopri5<F, S>(
    mut rhs: F,
    t0: f64,
    t1: f64,
    y: &mut [C64],
    opts: &OdeOptions,
    sample_times: &[f64],
    mut on_sample: S,
) -> Result<OdeStats, OdeError>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    S: FnMut(f64, &[C64]),
{
    let n = y.len();
    let mut stats = OdeStats::default();
    let mut samples = sample_times.iter().cloned().peekable();
    while let Some(&ts) = samples.peek() {
        if ts <= t0 {
            on_sample(t0, y);
            samples.next();
        } else {
            break;
        }
    }
    if t1 <= t0 {
        return Ok(stats);
    }

    let mut k1 = vec![C64::default(); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut k5 = k1.clone();
    let mut k6 = k1.clone();
    let mut k7 = k1.clone();
    let mut tmp = k1.clone();
    let mut y_new = k1.clone();

    rhs(t0, y, &mut k1);
    stats.rhs_evals += 1;

    let span = t1 - t0;
    let mut h = opts.h_init.unwrap_or(1e-3 * span).min(span);
    let mut t = t0;
    let mut last_rejected = false;

    while t < t1 {
        if stats.steps + stats.rejected >= opts.max_steps {
            return Err(OdeError::TooManySteps {
                t,
                max_steps: opts.max_steps,
            });
        }
        let mut target = t1;
        if let Some(&ts) = samples.peek() {
            target = target.min(ts);
        }
        let mut landing = false;
        let mut step = h;
        if t + step >= target || target - (t + step) < 1e-12 * span {
            step = target - t;
            landing = true;
        }
        if step < opts.h_min && !landing {
            return Err(OdeError::StepUnderflow { t, h: step });
        }

        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (step * A21);
        }
        rhs(t + C2 * step, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * step;
        }
        rhs(t + C3 * step, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * step;
        }
        rhs(t + C4 * step, &tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * step;
        }
        rhs(t + C5 * step, &tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i]
                + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * step;
        }
        rhs(t + step, &tmp, &mut k6);
        for i in 0..n {
            y_new[i] = y[i]
                + (k1[i] * B1 + k3[i] * B3 + k4[i] * B4 + k5[i] * B5 + k6[i] * B6) * step;
        }
        rhs(t + step, &y_new, &mut k7);
        stats.rhs_evals += 6;

        let mut err = 0.0f64;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * step;
            let scale = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err = err.max(e.norm() / scale);
        }
        if !err.is_finite() {
            return Err(OdeError::NonFinite { t });
        }

        if err <= 1.0 {
            t = if landing { target } else { t + step };
            y.copy_from_slice(&y_new);
            std::mem::swap(&mut k1, &mut k7);
            stats.steps += 1;
            while let Some(&ts) = samples.peek() {
                if ts <= t {
                    on_sample(t, y);
                    samples.next();
                } else {
                    break;
                }
            }
            let mut factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
            factor = factor.clamp(0.2, 5.0);
            if last_rejected {
                factor = factor.min(1.0);
            }
            // a shortened landing step says nothing about the natural size
            if !landing || step >= h {
                h = step * factor;
            }
            last_rejected = false;
        } else {
            let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h = step * factor;
            stats.rejected += 1;
            last_rejected = true;
            if h < opts.h_min {
                return Err(OdeError::StepUnderflow { t, h });
            }
        }
    }
    Ok(stats)
}

/// Classical fixed-step RK4 from `t0` to `t1` in `n_steps` steps.
pub fn rk4_fixed<F>(mut rhs: F, t0: f64, t1: f64, y: &mut [C64], n_steps: usize) -> OdeStats
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y.len();
    let h = (t1 - t0) / n_steps as f64;
    let mut k1 = vec![C64::default(); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    for s in 0..n_steps {
        let t = t0 + s as f64 * h;
        rhs(t, y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (0.5 * h);
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + k2[i] * (0.5 * h);
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + k3[i] * h;
        }
        rhs(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    OdeStats {
        steps: n_steps,
        rejected: 0,
        rhs_evals: 4 * n_steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotate(_t: f64, y: &[C64], dy: &mut [C64]) {
        // y' = i y
        dy[0] = y[0] * C64::new(0.0, 1.0);
    }

    #[test]
    fn adaptive_matches_exponential() {
        let mut y = [C64::new(1.0, 0.0)];
        let stats = dopri5(rotate, 0.0, 10.0, &mut y, &OdeOptions::default(), &[], |_, _| {}).unwrap();
        let exact = C64::from_polar(1.0, 10.0);
        assert!((y[0] - exact).norm() < 1e-8);
        assert!(stats.steps > 10);
    }

    #[test]
    fn samples_are_hit_exactly() {
        let mut y = [C64::new(1.0, 0.0)];
        let times = [0.0, 0.5, 1.25, 3.0];
        let mut seen = Vec::new();
        dopri5(rotate, 0.0, 3.0, &mut y, &OdeOptions::default(), &times, |t, y| {
            seen.push((t, y[0]))
        })
        .unwrap();
        assert_eq!(seen.len(), 4);
        for ((t, v), &tt) in seen.iter().zip(&times) {
            assert_eq!(*t, tt);
            assert!((v - C64::from_polar(1.0, tt)).norm() < 1e-8);
        }
    }

    #[test]
    fn rk4_fourth_order() {
        let err = |n| {
            let mut y = [C64::new(1.0, 0.0)];
            rk4_fixed(rotate, 0.0, 2.0, &mut y, n);
            (y[0] - C64::from_polar(1.0, 2.0)).norm()
        };
        let ratio = err(50) / err(100);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn step_budget_is_enforced() {
        let mut y = [C64::new(1.0, 0.0)];
        let opts = OdeOptions {
            max_steps: 3,
            ..OdeOptions::default()
        };
        let r = dopri5(rotate, 0.0, 100.0, &mut y, &opts, &[], |_, _| {});
        assert!(matches!(r, Err(OdeError::TooManySteps { .. })));
    }
}

// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! Nelder–Mead simplex minimization with dimension-adaptive coefficients
//! (Gao & Han) and restarts around the incumbent on convergence.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Converged when the simplex spread in `f` falls below this.
    pub f_tol: f64,
    /// ... and its spread in `x` (max-norm) falls below this.
    pub x_tol: f64,
    /// Edge length of the initial simplex, per coordinate.
    pub initial_step: f64,
    /// Fresh simplices built around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 4000,
            f_tol: 1e-10,
            x_tol: 1e-7,
            initial_step: 0.1,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// Best value after each iteration.
    pub history: Vec<f64>,
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let mut obj = Counted { f, evals: 0 };
    let n = x0.len();
    let f0 = obj.call(x0);
    let mut best_x = x0.to_vec();
    let mut best_f = f0;
    let mut history = vec![f0];
    if n == 0 {
        return NelderMeadResult {
            x: best_x,
            f: best_f,
            evals: obj.evals,
            converged: true,
            restarts_used: 0,
            history,
        };
    }

    let dim = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / dim, 0.75 - 0.5 / dim, 1.0 - 1.0 / dim);
    let mut converged = false;
    let mut restarts_used = 0;

    for round in 0..=opts.restarts {
        let start_f = best_f;
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best_x.clone(), best_f));
        for i in 0..n {
            let mut x = best_x.clone();
            x[i] += opts.initial_step;
            let v = obj.call(&x);
            simplex.push((x, v));
        }
        converged = false;
        while obj.evals < opts.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            history.push(simplex[0].1);
            let f_spread = simplex[n].1 - simplex[0].1;
            let x_spread = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if f_spread <= opts.f_tol && x_spread <= opts.x_tol {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / dim;
                }
            }
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let xr = along(alpha);
            let fr = obj.call(&xr);
            if fr < simplex[0].1 {
                let xe = along(alpha * beta);
                let fe = obj.call(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let x = along(alpha * gamma);
                let v = obj.call(&x);
                (x, v)
            } else {
                let x = along(-gamma);
                let v = obj.call(&x);
                (x, v)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            let x_best = simplex[0].0.clone();
            for (x, v) in simplex[1..].iter_mut() {
                for (xi, bi) in x.iter_mut().zip(&x_best) {
                    *xi = bi + delta * (*xi - bi);
                }
                *v = obj.call(x);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best_f {
            best_f = simplex[0].1;
            best_x = simplex[0].0.clone();
        }
        if round > 0 {
            restarts_used = round;
        }
        let stalled = start_f - best_f <= opts.f_tol;
        if !converged || obj.evals >= opts.max_evals || (round > 0 && stalled) {
            break;
        }
    }

    NelderMeadResult {
        x: best_x,
        f: best_f,
        evals: obj.evals,
        converged,
        restarts_used,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_evals: 10_000,
            f_tol: 1e-14,
            x_tol: 1e-9,
            initial_step: 0.5,
            restarts: 2,
        };
        let r = minimize(f, &[-1.2, 1.0], &opts);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn never_worse_than_start_and_monotone_history() {
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>();
        let x0 = [0.0; 6];
        let r = minimize(f, &x0, &NelderMeadOptions::default());
        assert!(r.f <= f(&x0));
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.f < 1e-9);
    }

    #[test]
    fn zero_dimensional() {
        let r = minimize(|_| 4.0, &[], &NelderMeadOptions::default());
        assert_eq!((r.f, r.evals), (4.0, 1));
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 2.0).powi(4) + (x[1] + x[0]).powi(2) + x[2].abs();
        let a = minimize(f, &[0.0, 0.0, 1.0], &NelderMeadOptions::default());
        let b = minimize(f, &[0.0, 0.0, 1.0], &NelderMeadOptions::default());
        assert_eq!(a, b);
    }
}

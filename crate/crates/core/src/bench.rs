// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! Fourier-pulse optimization of the simulated transfer fidelity, and the
//! sweeps that compare it against the least-action bound.
//!
//! Coefficients are searched in the scaled form `β_n = α_n / (π/(2t_f))`,
//! so a unit step in `β` is a velocity change comparable to the linear
//! sweep rate whatever the transfer time.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lambda::{
    energy_for_time, minimal_loss, optimal_loss, optimal_trajectory, pap_prefactor, protocol_loss, transfer_time,
    Constraint, LambdaError, LambdaParams, LinearTheta, ThetaProfile,
};
use crate::master::{transfer_fidelity, FourierPulse, SimError, SimOptions};
use crate::nelder_mead::{minimize, NelderMeadOptions};
use crate::quadrature::{integrate_with_breaks, Tolerance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("extrapolation needs at least 4 values with increasing N, got {0}")]
    TooFewPoints(usize),
    #[error("N values must be strictly increasing")]
    NotIncreasing,
    #[error("non-finite loss value at N = {0}")]
    NonFinite(usize),
    #[error("ill-conditioned fit (p = {p}, condition number {condition:e})")]
    IllConditioned { p: f64, condition: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeOptions {
    pub sim: SimOptions,
    pub nelder_mead: NelderMeadOptions,
    /// Size of the ± seed perturbations, in scaled units.
    pub perturbation: f64,
    /// Number of default seeds: zero, analytic projection, then ± perturbations.
    pub n_seeds: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            sim: SimOptions::default(),
            nelder_mead: NelderMeadOptions::default(),
            perturbation: 0.2,
            n_seeds: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub n: usize,
    /// Fourier coefficients `α_n` (rad/time).
    pub coeffs: Vec<f64>,
    pub fidelity: f64,
    pub t_f: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best loss `1 − F` so far, per simplex iteration, of the winning seed.
    pub history: Vec<f64>,
    pub seed: String,
}

impl OptimizationResult {
    pub fn loss(&self) -> f64 {
        1.0 - self.fidelity
    }

    pub fn pulse(&self) -> FourierPulse {
        FourierPulse::new(self.t_f, self.coeffs.clone())
    }
}

fn scale(t_f: f64) -> f64 {
    FRAC_PI_2 / t_f
}

/// Cosine coefficients of an analytic `θ̇(t)` in scaled units.
pub fn project_profile<T: ThetaProfile + ?Sized>(profile: &T, n: usize) -> Result<Vec<f64>, BenchError> {
    let tf = profile.duration();
    let w = std::f64::consts::PI / tf;
    let breaks = profile.breakpoints();
    (1..=n)
        .map(|k| {
            let r = integrate_with_breaks(
                |t| profile.theta_dot(t) * (k as f64 * w * t).cos(),
                0.0,
                tf,
                &breaks,
                Tolerance::new(1e-13, 1e-10),
            )
            .map_err(LambdaError::from)?;
            Ok(2.0 / tf * r.value / scale(tf))
        })
        .collect()
}

fn analytic_seed(p: &LambdaParams, t_f: f64, n: usize) -> Option<Vec<f64>> {
    let e = energy_for_time(t_f, p).ok()?;
    let sol = optimal_trajectory(e, p, 801).ok()?;
    project_profile(&sol, n).ok()
}

fn perturbation_pattern(n: usize, size: f64) -> Vec<f64> {
    (0..n)
        .map(|k| size * if k % 2 == 0 { 1.0 } else { -1.0 } / (k + 1) as f64)
        .collect()
}

// Seeds in scaled units: optional warm start, zero, analytic projection,
// projection ± a fixed alternating pattern. Duplicates are dropped.
fn seeds(
    p: &LambdaParams,
    t_f: f64,
    n: usize,
    warm: Option<&[f64]>,
    opts: &OptimizeOptions,
) -> Vec<(String, Vec<f64>)> {
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    let mut push = |label: &str, x: Vec<f64>| {
        if !out.iter().any(|(_, y)| *y == x) {
            out.push((label.to_string(), x));
        }
    };
    if let Some(w) = warm {
        let mut x: Vec<f64> = w.iter().take(n).cloned().collect();
        x.resize(n, 0.0);
        push("warm", x);
    }
    let defaults = opts.n_seeds.max(1);
    push("zero", vec![0.0; n]);
    if defaults > 1 && n > 0 {
        let proj = analytic_seed(p, t_f, n).unwrap_or_else(|| vec![0.0; n]);
        push("analytic", proj.clone());
        let pert = perturbation_pattern(n, opts.perturbation);
        for (k, sign) in [1.0, -1.0].iter().enumerate() {
            if defaults > 2 + k {
                let x = proj.iter().zip(&pert).map(|(a, d)| a + sign * d).collect();
                push(if *sign > 0.0 { "analytic+" } else { "analytic-" }, x);
            }
        }
    }
    out
}

fn loss_of(p: &LambdaParams, t_f: f64, beta: &[f64], sim: &SimOptions) -> f64 {
    let sc = scale(t_f);
    let pulse = FourierPulse::new(t_f, beta.iter().map(|b| b * sc).collect());
    match transfer_fidelity(p, pulse, sim) {
        Ok(f) => 1.0 - f,
        Err(_) => f64::INFINITY,
    }
}

/// Maximize the simulated fidelity over `N` Fourier coefficients at fixed `t_f`.
///
/// `warm` (scaled coefficients of a smaller-`N` optimum) is padded with zeros
/// and tried first, so nested runs never lose fidelity as `N` grows.
pub fn optimize_pulse(
    p: &LambdaParams,
    t_f: f64,
    n: usize,
    warm: Option<&[f64]>,
    opts: &OptimizeOptions,
) -> Result<OptimizationResult, BenchError> {
    p.validate()?;
    if !(t_f > 0.0) {
        return Err(BenchError::Invalid(format!("t_f = {t_f} must be > 0")));
    }
    let mut best: Option<OptimizationResult> = None;
    let mut evals = 0;
    for (label, x0) in seeds(p, t_f, n, warm, opts) {
        let r = minimize(|x| loss_of(p, t_f, x, &opts.sim), &x0, &opts.nelder_mead);
        evals += r.evals;
        if best.as_ref().map_or(true, |b| r.f < b.loss()) {
            let sc = scale(t_f);
            best = Some(OptimizationResult {
                n,
                coeffs: r.x.iter().map(|b| b * sc).collect(),
                fidelity: 1.0 - r.f,
                t_f,
                evaluations: 0,
                converged: r.converged,
                history: r.history,
                seed: label,
            });
        }
    }
    let mut best = best.expect("at least one seed");
    best.evaluations = evals;
    if !best.fidelity.is_finite() {
        return Err(BenchError::NonFinite(n));
    }
    Ok(best)
}

/// Scaled coefficients `β` of a result.
pub fn scaled_coeffs(r: &OptimizationResult) -> Vec<f64> {
    let sc = scale(r.t_f);
    r.coeffs.iter().map(|a| a / sc).collect()
}

/// Optimize for each `N` in `ns` (ascending), seeding each run with the last.
pub fn optimize_nested(
    p: &LambdaParams,
    t_f: f64,
    ns: &[usize],
    opts: &OptimizeOptions,
) -> Result<Vec<OptimizationResult>, BenchError> {
    let mut out: Vec<OptimizationResult> = Vec::with_capacity(ns.len());
    for &n in ns {
        let warm = out.last().map(scaled_coeffs);
        out.push(optimize_pulse(p, t_f, n, warm.as_deref(), opts)?);
    }
    Ok(out)
}

/// Analytic `1 − ΔF_opt(ℰ(t_f))`, or why it is unavailable.
pub fn analytic_fidelity(t_f: f64, p: &LambdaParams) -> Result<f64, LambdaError> {
    let e = energy_for_time(t_f, p)?;
    Ok(1.0 - optimal_loss(e, p)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t_f: f64,
    pub numeric: Vec<OptimizationResult>,
    /// `None` when the analytic branch is unavailable at this `t_f`.
    pub analytic: Option<f64>,
}

/// One row per `t_f`: nested optimizations over `ns` and the analytic curve.
pub fn sweep_point(p: &LambdaParams, t_f: f64, ns: &[usize], opts: &OptimizeOptions) -> Result<SweepRow, BenchError> {
    Ok(SweepRow {
        t_f,
        numeric: optimize_nested(p, t_f, ns, opts)?,
        analytic: analytic_fidelity(t_f, p).ok(),
    })
}

/// Sweep the transfer time; rows come back in grid order.
pub fn sweep_tf(
    p: &LambdaParams,
    grid: &[f64],
    ns: &[usize],
    opts: &OptimizeOptions,
) -> Result<Vec<SweepRow>, BenchError> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BenchError::Invalid("t_f grid must be strictly increasing".into()));
    }
    grid.par_iter().map(|&t| sweep_point(p, t, ns, opts)).collect()
}

/// Index of the maximum, if it is interior and the only local maximum.
pub fn unique_interior_max(values: &[f64]) -> Option<usize> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let k = (0..n).max_by(|&a, &b| values[a].total_cmp(&values[b]))?;
    if k == 0 || k == n - 1 {
        return None;
    }
    let rising = values[..=k].windows(2).all(|w| w[1] >= w[0]);
    let falling = values[k..].windows(2).all(|w| w[1] <= w[0]);
    (rising && falling).then_some(k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationResult {
    pub ns: Vec<usize>,
    pub values: Vec<f64>,
    pub delta_f_inf: f64,
    pub amplitude: f64,
    pub exponent: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    /// Standard error of `ΔF_∞`; `None` with no residual degrees of freedom.
    pub sigma: Option<f64>,
    pub n_fit: usize,
    pub model: String,
}

struct LinearFit {
    c0: f64,
    a: f64,
    rss: f64,
    inv00: f64,
    condition: f64,
}

fn linear_fit(ns: &[f64], ys: &[f64], p: f64) -> LinearFit {
    let m = ns.len() as f64;
    let xs: Vec<f64> = ns.iter().map(|n| n.powf(-p)).collect();
    let sx: f64 = xs.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sy: f64 = ys.iter().sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let det = m * sxx - sx * sx;
    let a = (m * sxy - sx * sy) / det;
    let c0 = (sy - a * sx) / m;
    let rss = xs.iter().zip(ys).map(|(x, y)| (y - c0 - a * x).powi(2)).sum();
    let tr = m + sxx;
    let disc = ((m - sxx).powi(2) + 4.0 * sx * sx).sqrt();
    let condition = (tr + disc) / (tr - disc).max(f64::MIN_POSITIVE);
    LinearFit {
        c0,
        a,
        rss,
        inv00: sxx / det,
        condition,
    }
}

/// Fit `ΔF(N) = ΔF_∞ + a/N^p`, `p ∈ [0.5, 3]`, over the largest-`N` half.
pub fn extrapolate(ns: &[usize], values: &[f64]) -> Result<ExtrapolationResult, BenchError> {
    if ns.len() != values.len() {
        return Err(BenchError::Invalid("ns and values differ in length".into()));
    }
    if ns.len() < 4 {
        return Err(BenchError::TooFewPoints(ns.len()));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BenchError::NotIncreasing);
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(BenchError::NonFinite(ns[k]));
    }
    let usable: Vec<usize> = (0..ns.len()).filter(|&i| ns[i] >= 1).collect();
    let n_fit = (usable.len() / 2).max(3);
    if usable.len() < n_fit {
        return Err(BenchError::TooFewPoints(usable.len()));
    }
    let idx = &usable[usable.len() - n_fit..];
    let xn: Vec<f64> = idx.iter().map(|&i| ns[i] as f64).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| values[i]).collect();

    let rss = |p: f64| linear_fit(&xn, &ys, p).rss;
    let (lo, hi) = (0.5, 3.0);
    let steps = 250;
    let mut best_p = lo;
    let mut best = f64::INFINITY;
    for k in 0..=steps {
        let p = lo + (hi - lo) * k as f64 / steps as f64;
        let r = rss(p);
        if r < best {
            best = r;
            best_p = p;
        }
    }
    // golden-section polish inside the neighbouring grid cells
    let h = (hi - lo) / steps as f64;
    let (mut a, mut b) = ((best_p - h).max(lo), (best_p + h).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..60 {
        if rss(c) < rss(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let p_mid = 0.5 * (a + b);
    let p = if rss(p_mid) <= best { p_mid } else { best_p };
    let fit = linear_fit(&xn, &ys, p);
    if !(fit.condition < 1e12) || !fit.c0.is_finite() {
        return Err(BenchError::IllConditioned {
            p,
            condition: fit.condition,
        });
    }
    let dof = n_fit as f64 - 3.0;
    let sigma = (dof > 0.0).then(|| (fit.rss / dof * fit.inv00).sqrt());
    Ok(ExtrapolationResult {
        ns: ns.to_vec(),
        values: values.to_vec(),
        delta_f_inf: fit.c0,
        amplitude: fit.a,
        exponent: p,
        residual: (fit.rss / n_fit as f64).sqrt(),
        sigma,
        n_fit,
        model: "dF_inf + a/N^p".into(),
    })
}

/// Rates for an asymmetry `λ = (γ₂ᴿ − γ₁ᴿ)/γ_tot` at fixed `γ₂ᴿ`:
/// `γ₁ᴿ = γ₂ᴿ(1 − λ)/(1 + λ)`.
pub fn params_for_lambda(base: &LambdaParams, lambda: f64) -> Result<LambdaParams, BenchError> {
    if !(-1.0..=1.0).contains(&lambda) || lambda == -1.0 {
        return Err(BenchError::Invalid(format!("lambda = {lambda} outside (-1, 1]")));
    }
    let mut p = *base;
    p.gamma1_r = base.gamma2_r * (1.0 - lambda) / (1.0 + lambda);
    Ok(p)
}

/// `2c(r₁,r₂)√(κγ_tot)/G_max` for PAP; `ΔF_min` by quadrature otherwise.
pub fn analytic_bound(p: &LambdaParams) -> Result<f64, BenchError> {
    match (p.constraint, p.ratios()) {
        (Constraint::Pap { g_max }, Some((r1, r2))) => {
            Ok(2.0 * pap_prefactor(r1, r2)? * (p.kappa_tot() * p.gamma_tot()).sqrt() / g_max)
        }
        _ => Ok(minimal_loss(p)?),
    }
}

fn min_coupling(p: &LambdaParams) -> f64 {
    match p.constraint {
        Constraint::Pap { g_max } => g_max,
        Constraint::Bounded { g1_max, g2_max } => g1_max.min(g2_max),
    }
}

// Transfer time minimizing the analytic loss of the linear-θ protocol.
fn linear_time_guess(p: &LambdaParams) -> f64 {
    let loss = |t: f64| protocol_loss(&LinearTheta { t_f: t }, p).unwrap_or(f64::INFINITY);
    let mut t_hi = 1.0;
    while loss(2.0 * t_hi) < loss(t_hi) && t_hi < 1e8 {
        t_hi *= 2.0;
    }
    let (mut a, mut b) = ((t_hi / 4.0).ln(), (4.0 * t_hi).ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if loss(c.exp()) < loss(d.exp()) {
            b = d;
        } else {
            a = c;
        }
    }
    (0.5 * (a + b)).exp()
}

/// Minimize the simulated loss over both `t_f` and `N` coefficients.
///
/// `warm` is a previous optimum whose `t_f` and padded coefficients seed
/// the search.
pub fn optimize_time_and_pulse(
    p: &LambdaParams,
    n: usize,
    warm: Option<&OptimizationResult>,
    opts: &OptimizeOptions,
) -> Result<OptimizationResult, BenchError> {
    p.validate()?;
    let mut starts: Vec<(String, Vec<f64>)> = Vec::new();
    if let Some(w) = warm {
        let mut x = vec![w.t_f.ln()];
        let mut beta = scaled_coeffs(w);
        beta.resize(n, 0.0);
        x.extend(beta);
        starts.push(("warm".into(), x));
    } else {
        let t0 = linear_time_guess(p);
        let mut x = vec![t0.ln()];
        x.extend(vec![0.0; n]);
        starts.push(("zero".into(), x));
    }
    if opts.n_seeds > 2 {
        // The boundary non-adiabatic amplitudes interfere with period 2π/G,
        // leaving local minima in t_f one period apart.
        let period = 2.0 * std::f64::consts::PI / min_coupling(p);
        let x0 = starts[0].1.clone();
        for shift in [period, -period] {
            let t = x0[0].exp() + shift;
            if t > 0.5 * x0[0].exp() {
                let mut x = x0.clone();
                x[0] = t.ln();
                starts.push(("shifted".into(), x));
            }
        }
    }
    if opts.n_seeds > 1 && n > 0 {
        // analytic projections at the optimal time (when finite) and at the
        // incumbent time
        let mut times: Vec<f64> = transfer_time(0.0, p).into_iter().collect();
        times.push(starts[0].1[0].exp());
        for t_a in times {
            if let Some(beta) = analytic_seed(p, t_a, n) {
                let mut x = vec![t_a.ln()];
                x.extend(beta);
                if !starts.iter().any(|(_, y)| *y == x) {
                    starts.push(("analytic".into(), x));
                }
            }
        }
    }
    let mut best: Option<OptimizationResult> = None;
    let mut evals = 0;
    for (label, x0) in starts {
        let r = minimize(
            |x| loss_of(p, x[0].exp(), &x[1..], &opts.sim),
            &x0,
            &opts.nelder_mead,
        );
        evals += r.evals;
        if best.as_ref().map_or(true, |b| r.f < b.loss()) {
            let t_f = r.x[0].exp();
            let sc = scale(t_f);
            best = Some(OptimizationResult {
                n,
                coeffs: r.x[1..].iter().map(|b| b * sc).collect(),
                fidelity: 1.0 - r.f,
                t_f,
                evaluations: 0,
                converged: r.converged,
                history: r.history,
                seed: label,
            });
        }
    }
    let mut best = best.expect("at least one start");
    best.evaluations = evals;
    if !best.fidelity.is_finite() {
        return Err(BenchError::NonFinite(n));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub lambda: f64,
    pub gamma1_r: f64,
    pub gamma2_r: f64,
    /// Time-optimized results for `N = 0..=n_max`.
    pub results: Vec<OptimizationResult>,
    pub extrapolation: Option<ExtrapolationResult>,
    pub extrapolation_error: Option<String>,
    pub bound: f64,
}

impl LambdaRow {
    pub fn losses(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.loss()).collect()
    }
}

/// One asymmetry point: nested time-and-pulse optimization up to `n_max`,
/// then extrapolation in `N`.
pub fn lambda_point(
    base: &LambdaParams,
    lambda: f64,
    n_max: usize,
    opts: &OptimizeOptions,
) -> Result<LambdaRow, BenchError> {
    let p = params_for_lambda(base, lambda)?;
    let mut results: Vec<OptimizationResult> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let r = optimize_time_and_pulse(&p, n, results.last(), opts)?;
        results.push(r);
    }
    let ns: Vec<usize> = (0..=n_max).collect();
    let losses: Vec<f64> = results.iter().map(|r| r.loss()).collect();
    let (extrapolation, extrapolation_error) = match extrapolate(&ns, &losses) {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(LambdaRow {
        lambda,
        gamma1_r: p.gamma1_r,
        gamma2_r: p.gamma2_r,
        results,
        extrapolation,
        extrapolation_error,
        bound: analytic_bound(&p)?,
    })
}

/// Asymmetry sweep; rows come back in `λ` order.
pub fn lambda_sweep(
    base: &LambdaParams,
    lambdas: &[f64],
    n_max: usize,
    opts: &OptimizeOptions,
) -> Result<Vec<LambdaRow>, BenchError> {
    lambdas
        .par_iter()
        .map(|&l| lambda_point(base, l, n_max, opts))
        .collect()
}

// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! Two qubits coupled through a lossy bus mode.
//!
//! Resonant rotating frame, four-level basis `|e,g,0⟩, |g,e,0⟩, |g,g,1⟩,
//! |g,g,0⟩` (indices [`EG0`]…[`GG0`]). The couplings are parameterized by
//! a mixing angle, `G₁ = G sinθ`, `G₂ = G cosθ`, and the dark state
//! `|E₁⟩ = cosθ|e,g,0⟩ − sinθ|g,e,0⟩` carries the excitation from qubit 1
//! (`θ = 0`) to qubit 2 (`θ = π/2`).
//!
//! Along the dark state the leading-order loss is
//! `ΔF = ∫ κ θ̇²/G² + γ^φ sin²2θ + γ₁ cos²θ + γ₂ sin²θ dt`, a particle of
//! position `θ` in the potential `V(θ) = −(γ₁cos²θ + γ₂sin²θ + γ^φ sin²2θ)`.
//! Energy conservation turns the optimal transfer into one-dimensional
//! quadratures in `θ`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adiabatic::{AdiabaticError, Channel, HamiltonianFamily};
use crate::operator::{Operator, C64};
use crate::path::ControlPath;
use crate::quadrature::{cumulative, integrate_with_breaks, QuadratureError, Tolerance};

pub const EG0: usize = 0;
pub const GE0: usize = 1;
pub const GG1: usize = 2;
pub const GG0: usize = 3;

/// Index of `|E₁⟩` in the spectra of [`lambda_family`].
///
/// The family is diagonalized in the single-excitation sector first
/// (`E₋, E₁, E₊`) and then the ground sector (`E₀`).
pub const DARK_LEVEL: usize = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LambdaError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("optimal transfer time diverges (potential vanishes at theta = {theta})")]
    Divergent { theta: f64 },
    #[error("energy {energy} does not exceed the potential maximum {v_max}")]
    EnergyTooLow { energy: f64, v_max: f64 },
    #[error("wrong regime: {0}")]
    WrongRegime(String),
    #[error("smoothing window {delta_t} must lie in (0, {half})")]
    SmoothingWindow { delta_t: f64, half: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Adiabatic(#[from] AdiabaticError),
}

/// How the two couplings are limited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Constraint {
    /// Parallel adiabatic passage: `G₁² + G₂² = G_max²` throughout.
    Pap { g_max: f64 },
    /// Each coupling bounded separately.
    Bounded { g1_max: f64, g2_max: f64 },
}

/// Rates of the Λ model, in units of a reference coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaParams {
    #[serde(default)]
    pub gamma1_r: f64,
    #[serde(default)]
    pub gamma2_r: f64,
    #[serde(default)]
    pub gamma1_phi: f64,
    #[serde(default)]
    pub gamma2_phi: f64,
    #[serde(default)]
    pub kappa_r: f64,
    #[serde(default)]
    pub kappa_phi: f64,
    pub constraint: Constraint,
    /// Qubit frequency; never enters the rotating-frame dynamics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

impl LambdaParams {
    pub fn pap(g_max: f64) -> Self {
        Self::zero_rates(Constraint::Pap { g_max })
    }

    pub fn bounded(g1_max: f64, g2_max: f64) -> Self {
        Self::zero_rates(Constraint::Bounded { g1_max, g2_max })
    }

    fn zero_rates(constraint: Constraint) -> Self {
        Self {
            gamma1_r: 0.0,
            gamma2_r: 0.0,
            gamma1_phi: 0.0,
            gamma2_phi: 0.0,
            kappa_r: 0.0,
            kappa_phi: 0.0,
            constraint,
            omega: None,
        }
    }

    pub fn with_kappa(mut self, kappa_r: f64) -> Self {
        self.kappa_r = kappa_r;
        self
    }

    pub fn with_relaxation(mut self, gamma1_r: f64, gamma2_r: f64) -> Self {
        self.gamma1_r = gamma1_r;
        self.gamma2_r = gamma2_r;
        self
    }

    pub fn with_dephasing(mut self, gamma1_phi: f64, gamma2_phi: f64) -> Self {
        self.gamma1_phi = gamma1_phi;
        self.gamma2_phi = gamma2_phi;
        self
    }

    pub fn validate(&self) -> Result<(), LambdaError> {
        let rates = [
            ("gamma1_r", self.gamma1_r),
            ("gamma2_r", self.gamma2_r),
            ("gamma1_phi", self.gamma1_phi),
            ("gamma2_phi", self.gamma2_phi),
            ("kappa_r", self.kappa_r),
            ("kappa_phi", self.kappa_phi),
        ];
        for (name, r) in rates {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(LambdaError::InvalidParams(format!("{name} = {r} must be finite and >= 0")));
            }
        }
        let couplings: &[f64] = match &self.constraint {
            Constraint::Pap { g_max } => &[*g_max],
            Constraint::Bounded { g1_max, g2_max } => &[*g1_max, *g2_max],
        };
        if couplings.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(LambdaError::InvalidParams("couplings must be finite and > 0".into()));
        }
        Ok(())
    }

    pub fn kappa_tot(&self) -> f64 {
        self.kappa_r + self.kappa_phi
    }

    pub fn gamma_phi_tot(&self) -> f64 {
        self.gamma1_phi + self.gamma2_phi
    }

    pub fn gamma_tot(&self) -> f64 {
        self.gamma1_r + self.gamma2_r + self.gamma_phi_tot()
    }

    /// `(r₁, r₂) = (γ₁ᴿ, γ₂ᴿ)/γ_tot`, or `None` when all qubit rates vanish.
    pub fn ratios(&self) -> Option<(f64, f64)> {
        let g = self.gamma_tot();
        (g > 0.0).then(|| (self.gamma1_r / g, self.gamma2_r / g))
    }

    /// `θ̄ = arctan(G₁max/G₂max)` for bounded couplings.
    pub fn theta_bar(&self) -> Option<f64> {
        match self.constraint {
            Constraint::Pap { .. } => None,
            Constraint::Bounded { g1_max, g2_max } => Some((g1_max / g2_max).atan()),
        }
    }

    /// The same system with the qubits relabelled.
    pub fn swapped(&self) -> Self {
        let mut p = *self;
        std::mem::swap(&mut p.gamma1_r, &mut p.gamma2_r);
        std::mem::swap(&mut p.gamma1_phi, &mut p.gamma2_phi);
        if let Constraint::Bounded { g1_max, g2_max } = self.constraint {
            p.constraint = Constraint::Bounded {
                g1_max: g2_max,
                g2_max: g1_max,
            };
        }
        p
    }

    /// The formalism needs a bus much lossier than the qubits.
    pub fn outside_validity(&self) -> bool {
        self.kappa_tot() < 10.0 * self.gamma_tot()
    }

}

/// Instantaneous eigenstates at mixing angle `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEigenstates {
    pub e1: DVector<C64>,
    pub e_plus: DVector<C64>,
    pub e_minus: DVector<C64>,
    pub e0: DVector<C64>,
}

fn real_vec(x: [f64; 4]) -> DVector<C64> {
    DVector::from_iterator(4, x.iter().map(|&v| C64::new(v, 0.0)))
}

pub fn eigenstates(theta: f64) -> LambdaEigenstates {
    let (s, c) = theta.sin_cos();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    LambdaEigenstates {
        e1: real_vec([c, -s, 0.0, 0.0]),
        e_plus: real_vec([h * s, h * c, h, 0.0]),
        e_minus: real_vec([h * s, h * c, -h, 0.0]),
        e0: real_vec([0.0, 0.0, 0.0, 1.0]),
    }
}

/// The two coupling generators `a†σ₁⁻ + h.c.` and `a†σ₂⁻ + h.c.`.
pub fn generators() -> [Operator; 2] {
    let mut h1 = Operator::transition(4, GG1, EG0);
    h1 = &h1 + &Operator::transition(4, EG0, GG1);
    let mut h2 = Operator::transition(4, GG1, GE0);
    h2 = &h2 + &Operator::transition(4, GE0, GG1);
    [h1, h2]
}

/// Channel labels in [`lambda_family`] order.
pub const CHANNEL_LABELS: [&str; 6] = [
    "kappa_r",
    "gamma1_r",
    "gamma2_r",
    "gamma1_phi",
    "gamma2_phi",
    "kappa_phi",
];

/// Jump operators `a, σ₁⁻, σ₂⁻, σ₁ᶻ, σ₂ᶻ, a†a` restricted to the four levels.
pub fn jump_operators() -> [Operator; 6] {
    [
        Operator::transition(4, GG0, GG1),
        Operator::transition(4, GG0, EG0),
        Operator::transition(4, GG0, GE0),
        Operator::diagonal(&[1.0, -1.0, -1.0, -1.0]),
        Operator::diagonal(&[-1.0, 1.0, -1.0, -1.0]),
        Operator::transition(4, GG1, GG1),
    ]
}

pub fn channel_rates(p: &LambdaParams) -> [f64; 6] {
    [
        p.kappa_r,
        p.gamma1_r,
        p.gamma2_r,
        p.gamma1_phi,
        p.gamma2_phi,
        p.kappa_phi,
    ]
}

/// The four-level model as a generic controlled family with controls `(G₁, G₂)`.
pub fn lambda_family(p: &LambdaParams) -> Result<HamiltonianFamily, LambdaError> {
    p.validate()?;
    let channels = jump_operators()
        .into_iter()
        .zip(channel_rates(p))
        .zip(CHANNEL_LABELS)
        .map(|((op, rate), label)| Channel::new(label, op, rate))
        .collect();
    Ok(HamiltonianFamily::with_sectors(
        generators().to_vec(),
        channels,
        vec![vec![EG0, GE0, GG1], vec![GG0]],
    )?)
}

/// `κ θ̇²/G² + γ^φ sin²2θ + γ₁ cos²θ + γ₂ sin²θ`.
pub fn loss_integrand(theta: f64, theta_dot: f64, g: f64, p: &LambdaParams) -> Result<f64, LambdaError> {
    if !(g > 0.0) {
        return Err(LambdaError::Domain(format!("coupling G = {g} must be > 0")));
    }
    Ok(p.kappa_tot() * theta_dot * theta_dot / (g * g) - potential_theta(theta, p))
}

pub fn potential_theta(theta: f64, p: &LambdaParams) -> f64 {
    let (s, c) = theta.sin_cos();
    let s2 = (2.0 * theta).sin();
    -(p.gamma1_r * c * c + p.gamma2_r * s * s + p.gamma_phi_tot() * s2 * s2)
}

/// `max_θ V(θ) = −min(γ₁ᴿ, γ₂ᴿ)`; `|V|` is concave in `sin²θ`.
pub fn potential_max(p: &LambdaParams) -> f64 {
    -p.gamma1_r.min(p.gamma2_r)
}

/// Largest total coupling available at mixing angle `θ`.
pub fn gmax(theta: f64, p: &LambdaParams) -> f64 {
    match p.constraint {
        Constraint::Pap { g_max } => g_max,
        Constraint::Bounded { g1_max, g2_max } => {
            if theta < (g1_max / g2_max).atan() {
                g2_max / theta.cos()
            } else {
                g1_max / theta.sin()
            }
        }
    }
}

/// `dG_max/dθ` (one-sided, from the branch containing `θ`).
pub fn gmax_derivative(theta: f64, p: &LambdaParams) -> f64 {
    match p.constraint {
        Constraint::Pap { .. } => 0.0,
        Constraint::Bounded { g1_max, g2_max } => {
            let (s, c) = theta.sin_cos();
            if theta < (g1_max / g2_max).atan() {
                g2_max * s / (c * c)
            } else {
                -g1_max * c / (s * s)
            }
        }
    }
}

/// `(G₁, G₂) = G_max(θ)(sinθ, cosθ)`.
pub fn couplings(theta: f64, p: &LambdaParams) -> [f64; 2] {
    let g = gmax(theta, p);
    let (s, c) = theta.sin_cos();
    [g * s, g * c]
}

/// `d(G₁, G₂)/dθ` along the constraint.
pub fn couplings_derivative(theta: f64, p: &LambdaParams) -> [f64; 2] {
    let g = gmax(theta, p);
    let dg = gmax_derivative(theta, p);
    let (s, c) = theta.sin_cos();
    [dg * s + g * c, dg * c - g * s]
}

fn quad_tol() -> Tolerance {
    Tolerance::new(1e-15, 1e-13)
}

fn energy_tol() -> Tolerance {
    Tolerance {
        abs: 1e-15,
        rel: 1e-11,
        max_intervals: 20_000,
    }
}

fn check_energy(energy: f64, p: &LambdaParams) -> Result<(), LambdaError> {
    p.validate()?;
    if !energy.is_finite() {
        return Err(LambdaError::Domain(format!("energy {energy} is not finite")));
    }
    let v_max = potential_max(p);
    if energy < v_max || (energy == v_max && energy != 0.0) {
        return Err(LambdaError::EnergyTooLow { energy, v_max });
    }
    if energy == 0.0 {
        // ℰ − V vanishes quadratically where V = 0, so ∫dθ/√(ℰ−V) diverges
        if p.gamma1_r == 0.0 {
            return Err(LambdaError::Divergent { theta: 0.0 });
        }
        if p.gamma2_r == 0.0 {
            return Err(LambdaError::Divergent { theta: FRAC_PI_2 });
        }
    }
    Ok(())
}

// A mixing angle carried as its exact sine and cosine, so that both ends of
// [0, π/2] keep full relative precision.
#[derive(Clone, Copy)]
struct Angle {
    s: f64,
    c: f64,
    below_bar: bool,
}

impl Angle {
    fn gmax(&self, p: &LambdaParams) -> f64 {
        match p.constraint {
            Constraint::Pap { g_max } => g_max,
            Constraint::Bounded { g1_max, g2_max } => {
                if self.below_bar {
                    g2_max / self.c
                } else {
                    g1_max / self.s
                }
            }
        }
    }

    fn potential(&self, p: &LambdaParams) -> f64 {
        let (x, y) = (self.s * self.s, self.c * self.c);
        -(p.gamma1_r * y + p.gamma2_r * x + 4.0 * p.gamma_phi_tot() * x * y)
    }

    // V_max − V ≥ 0 without cancellation near the maximum
    fn depth(&self, p: &LambdaParams) -> f64 {
        let (x, y) = (self.s * self.s, self.c * self.c);
        let deph = 4.0 * p.gamma_phi_tot() * x * y;
        if p.gamma1_r <= p.gamma2_r {
            x * (p.gamma2_r - p.gamma1_r) + deph
        } else {
            y * (p.gamma1_r - p.gamma2_r) + deph
        }
    }
}

// ∫₀^{π/2} f dθ, split at π/4 with the upper half integrated in π/2 − θ.
// Breaks are graded geometrically toward both ends, down to `width`.
fn angle_integral<F: Fn(Angle) -> f64>(p: &LambdaParams, width: f64, tol: Tolerance, f: F) -> Result<f64, LambdaError> {
    let tb = p.theta_bar();
    let mut graded = Vec::new();
    let mut d = 0.25;
    while d > 1e-2 * width.clamp(1e-150, 1.0) {
        graded.push(d);
        d *= 0.25;
    }
    let q = std::f64::consts::FRAC_PI_4;
    let mut lower_breaks = graded.clone();
    let mut upper_breaks = graded;
    if let Some(b) = tb {
        lower_breaks.push(b);
        upper_breaks.push(FRAC_PI_2 - b);
    }
    let lower = integrate_with_breaks(
        |th: f64| {
            let (s, c) = th.sin_cos();
            f(Angle {
                s,
                c,
                below_bar: tb.map_or(true, |b| th < b),
            })
        },
        0.0,
        q,
        &lower_breaks,
        tol,
    )?;
    let upper = integrate_with_breaks(
        |d: f64| {
            let (sd, cd) = d.sin_cos();
            f(Angle {
                s: cd,
                c: sd,
                below_bar: tb.map_or(true, |b| d > FRAC_PI_2 - b),
            })
        },
        0.0,
        q,
        &upper_breaks,
        tol,
    )?;
    Ok(lower.value + upper.value)
}

// The energy functions below take the offset u = ℰ − V_max, so that
// ℰ − V(θ) = u + depth(θ) keeps full relative precision as ℰ → V_max.
fn peak_width(u: f64, p: &LambdaParams) -> f64 {
    (u / p.gamma_tot().max(1e-300)).sqrt()
}

fn time_at_offset(u: f64, p: &LambdaParams) -> Result<f64, LambdaError> {
    let k = p.kappa_tot();
    angle_integral(p, peak_width(u, p), energy_tol(), |a| (k / (u + a.depth(p))).sqrt() / a.gmax(p))
}

fn loss_at_offset(u: f64, p: &LambdaParams) -> Result<f64, LambdaError> {
    let k = p.kappa_tot().sqrt();
    angle_integral(p, peak_width(u, p), energy_tol(), |a| {
        let e = u + a.depth(p);
        if e == 0.0 {
            return 0.0;
        }
        // (ℰ − 2V)/√(ℰ − V) = √(ℰ − V) + |V|/√(ℰ − V)
        k * (e.sqrt() - a.potential(p) / e.sqrt()) / a.gmax(p)
    })
}

/// `t_f(ℰ) = ∫₀^{π/2} dθ/G_max √(κ/(ℰ − V))`.
pub fn transfer_time(energy: f64, p: &LambdaParams) -> Result<f64, LambdaError> {
    check_energy(energy, p)?;
    time_at_offset(energy - potential_max(p), p)
}

/// `ΔF_opt(ℰ) = ∫ √κ/G_max (ℰ − 2V)/√(ℰ − V) dθ`.
///
/// At `ℰ = 0` this stays finite even when the transfer time diverges.
pub fn optimal_loss(energy: f64, p: &LambdaParams) -> Result<f64, LambdaError> {
    match check_energy(energy, p) {
        Err(LambdaError::Divergent { .. }) => {}
        other => other?,
    }
    loss_at_offset(energy - potential_max(p), p)
}

/// `ΔF_min = 2∫₀^{π/2} √(κ|V|)/G_max dθ`.
pub fn minimal_loss(p: &LambdaParams) -> Result<f64, LambdaError> {
    optimal_loss(0.0, p)
}

/// Energy whose optimal path takes exactly `t_f`.
pub fn energy_for_time(t_f: f64, p: &LambdaParams) -> Result<f64, LambdaError> {
    p.validate()?;
    if !(t_f > 0.0) {
        return Err(LambdaError::Domain(format!("t_f = {t_f} must be > 0")));
    }
    if p.kappa_tot() == 0.0 {
        return Err(LambdaError::WrongRegime("t_f(E) vanishes identically when kappa = 0".into()));
    }
    // bisection in log(ℰ − V_max); t_f is decreasing in ℰ
    let time = |log_u: f64| time_at_offset(log_u.exp(), p);
    let mut lo = (p.gamma_tot().max(p.kappa_tot()) * 1e-30).max(1e-300).ln();
    let mut hi = 10.0f64;
    while time(hi)? > t_f {
        hi += 10.0;
        if hi > 700.0 {
            return Err(LambdaError::Domain(format!("t_f = {t_f} too short")));
        }
    }
    if time(lo)? < t_f {
        return Err(LambdaError::Domain(format!("t_f = {t_f} too long")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if time(mid)? > t_f {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(potential_max(p) + (0.5 * (lo + hi)).exp())
}

fn check_ratios(r1: f64, r2: f64) -> Result<(), LambdaError> {
    if !(r1 >= 0.0 && r2 >= 0.0 && r1 + r2 <= 1.0 + 1e-12) {
        return Err(LambdaError::Domain(format!(
            "need r1, r2 >= 0 and r1 + r2 <= 1, got ({r1}, {r2})"
        )));
    }
    Ok(())
}

/// `c(r₁, r₂) = ∫₀^{π/2} √(r₁cos²θ + r₂sin²θ + (1−r₁−r₂)sin²2θ) dθ`.
pub fn pap_prefactor(r1: f64, r2: f64) -> Result<f64, LambdaError> {
    check_ratios(r1, r2)?;
    let rp = (1.0 - r1 - r2).max(0.0);
    let r = integrate_with_breaks(
        |th: f64| {
            let (s, c) = th.sin_cos();
            let s2 = (2.0 * th).sin();
            (r1 * c * c + r2 * s * s + rp * s2 * s2).sqrt()
        },
        0.0,
        FRAC_PI_2,
        &[],
        quad_tol(),
    )?;
    Ok(r.value)
}

fn g_poly(r1: f64, r2: f64, x: f64) -> f64 {
    let x2 = x * x;
    (r1 * x2 + r2 * (1.0 - x2) + 4.0 * (1.0 - r1 - r2).max(0.0) * x2 * (1.0 - x2)).max(0.0)
}

/// Prefactor for bounded couplings:
/// `c = (1/sinθ̄)∫₀^{cosθ̄}√g(r₁,r₂,x)dx + (1/cosθ̄)∫₀^{sinθ̄}√g(r₂,r₁,x)dx`,
/// so that `ΔF_min = 2c√(κγ)/√(G₁max² + G₂max²)`.
pub fn general_prefactor(r1: f64, r2: f64, theta_bar: f64) -> Result<f64, LambdaError> {
    check_ratios(r1, r2)?;
    if !(theta_bar > 0.0 && theta_bar < FRAC_PI_2) {
        return Err(LambdaError::Domain(format!("theta_bar = {theta_bar} outside (0, pi/2)")));
    }
    let (s, c) = theta_bar.sin_cos();
    let a = integrate_with_breaks(|x| g_poly(r1, r2, x).sqrt(), 0.0, c, &[], quad_tol())?;
    let b = integrate_with_breaks(|x| g_poly(r2, r1, x).sqrt(), 0.0, s, &[], quad_tol())?;
    Ok(a.value / s + b.value / c)
}

/// `c₁ = c·sinθ̄`: the prefactor relative to the weaker coupling `G₁max`.
pub fn weak_coupling_prefactor(r1: f64, r2: f64, theta_bar: f64) -> Result<f64, LambdaError> {
    if theta_bar > std::f64::consts::FRAC_PI_4 + 1e-15 {
        return Err(LambdaError::Domain(format!(
            "theta_bar = {theta_bar} > pi/4: qubit 1 is not the weaker coupling"
        )));
    }
    Ok(general_prefactor(r1, r2, theta_bar)? * theta_bar.sin())
}

/// Which analytic limit a parameter set falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    EqualRelaxation,
    FirstQubitOnly,
    SecondQubitOnly,
    DephasingOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub limit: Limit,
    pub delta_f_min: f64,
}

/// `ΔF_min` from the exact limiting formulas, if one applies.
pub fn closed_form(p: &LambdaParams) -> Option<ClosedForm> {
    p.validate().ok()?;
    let tot = p.gamma_tot();
    if tot == 0.0 {
        return None;
    }
    let zero = |x: f64| x.abs() <= 1e-12 * tot;
    let k = p.kappa_tot();
    let (g1, g2, tb) = match p.constraint {
        Constraint::Pap { g_max } => (g_max, g_max, None),
        Constraint::Bounded { g1_max, g2_max } => (g1_max, g2_max, Some((g1_max / g2_max).atan())),
    };
    let deph = p.gamma_phi_tot();
    let (limit, value) = if zero(deph) && zero(p.gamma1_r - p.gamma2_r) {
        let gamma = 0.5 * (p.gamma1_r + p.gamma2_r);
        let v = match tb {
            None => PI * (k * gamma).sqrt() / g1,
            Some(_) => 2.0 * (k * gamma).sqrt() * (1.0 / (g1 * g1) + 1.0 / (g2 * g2)).sqrt(),
        };
        (Limit::EqualRelaxation, v)
    } else if zero(deph) && zero(p.gamma2_r) {
        let v = match tb {
            None => 2.0 * (k * p.gamma1_r).sqrt() / g1,
            Some(t) => (k * p.gamma1_r).sqrt() * (1.0 / g1 + t / g2),
        };
        (Limit::FirstQubitOnly, v)
    } else if zero(deph) && zero(p.gamma1_r) {
        let v = match tb {
            None => 2.0 * (k * p.gamma2_r).sqrt() / g1,
            Some(t) => (k * p.gamma2_r).sqrt() * (1.0 / g2 + (FRAC_PI_2 - t) / g1),
        };
        (Limit::SecondQubitOnly, v)
    } else if zero(p.gamma1_r) && zero(p.gamma2_r) {
        let v = match tb {
            None => 2.0 * (k * deph).sqrt() / g1,
            Some(t) => {
                4.0 / 3.0 * (k * deph / (g1 * g1 + g2 * g2)).sqrt() * (1.0 / t.sin() + 1.0 / t.cos() - 1.0)
            }
        };
        (Limit::DephasingOnly, v)
    } else {
        return None;
    };
    Some(ClosedForm {
        limit,
        delta_f_min: value,
    })
}

/// Optimal transfer time for equal relaxation and no dephasing,
/// `√(κ/γ₁ᴿ) √(1/G₁max² + 1/G₂max²)`.
pub fn optimal_time_equal_rates(p: &LambdaParams) -> Result<f64, LambdaError> {
    p.validate()?;
    let tot = p.gamma_tot();
    let (g1, g2) = match p.constraint {
        Constraint::Bounded { g1_max, g2_max } => (g1_max, g2_max),
        Constraint::Pap { .. } => {
            return Err(LambdaError::WrongRegime("needs bounded couplings".into()));
        }
    };
    if !(p.gamma1_r > 0.0)
        || (p.gamma1_r - p.gamma2_r).abs() > 1e-12 * tot
        || p.gamma_phi_tot() > 1e-12 * tot
    {
        return Err(LambdaError::WrongRegime(
            "needs gamma1_r = gamma2_r > 0 and no dephasing".into(),
        ));
    }
    Ok((p.kappa_tot() / p.gamma1_r).sqrt() * (1.0 / (g1 * g1) + 1.0 / (g2 * g2)).sqrt())
}

/// A mixing-angle protocol `θ(t)` on `[0, t_f]`.
pub trait ThetaProfile: Send + Sync {
    fn duration(&self) -> f64;
    fn theta(&self, t: f64) -> f64;
    fn theta_dot(&self, t: f64) -> f64;
    fn boundary_smooth(&self) -> bool {
        false
    }
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<T: ThetaProfile + ?Sized> ThetaProfile for &T {
    fn duration(&self) -> f64 {
        (**self).duration()
    }
    fn theta(&self, t: f64) -> f64 {
        (**self).theta(t)
    }
    fn theta_dot(&self, t: f64) -> f64 {
        (**self).theta_dot(t)
    }
    fn boundary_smooth(&self) -> bool {
        (**self).boundary_smooth()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

impl<T: ThetaProfile + ?Sized> ThetaProfile for Box<T> {
    fn duration(&self) -> f64 {
        (**self).duration()
    }
    fn theta(&self, t: f64) -> f64 {
        (**self).theta(t)
    }
    fn theta_dot(&self, t: f64) -> f64 {
        (**self).theta_dot(t)
    }
    fn boundary_smooth(&self) -> bool {
        (**self).boundary_smooth()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

/// `θ(t) = πt/(2t_f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTheta {
    pub t_f: f64,
}

impl ThetaProfile for LinearTheta {
    fn duration(&self) -> f64 {
        self.t_f
    }
    fn theta(&self, t: f64) -> f64 {
        FRAC_PI_2 * t / self.t_f
    }
    fn theta_dot(&self, _t: f64) -> f64 {
        FRAC_PI_2 / self.t_f
    }
}

/// A `θ(t)` protocol mapped onto the couplings through the constraint.
#[derive(Debug, Clone)]
pub struct LambdaPath<T> {
    pub profile: T,
    pub params: LambdaParams,
}

impl<T: ThetaProfile> LambdaPath<T> {
    pub fn new(profile: T, params: LambdaParams) -> Self {
        Self { profile, params }
    }
}

impl<T: ThetaProfile> ControlPath for LambdaPath<T> {
    fn n_controls(&self) -> usize {
        2
    }
    fn duration(&self) -> f64 {
        self.profile.duration()
    }
    fn evaluate(&self, t: f64) -> Vec<f64> {
        couplings(self.profile.theta(t), &self.params).to_vec()
    }
    fn derivative(&self, t: f64) -> Vec<f64> {
        let th = self.profile.theta(t);
        let td = self.profile.theta_dot(t);
        couplings_derivative(th, &self.params).iter().map(|d| d * td).collect()
    }
    fn boundary_smooth(&self) -> bool {
        self.profile.boundary_smooth()
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut out = self.profile.breakpoints();
        if let Some(tb) = self.params.theta_bar() {
            out.extend(crossing_times(&self.profile, tb));
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

// Times where θ(t) crosses `level`, located by bisection on a sample grid.
fn crossing_times<T: ThetaProfile + ?Sized>(profile: &T, level: f64) -> Vec<f64> {
    let tf = profile.duration();
    let n = 512;
    let mut out = Vec::new();
    let f = |t: f64| profile.theta(t) - level;
    let mut t0 = 0.0;
    let mut f0 = f(t0);
    for k in 1..=n {
        let t1 = tf * k as f64 / n as f64;
        let f1 = f(t1);
        if f0 == 0.0 {
            out.push(t0);
        } else if f0 * f1 < 0.0 {
            let (mut a, mut b) = (t0, t1);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if (f(m) < 0.0) == (f0 < 0.0) {
                    a = m;
                } else {
                    b = m;
                }
                if b - a <= 1e-15 * tf {
                    break;
                }
            }
            out.push(0.5 * (a + b));
        }
        t0 = t1;
        f0 = f1;
    }
    out
}

/// Sample of an energy-conserving trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

/// The least-action trajectory at fixed energy `ℰ`.
#[derive(Debug, Clone)]
pub struct EnergySolution {
    pub energy: f64,
    pub t_f: f64,
    pub samples: Vec<TrajectorySample>,
    pub delta_f: f64,
    params: LambdaParams,
}

/// `θ̇ = G_max √((ℰ − V)/κ)`.
pub fn theta_velocity(theta: f64, energy: f64, p: &LambdaParams) -> f64 {
    let (s, c) = theta.sin_cos();
    let a = Angle {
        s,
        c,
        below_bar: p.theta_bar().map_or(true, |b| theta < b),
    };
    let e = energy - potential_max(p) + a.depth(p);
    gmax(theta, p) * (e.max(0.0) / p.kappa_tot()).sqrt()
}

pub fn optimal_trajectory(energy: f64, p: &LambdaParams, n_samples: usize) -> Result<EnergySolution, LambdaError> {
    check_energy(energy, p)?;
    if p.kappa_tot() == 0.0 {
        return Err(LambdaError::WrongRegime("kappa = 0 gives an instantaneous transfer".into()));
    }
    let n = n_samples.max(3);
    let mut grid: Vec<f64> = (0..n).map(|k| FRAC_PI_2 * k as f64 / (n - 1) as f64).collect();
    *grid.last_mut().unwrap() = FRAC_PI_2;
    if let Some(tb) = p.theta_bar() {
        if !grid.iter().any(|&x| (x - tb).abs() < 1e-12) {
            grid.push(tb);
            grid.sort_by(f64::total_cmp);
        }
    }
    let times = cumulative(|th| 1.0 / theta_velocity(th, energy, p), &grid, quad_tol())?;
    let samples: Vec<TrajectorySample> = grid
        .iter()
        .zip(&times)
        .map(|(&theta, &t)| TrajectorySample {
            t,
            theta,
            theta_dot: theta_velocity(theta, energy, p),
        })
        .collect();
    let t_f = *times.last().unwrap();
    Ok(EnergySolution {
        energy,
        t_f,
        samples,
        delta_f: optimal_loss(energy, p)?,
        params: *p,
    })
}

impl EnergySolution {
    pub fn params(&self) -> &LambdaParams {
        &self.params
    }

    /// `κθ̇²/G_max² + V` at every sample; constant `ℰ` along the path.
    pub fn energies(&self) -> Vec<f64> {
        let k = self.params.kappa_tot();
        self.samples
            .iter()
            .map(|s| {
                let g = gmax(s.theta, &self.params);
                k * s.theta_dot * s.theta_dot / (g * g) + potential_theta(s.theta, &self.params)
            })
            .collect()
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.samples.len();
        match self.samples.binary_search_by(|s| s.t.total_cmp(&t)) {
            Ok(k) => k.min(n - 2),
            Err(0) => 0,
            Err(k) => (k - 1).min(n - 2),
        }
    }
}

impl ThetaProfile for EnergySolution {
    fn duration(&self) -> f64 {
        self.t_f
    }

    // cubic Hermite through (t_k, θ_k) with the exact slopes θ̇_k
    fn theta(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.t_f);
        let k = self.locate(t);
        let (a, b) = (&self.samples[k], &self.samples[k + 1]);
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * a.theta
            + (u3 - 2.0 * u2 + u) * h * a.theta_dot
            + (-2.0 * u3 + 3.0 * u2) * b.theta
            + (u3 - u2) * h * b.theta_dot
    }

    fn theta_dot(&self, t: f64) -> f64 {
        theta_velocity(self.theta(t), self.energy, &self.params)
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.params.theta_bar() {
            Some(tb) => self
                .samples
                .iter()
                .filter(|s| (s.theta - tb).abs() < 1e-12)
                .map(|s| s.t)
                .collect(),
            None => Vec::new(),
        }
    }
}

/// A profile with its velocity ramped linearly to zero over `Δt` at both ends.
///
/// `θ̇_s(t) = s·w(t)·θ̇(t)` with `w(t) = min(t/Δt, 1, (t_f − t)/Δt)` and the
/// scale `s` chosen so the sweep still ends at `π/2`.
#[derive(Debug, Clone)]
pub struct SmoothedProfile<T> {
    pub raw: T,
    pub delta_t: f64,
    pub scale: f64,
    ramp_in: f64,
}

pub fn smooth_boundaries<T: ThetaProfile>(raw: T, delta_t: f64) -> Result<SmoothedProfile<T>, LambdaError> {
    let tf = raw.duration();
    if !(delta_t > 0.0 && delta_t < 0.5 * tf) {
        return Err(LambdaError::SmoothingWindow {
            delta_t,
            half: 0.5 * tf,
        });
    }
    let mut out = SmoothedProfile {
        raw,
        delta_t,
        scale: 1.0,
        ramp_in: 0.0,
    };
    out.ramp_in = out.deficit_in(delta_t)?;
    let sweep = out.raw.theta(tf) - out.raw.theta(0.0);
    let lost = out.ramp_in + out.deficit_out(tf)?;
    out.scale = sweep / (sweep - lost);
    Ok(out)
}

impl<T: ThetaProfile> SmoothedProfile<T> {
    fn window(&self, t: f64) -> f64 {
        let tf = self.raw.duration();
        (t / self.delta_t).min(1.0).min((tf - t) / self.delta_t).max(0.0)
    }

    // ∫₀^τ (1 − w) θ̇ for τ ≤ Δt
    fn deficit_in(&self, tau: f64) -> Result<f64, QuadratureError> {
        let dt = self.delta_t;
        Ok(integrate_with_breaks(|u| (1.0 - u / dt) * self.raw.theta_dot(u), 0.0, tau, &[], quad_tol())?.value)
    }

    // ∫_{t_f−Δt}^τ (1 − w) θ̇ for τ ≥ t_f − Δt
    fn deficit_out(&self, tau: f64) -> Result<f64, QuadratureError> {
        let tf = self.raw.duration();
        let dt = self.delta_t;
        let start = tf - dt;
        Ok(
            integrate_with_breaks(|u| (1.0 - (tf - u) / dt) * self.raw.theta_dot(u), start, tau, &[], quad_tol())?
                .value,
        )
    }
}

impl<T: ThetaProfile> ThetaProfile for SmoothedProfile<T> {
    fn duration(&self) -> f64 {
        self.raw.duration()
    }

    fn theta(&self, t: f64) -> f64 {
        let tf = self.raw.duration();
        let t = t.clamp(0.0, tf);
        let th0 = self.raw.theta(0.0);
        let mut deficit = if t < self.delta_t {
            self.deficit_in(t).unwrap_or(f64::NAN)
        } else {
            self.ramp_in
        };
        if t > tf - self.delta_t {
            deficit += self.deficit_out(t).unwrap_or(f64::NAN);
        }
        th0 + self.scale * (self.raw.theta(t) - th0 - deficit)
    }

    fn theta_dot(&self, t: f64) -> f64 {
        self.scale * self.window(t) * self.raw.theta_dot(t)
    }

    fn boundary_smooth(&self) -> bool {
        true
    }

    fn breakpoints(&self) -> Vec<f64> {
        let tf = self.raw.duration();
        let mut b = self.raw.breakpoints();
        b.push(self.delta_t);
        b.push(tf - self.delta_t);
        b.sort_by(f64::total_cmp);
        b
    }
}

/// `∫₀^{t_f} κθ̇²/G_max² − V dt` for a θ protocol on the constraint.
pub fn protocol_loss<T: ThetaProfile + ?Sized>(profile: &T, p: &LambdaParams) -> Result<f64, LambdaError> {
    let tf = profile.duration();
    let mut breaks = profile.breakpoints();
    if let Some(tb) = p.theta_bar() {
        breaks.extend(crossing_times(profile, tb));
    }
    let r = integrate_with_breaks(
        |t| {
            let th = profile.theta(t);
            let td = profile.theta_dot(t);
            let g = gmax(th, p);
            p.kappa_tot() * td * td / (g * g) - potential_theta(th, p)
        },
        0.0,
        tf,
        &breaks,
        Tolerance::new(1e-14, 1e-11),
    )?;
    Ok(r.value)
}

/// `|⟨E_m|A|E₁⟩|` summed over the bright levels, a direct check of darkness.
pub fn leakage_element(a: &Operator, theta: f64) -> f64 {
    let e = eigenstates(theta);
    let v = a.matrix() * &e.e1;
    [&e.e_plus, &e.e_minus, &e.e0]
        .iter()
        .map(|m| m.dotc(&v).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! Direct propagation of the Lindblad and Schrödinger equations.
//!
//! The density matrix is integrated as a flat column-major vector. The
//! dissipative part is pre-assembled once into a `d² × d²` superoperator,
//! the coherent part is rebuilt from the controls at each right-hand-side
//! call.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adiabatic::{AdiabaticError, HamiltonianFamily};
use crate::lambda::{lambda_family, LambdaError, LambdaParams, LambdaPath, ThetaProfile, EG0, GE0};
use crate::ode::{dopri5, rk4_fixed, OdeError, OdeOptions, OdeStats};
use crate::operator::{DensityMatrix, OperatorError, C64, ONE, ZERO};
use crate::path::ControlPath;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Adiabatic(#[from] AdiabaticError),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error("initial state has dimension {found}, system has {expected}")]
    StateDimension { expected: usize, found: usize },
    #[error("initial state is not normalized (norm {0})")]
    NotNormalized(f64),
}

/// `θ̇(t) = π/(2t_f) + Σ_n α_n cos(nπt/t_f)`.
///
/// Each cosine integrates to a sine that vanishes at both ends, so
/// `θ(0) = 0` and `θ(t_f) = π/2` for every coefficient vector. The
/// velocity at the ends is generally non-zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierPulse {
    pub t_f: f64,
    pub coeffs: Vec<f64>,
}

impl FourierPulse {
    pub fn new(t_f: f64, coeffs: Vec<f64>) -> Self {
        Self { t_f, coeffs }
    }

    pub fn linear(t_f: f64) -> Self {
        Self::new(t_f, Vec::new())
    }

    pub fn n_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// `(θ(t), θ̇(t))`.
    pub fn theta_of_t(&self, t: f64) -> (f64, f64) {
        let w = PI / self.t_f;
        let mut theta = FRAC_PI_2 * t / self.t_f;
        let mut dot = FRAC_PI_2 / self.t_f;
        for (k, &a) in self.coeffs.iter().enumerate() {
            let n = (k + 1) as f64;
            let (s, c) = (n * w * t).sin_cos();
            theta += a * s / (n * w);
            dot += a * c;
        }
        (theta, dot)
    }
}

impl ThetaProfile for FourierPulse {
    fn duration(&self) -> f64 {
        self.t_f
    }
    fn theta(&self, t: f64) -> f64 {
        self.theta_of_t(t).0
    }
    fn theta_dot(&self, t: f64) -> f64 {
        self.theta_of_t(t).1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

impl SimOptions {
    fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_steps,
            ..OdeOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FinalState {
    Mixed(DMatrix<C64>),
    Pure(DVector<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationReport {
    pub final_state: FinalState,
    /// Population of the target level, when one was requested.
    pub fidelity: Option<f64>,
    /// `|Tr ρ − 1|` or `|‖ψ‖² − 1|` at the end.
    pub trace_drift: f64,
    pub hermiticity_drift: f64,
    pub min_eigenvalue: f64,
    pub stats: OdeStats,
}

impl PropagationReport {
    pub fn n_steps(&self) -> usize {
        self.stats.steps
    }

    pub fn density(&self) -> Option<&DMatrix<C64>> {
        match &self.final_state {
            FinalState::Mixed(r) => Some(r),
            FinalState::Pure(_) => None,
        }
    }

    pub fn state_vector(&self) -> Option<&DVector<C64>> {
        match &self.final_state {
            FinalState::Pure(v) => Some(v),
            FinalState::Mixed(_) => None,
        }
    }
}

/// The Lindblad generator of a family, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    generators: Vec<Vec<C64>>,
    dissipator: Vec<C64>,
}

impl Liouvillian {
    pub fn new(fam: &HamiltonianFamily) -> Self {
        let d = fam.dim();
        let d2 = d * d;
        let generators = fam
            .generators()
            .iter()
            .map(|g| g.matrix().as_slice().to_vec())
            .collect();
        // vec(AXB) = (Bᵀ ⊗ A) vec(X) for column-major vec
        let mut sup = DMatrix::from_element(d2, d2, ZERO);
        let eye = DMatrix::<C64>::identity(d, d);
        for ch in fam.channels() {
            if ch.rate == 0.0 {
                continue;
            }
            let a = ch.op.matrix();
            let ada = a.adjoint() * a;
            let jump = a.map(|z| z.conj()).kronecker(a);
            let left = eye.kronecker(&ada);
            let right = ada.transpose().kronecker(&eye);
            sup += (jump - (left + right) * C64::new(0.5, 0.0)) * C64::new(ch.rate, 0.0);
        }
        Self {
            dim: d,
            generators,
            dissipator: sup.as_slice().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn hamiltonian_into(&self, g: &[f64], h: &mut [C64]) {
        h.iter_mut().for_each(|z| *z = ZERO);
        for (gen, &c) in self.generators.iter().zip(g) {
            if c != 0.0 {
                for (hz, gz) in h.iter_mut().zip(gen) {
                    *hz += gz * c;
                }
            }
        }
    }

    /// `dρ/dt` for column-major `rho` at controls `g`; `h` is scratch.
    pub fn apply(&self, g: &[f64], rho: &[C64], out: &mut [C64], h: &mut [C64]) {
        let d = self.dim;
        let d2 = d * d;
        self.hamiltonian_into(g, h);
        // −i(Hρ − ρH)
        for j in 0..d {
            for i in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += h[i + k * d] * rho[k + j * d] - rho[i + k * d] * h[k + j * d];
                }
                out[i + j * d] = C64::new(acc.im, -acc.re);
            }
        }
        for col in 0..d2 {
            let r = rho[col];
            if r == ZERO {
                continue;
            }
            let sup = &self.dissipator[col * d2..(col + 1) * d2];
            for (o, s) in out.iter_mut().zip(sup) {
                *o += s * r;
            }
        }
    }

    /// `dψ/dt = −iHψ`.
    pub fn apply_pure(&self, g: &[f64], psi: &[C64], out: &mut [C64], h: &mut [C64]) {
        let d = self.dim;
        self.hamiltonian_into(g, h);
        for i in 0..d {
            let mut acc = ZERO;
            for k in 0..d {
                acc += h[i + k * d] * psi[k];
            }
            out[i] = C64::new(acc.im, -acc.re);
        }
    }
}

fn check_path<P: ControlPath + ?Sized>(fam: &HamiltonianFamily, path: &P) -> Result<(), SimError> {
    if path.n_controls() != fam.n_controls() {
        return Err(AdiabaticError::ControlCountMismatch {
            expected: fam.n_controls(),
            found: path.n_controls(),
        }
        .into());
    }
    Ok(())
}

fn mixed_report(rho: DMatrix<C64>, target: Option<usize>, stats: OdeStats) -> PropagationReport {
    let d = rho.nrows();
    let trace_drift = (rho.trace() - ONE).norm();
    let mut herm = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            herm = herm.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
        }
    }
    let min_eigenvalue = DensityMatrix::from_raw(rho.clone()).min_eigenvalue();
    PropagationReport {
        fidelity: target.map(|k| rho[(k, k)].re),
        final_state: FinalState::Mixed(rho),
        trace_drift,
        hermiticity_drift: herm,
        min_eigenvalue,
        stats,
    }
}

/// Integrate the Lindblad equation along `path` from `rho0`.
///
/// Trace is not renormalized; drift is reported as a diagnostic.
/// `target` selects the basis level whose final population is the fidelity.
pub fn propagate_lindblad<P: ControlPath + ?Sized>(
    fam: &HamiltonianFamily,
    path: &P,
    rho0: &DensityMatrix,
    target: Option<usize>,
    opts: &SimOptions,
) -> Result<PropagationReport, SimError> {
    propagate_lindblad_sampled(fam, path, rho0, target, opts, &[], |_, _| {})
}

/// As [`propagate_lindblad`], reporting `ρ(t)` at each of `sample_times`.
pub fn propagate_lindblad_sampled<P, S>(
    fam: &HamiltonianFamily,
    path: &P,
    rho0: &DensityMatrix,
    target: Option<usize>,
    opts: &SimOptions,
    sample_times: &[f64],
    mut on_sample: S,
) -> Result<PropagationReport, SimError>
where
    P: ControlPath + ?Sized,
    S: FnMut(f64, &DMatrix<C64>),
{
    check_path(fam, path)?;
    let d = fam.dim();
    if rho0.dim() != d {
        return Err(SimError::StateDimension {
            expected: d,
            found: rho0.dim(),
        });
    }
    let liou = Liouvillian::new(fam);
    let mut y = rho0.matrix().as_slice().to_vec();
    let mut h = vec![ZERO; d * d];
    let stats = dopri5(
        |t, rho, out| liou.apply(&path.evaluate(t), rho, out, &mut h),
        0.0,
        path.duration(),
        &mut y,
        &opts.ode(),
        sample_times,
        |t, rho| on_sample(t, &DMatrix::from_column_slice(d, d, rho)),
    )?;
    Ok(mixed_report(DMatrix::from_vec(d, d, y), target, stats))
}

/// Fixed-step RK4 reference integration of the Lindblad equation.
pub fn propagate_lindblad_rk4<P: ControlPath + ?Sized>(
    fam: &HamiltonianFamily,
    path: &P,
    rho0: &DensityMatrix,
    target: Option<usize>,
    n_steps: usize,
) -> Result<PropagationReport, SimError> {
    check_path(fam, path)?;
    let d = fam.dim();
    let liou = Liouvillian::new(fam);
    let mut y = rho0.matrix().as_slice().to_vec();
    let mut h = vec![ZERO; d * d];
    let stats = rk4_fixed(
        |t, rho, out| liou.apply(&path.evaluate(t), rho, out, &mut h),
        0.0,
        path.duration(),
        &mut y,
        n_steps,
    );
    Ok(mixed_report(DMatrix::from_vec(d, d, y), target, stats))
}

/// Integrate `iψ̇ = Hψ` along `path`, reporting `ψ(t)` at `sample_times`.
pub fn propagate_schrodinger<P, S>(
    fam: &HamiltonianFamily,
    path: &P,
    psi0: &DVector<C64>,
    opts: &SimOptions,
    sample_times: &[f64],
    mut on_sample: S,
) -> Result<PropagationReport, SimError>
where
    P: ControlPath + ?Sized,
    S: FnMut(f64, &DVector<C64>),
{
    check_path(fam, path)?;
    let d = fam.dim();
    if psi0.len() != d {
        return Err(SimError::StateDimension {
            expected: d,
            found: psi0.len(),
        });
    }
    let norm0 = psi0.norm();
    if (norm0 - 1.0).abs() > 1e-10 {
        return Err(SimError::NotNormalized(norm0));
    }
    let liou = Liouvillian::new(fam);
    let mut y = psi0.as_slice().to_vec();
    let mut h = vec![ZERO; d * d];
    let stats = dopri5(
        |t, psi, out| liou.apply_pure(&path.evaluate(t), psi, out, &mut h),
        0.0,
        path.duration(),
        &mut y,
        &opts.ode(),
        sample_times,
        |t, psi| on_sample(t, &DVector::from_column_slice(psi)),
    )?;
    let psi = DVector::from_vec(y);
    Ok(PropagationReport {
        trace_drift: (psi.norm_squared() - 1.0).abs(),
        hermiticity_drift: 0.0,
        min_eigenvalue: 0.0,
        fidelity: None,
        final_state: FinalState::Pure(psi),
        stats,
    })
}

/// Transfer `|e,g,0⟩ → |g,e,0⟩` under a θ protocol; `F = ⟨g,e,0|ρ(t_f)|g,e,0⟩`.
pub fn transfer_report<T: ThetaProfile>(
    p: &LambdaParams,
    profile: T,
    opts: &SimOptions,
) -> Result<PropagationReport, SimError> {
    let fam = lambda_family(p)?;
    let path = LambdaPath::new(profile, *p);
    propagate_lindblad(&fam, &path, &DensityMatrix::basis(4, EG0), Some(GE0), opts)
}

pub fn transfer_fidelity<T: ThetaProfile>(p: &LambdaParams, profile: T, opts: &SimOptions) -> Result<f64, SimError> {
    Ok(transfer_report(p, profile, opts)?.fidelity.unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adiabatic::Channel;
    use crate::operator::{lindblad_rhs, Operator};
    use crate::path::ConstantPath;

    #[test]
    fn fourier_endpoints() {
        let p = FourierPulse::new(7.0, vec![0.3, -0.1, 0.05]);
        assert_eq!(p.theta(0.0), 0.0);
        assert!((p.theta(7.0) - FRAC_PI_2).abs() < 1e-15);
        let (_, d0) = p.theta_of_t(0.0);
        assert!((d0 - (FRAC_PI_2 / 7.0 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn superoperator_matches_direct_generator() {
        let p = LambdaParams::pap(1.0)
            .with_kappa(0.1)
            .with_relaxation(0.01, 0.02)
            .with_dephasing(0.003, 0.004);
        let mut p = p;
        p.kappa_phi = 0.05;
        let fam = lambda_family(&p).unwrap();
        let liou = Liouvillian::new(&fam);
        let mut rho = DMatrix::from_fn(4, 4, |i, j| C64::new((i + 2 * j) as f64 * 0.1, i as f64 - j as f64));
        rho = &rho * rho.adjoint();
        let tr = rho.trace();
        rho /= tr;
        let g = [0.6, 0.8];
        let mut out = vec![ZERO; 16];
        let mut h = vec![ZERO; 16];
        liou.apply(&g, rho.as_slice(), &mut out, &mut h);
        let direct = lindblad_rhs(
            &DensityMatrix::new(rho.clone()).unwrap(),
            &fam.hamiltonian(&g).unwrap(),
            &fam.channel_pairs(),
        )
        .unwrap();
        for (a, b) in out.iter().zip(direct.as_slice()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn two_level_decay() {
        let sm = Operator::transition(2, 1, 0);
        let fam = HamiltonianFamily::new(vec![Operator::zeros(2)], vec![Channel::new("g", sm, 0.3)]).unwrap();
        let path = ConstantPath {
            controls: vec![0.0],
            t_f: 5.0,
        };
        let r = propagate_lindblad(&fam, &path, &DensityMatrix::basis(2, 0), Some(0), &SimOptions::default()).unwrap();
        assert!((r.fidelity.unwrap() - (-1.5f64).exp()).abs() < 1e-9);
    }
}

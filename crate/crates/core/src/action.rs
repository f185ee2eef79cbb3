// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! The fidelity loss as a classical action `∫(K − V) dt`.
//!
//! Channels whose jump operator never moves the transported level `|E_r⟩`
//! out of itself are *dark*: they cost nothing in the adiabatic limit and
//! act only through the non-adiabatic admixture, which makes them a kinetic
//! term `K = ½ Ġᵀ M⁻¹ Ġ`. Every other channel contributes to the potential.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::adiabatic::{AdiabaticError, HamiltonianFamily, DEFAULT_GAP_FLOOR};
use crate::lambda::{couplings, couplings_derivative, gmax, Constraint, LambdaError, LambdaParams};
use crate::operator::{Operator, SpectrumSnapshot, C64};
use crate::path::{ControlPath, SplinePath};
use crate::quadrature::{integrate_with_breaks, QuadratureError, Tolerance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActionError {
    #[error(transparent)]
    Adiabatic(#[from] AdiabaticError),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("levels {m} and {n} within {gap:e} of each other")]
    GapUnderflow { m: usize, n: usize, gap: f64 },
    #[error("need at least one control sample")]
    NoSamples,
    #[error("channel index {0} out of range")]
    BadChannel(usize),
    #[error("boundary has {found} coordinates, chart expects {expected}")]
    BoundaryMismatch { expected: usize, found: usize },
    #[error("least-action solve did not converge (residual {residual:e} after {iterations} iterations)")]
    NotConverged { residual: f64, iterations: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// Default darkness threshold, relative to `‖A‖²`.
pub const DARK_TOL: f64 = 1e-10;
/// Path samples used to classify channels.
pub const CLASSIFY_SAMPLES: usize = 16;

fn leakage(s: &SpectrumSnapshot, op: &Operator, reference: usize) -> f64 {
    let v = s.vector(reference);
    let av = op.matrix() * &v;
    (0..s.dim())
        .filter(|&m| m != reference)
        .map(|m| s.vectors.column(m).dotc(&av).norm_sqr())
        .sum()
}

/// Split channel indices into (dark, bright) using spectra at `samples`.
pub fn classify_channels(
    fam: &HamiltonianFamily,
    reference: usize,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<(Vec<usize>, Vec<usize>), ActionError> {
    if samples.is_empty() {
        return Err(ActionError::NoSamples);
    }
    if reference >= fam.dim() {
        return Err(AdiabaticError::BadReference(reference).into());
    }
    let spectra = samples
        .iter()
        .map(|g| fam.spectrum(g, None))
        .collect::<Result<Vec<_>, _>>()?;
    let mut dark = Vec::new();
    let mut bright = Vec::new();
    for (k, ch) in fam.channels().iter().enumerate() {
        let scale = ch.op.norm().powi(2);
        let worst = spectra
            .iter()
            .map(|s| leakage(s, &ch.op, reference))
            .fold(0.0, f64::max);
        if worst <= tol * scale {
            dark.push(k);
        } else {
            bright.push(k);
        }
    }
    Ok((dark, bright))
}

/// `V`, `M⁻¹` and `K` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSample {
    pub g: Vec<f64>,
    pub v: f64,
    pub minv: DMatrix<f64>,
    pub k: f64,
}

impl LagrangianSample {
    pub fn lagrangian(&self) -> f64 {
        self.k - self.v
    }
}

#[derive(Debug, Clone)]
pub struct ActionModel {
    fam: HamiltonianFamily,
    reference: usize,
    dark: Vec<usize>,
    bright: Vec<usize>,
    gap_floor: f64,
}

impl ActionModel {
    /// Classify channels on the given control samples.
    pub fn new(fam: HamiltonianFamily, reference: usize, samples: &[Vec<f64>]) -> Result<Self, ActionError> {
        let (dark, bright) = classify_channels(&fam, reference, samples, DARK_TOL)?;
        Ok(Self {
            fam,
            reference,
            dark,
            bright,
            gap_floor: DEFAULT_GAP_FLOOR,
        })
    }

    /// Classify channels on `CLASSIFY_SAMPLES` evenly spaced points of `path`.
    pub fn for_path<P: ControlPath + ?Sized>(
        fam: HamiltonianFamily,
        reference: usize,
        path: &P,
    ) -> Result<Self, ActionError> {
        let tf = path.duration();
        let n = CLASSIFY_SAMPLES;
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|k| path.evaluate(tf * k as f64 / (n - 1) as f64))
            .collect();
        Self::new(fam, reference, &samples)
    }

    /// Use an explicit set of dark channels; the rest are bright.
    pub fn with_dark(fam: HamiltonianFamily, reference: usize, dark: Vec<usize>) -> Result<Self, ActionError> {
        if reference >= fam.dim() {
            return Err(AdiabaticError::BadReference(reference).into());
        }
        let n = fam.channels().len();
        if let Some(&k) = dark.iter().find(|&&k| k >= n) {
            return Err(ActionError::BadChannel(k));
        }
        let bright = (0..n).filter(|k| !dark.contains(k)).collect();
        Ok(Self {
            fam,
            reference,
            dark,
            bright,
            gap_floor: DEFAULT_GAP_FLOOR,
        })
    }

    /// Model of the four-level transfer, classified along a `θ` sweep.
    pub fn lambda(p: &LambdaParams) -> Result<Self, ActionError> {
        let fam = crate::lambda::lambda_family(p)?;
        let n = CLASSIFY_SAMPLES;
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|k| couplings(std::f64::consts::FRAC_PI_2 * k as f64 / (n - 1) as f64, p).to_vec())
            .collect();
        Self::new(fam, crate::lambda::DARK_LEVEL, &samples)
    }

    pub fn family(&self) -> &HamiltonianFamily {
        &self.fam
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn dark_channels(&self) -> &[usize] {
        &self.dark
    }

    pub fn bright_channels(&self) -> &[usize] {
        &self.bright
    }

    pub fn n_controls(&self) -> usize {
        self.fam.n_controls()
    }

    /// `V(G) = −Σ_bright Γ(⟨A†A⟩ − |⟨A⟩|²)` in `|E_r(G)⟩`.
    pub fn potential(&self, g: &[f64]) -> Result<f64, ActionError> {
        let s = self.fam.spectrum(g, None)?;
        Ok(self.potential_in(&s))
    }

    fn potential_in(&self, s: &SpectrumSnapshot) -> f64 {
        let v = s.vector(self.reference);
        let mut out = 0.0;
        for &k in &self.bright {
            let ch = &self.fam.channels()[k];
            let av = ch.op.matrix() * &v;
            let mean = v.dotc(&av);
            out -= ch.rate * (av.norm_squared() - mean.norm_sqr());
        }
        out
    }

    // Map Ġ ↦ c: `W_{nj} = ⟨E_n|H_j|E_r⟩/(E_n − E_r)²` over levels sharing the
    // reference sector. Rows of other levels stay zero.
    fn amplitude_map(&self, s: &SpectrumSnapshot) -> Result<DMatrix<C64>, ActionError> {
        let r = self.reference;
        let dim = s.dim();
        let scale = s.values.iter().map(|e| e.abs()).fold(0.0, f64::max);
        let vr = s.vector(r);
        let mut w = DMatrix::from_element(dim, self.n_controls(), C64::new(0.0, 0.0));
        for n in 0..dim {
            if n == r || s.sectors[n] != s.sectors[r] {
                continue;
            }
            let gap = s.values[n] - s.values[r];
            if gap.abs() <= self.gap_floor * scale {
                return Err(ActionError::GapUnderflow {
                    m: n,
                    n: r,
                    gap: gap.abs(),
                });
            }
            let vn = s.vectors.column(n);
            for (j, h) in self.fam.generators().iter().enumerate() {
                w[(n, j)] = vn.dotc(&(h.matrix() * &vr)) / (gap * gap);
            }
        }
        Ok(w)
    }

    /// `M⁻¹ = 2 Σ_dark Γ Re(W†B†BW)` with `B = ⟨E_r|A|E_r⟩ − A` on the
    /// complement of `|E_r⟩`.
    pub fn inverse_mass(&self, g: &[f64]) -> Result<DMatrix<f64>, ActionError> {
        let s = self.fam.spectrum(g, None)?;
        self.inverse_mass_in(&s)
    }

    fn inverse_mass_in(&self, s: &SpectrumSnapshot) -> Result<DMatrix<f64>, ActionError> {
        let nc = self.n_controls();
        let mut minv = DMatrix::zeros(nc, nc);
        if self.dark.is_empty() {
            return Ok(minv);
        }
        let w = self.amplitude_map(s)?;
        let r = self.reference;
        for &k in &self.dark {
            let ch = &self.fam.channels()[k];
            let a = s.matrix_elements(&ch.op);
            let mut b = -a;
            let arr = -b[(r, r)];
            for i in 0..s.dim() {
                b[(i, i)] += arr;
            }
            b.row_mut(r).fill(C64::new(0.0, 0.0));
            b.column_mut(r).fill(C64::new(0.0, 0.0));
            let bw = &b * &w;
            let q = bw.adjoint() * bw;
            minv += q.map(|z| 2.0 * ch.rate * z.re);
        }
        // exact symmetry
        let sym = (&minv + minv.transpose()) * 0.5;
        Ok(sym)
    }

    pub fn kinetic(&self, g: &[f64], g_dot: &[f64]) -> Result<f64, ActionError> {
        let minv = self.inverse_mass(g)?;
        Ok(quadratic(&minv, g_dot))
    }

    pub fn sample(&self, g: &[f64], g_dot: &[f64]) -> Result<LagrangianSample, ActionError> {
        let s = self.fam.spectrum(g, None)?;
        let minv = self.inverse_mass_in(&s)?;
        Ok(LagrangianSample {
            g: g.to_vec(),
            v: self.potential_in(&s),
            k: quadratic(&minv, g_dot),
            minv,
        })
    }

    pub fn lagrangian(&self, g: &[f64], g_dot: &[f64]) -> Result<f64, ActionError> {
        Ok(self.sample(g, g_dot)?.lagrangian())
    }
}

fn quadratic(m: &DMatrix<f64>, x: &[f64]) -> f64 {
    let v = DVector::from_column_slice(x);
    0.5 * (v.transpose() * m * &v)[(0, 0)]
}

/// Quadrature tolerance for `action`.
pub const ACTION_TOL: Tolerance = Tolerance {
    abs: 1e-14,
    rel: 1e-11,
    max_intervals: 4000,
};

/// `ΔF = ∫₀^{t_f} (K − V) dt` along `path`.
pub fn action<P: ControlPath + ?Sized>(model: &ActionModel, path: &P) -> Result<f64, ActionError> {
    action_between(model, path, 0.0, path.duration())
}

/// The action restricted to `[t0, t1]`.
pub fn action_between<P: ControlPath + ?Sized>(
    model: &ActionModel,
    path: &P,
    t0: f64,
    t1: f64,
) -> Result<f64, ActionError> {
    let mut fail: Option<ActionError> = None;
    let r = integrate_with_breaks(
        |t| match model.lagrangian(&path.evaluate(t), &path.derivative(t)) {
            Ok(l) => l,
            Err(e) => {
                fail.get_or_insert(e);
                0.0
            }
        },
        t0,
        t1,
        &path.breakpoints(),
        ACTION_TOL,
    );
    if let Some(e) = fail {
        return Err(e);
    }
    Ok(r?.value)
}

/// Reduced coordinates `q ↦ G(q)` for constrained problems.
pub trait Chart: Send + Sync {
    fn dim(&self) -> usize;
    fn n_controls(&self) -> usize;
    fn controls(&self, q: &[f64]) -> Vec<f64>;
    /// `∂G/∂q`, `n_controls × dim`.
    fn jacobian(&self, q: &[f64]) -> DMatrix<f64>;
}

/// The controls themselves.
#[derive(Debug, Clone, Copy)]
pub struct IdentityChart(pub usize);

impl Chart for IdentityChart {
    fn dim(&self) -> usize {
        self.0
    }
    fn n_controls(&self) -> usize {
        self.0
    }
    fn controls(&self, q: &[f64]) -> Vec<f64> {
        q.to_vec()
    }
    fn jacobian(&self, _q: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.0, self.0)
    }
}

/// The mixing angle with couplings on the constraint boundary.
///
/// `angle` uses `q = θ` directly. `weighted` uses `q = ∫₀^θ dθ'/G_max(θ')`,
/// in which the kinetic term is `κ_tot q̇²` everywhere; it removes the kink
/// of `G_max` at `θ̄` from the mass and leaves `V(q)` continuously
/// differentiable.
#[derive(Debug, Clone, Copy)]
pub struct ThetaChart {
    pub params: LambdaParams,
    pub weighted: bool,
}

impl ThetaChart {
    pub fn angle(params: LambdaParams) -> Self {
        Self { params, weighted: false }
    }

    pub fn weighted(params: LambdaParams) -> Self {
        Self { params, weighted: true }
    }

    pub fn coordinate(&self, theta: f64) -> f64 {
        if !self.weighted {
            return theta;
        }
        match self.params.constraint {
            Constraint::Pap { g_max } => theta / g_max,
            Constraint::Bounded { g1_max, g2_max } => {
                let tb = (g1_max / g2_max).atan();
                if theta <= tb {
                    theta.sin() / g2_max
                } else {
                    tb.sin() / g2_max + (tb.cos() - theta.cos()) / g1_max
                }
            }
        }
    }

    pub fn theta(&self, q: f64) -> f64 {
        if !self.weighted {
            return q;
        }
        match self.params.constraint {
            Constraint::Pap { g_max } => q * g_max,
            Constraint::Bounded { g1_max, g2_max } => {
                let tb = (g1_max / g2_max).atan();
                let qb = tb.sin() / g2_max;
                if q <= qb {
                    (g2_max * q).clamp(-1.0, 1.0).asin()
                } else {
                    (tb.cos() - g1_max * (q - qb)).clamp(-1.0, 1.0).acos()
                }
            }
        }
    }
}

impl Chart for ThetaChart {
    fn dim(&self) -> usize {
        1
    }
    fn n_controls(&self) -> usize {
        2
    }
    fn controls(&self, q: &[f64]) -> Vec<f64> {
        couplings(self.theta(q[0]), &self.params).to_vec()
    }
    fn jacobian(&self, q: &[f64]) -> DMatrix<f64> {
        let th = self.theta(q[0]);
        let mut d = couplings_derivative(th, &self.params);
        if self.weighted {
            let g = gmax(th, &self.params);
            d = [d[0] * g, d[1] * g];
        }
        DMatrix::from_column_slice(2, 1, &d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeastActionOptions {
    /// Collocation segments.
    pub segments: usize,
    /// Converged when the discrete Euler-Lagrange residual falls below
    /// `tol` times the Lagrangian scale.
    pub tol: f64,
    pub max_iterations: usize,
    /// Finite-difference step for derivatives of `V` and `M⁻¹` in `q`.
    pub fd_step: f64,
}

impl Default for LeastActionOptions {
    fn default() -> Self {
        Self {
            segments: 800,
            tol: 1e-9,
            max_iterations: 100,
            fd_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LeastActionSolution {
    pub times: Vec<f64>,
    /// Chart coordinates at each node.
    pub q: Vec<Vec<f64>>,
    pub path: SplinePath,
    /// Discrete action of the solution and of the straight line in `q`.
    pub action: f64,
    pub straight_action: f64,
    pub residual: f64,
    pub iterations: usize,
}

struct Discretization<'a, C: Chart> {
    model: &'a ActionModel,
    chart: &'a C,
    h: f64,
    fd: f64,
}

// V and the pulled-back mass at q, with first and second derivatives.
struct Local {
    v: f64,
    dv: DVector<f64>,
    ddv: DMatrix<f64>,
    m: DMatrix<f64>,
    dm: Vec<DMatrix<f64>>,
    ddm: Vec<Vec<DMatrix<f64>>>,
}

impl<C: Chart> Discretization<'_, C> {
    fn pulled(&self, q: &[f64]) -> Result<(f64, DMatrix<f64>), ActionError> {
        let g = self.chart.controls(q);
        let s = self.model.fam.spectrum(&g, None)?;
        let j = self.chart.jacobian(q);
        let minv = self.model.inverse_mass_in(&s)?;
        Ok((self.model.potential_in(&s), j.transpose() * minv * j))
    }

    fn local(&self, q: &[f64]) -> Result<Local, ActionError> {
        let d = q.len();
        let at = |shift: &[(usize, f64)]| {
            let mut x = q.to_vec();
            for &(i, s) in shift {
                x[i] += s;
            }
            self.pulled(&x)
        };
        let e = self.fd;
        let (v0, m0) = at(&[])?;
        let mut dv = DVector::zeros(d);
        let mut ddv = DMatrix::zeros(d, d);
        let mut dm = vec![DMatrix::zeros(d, d); d];
        let mut ddm = vec![vec![DMatrix::zeros(d, d); d]; d];
        for i in 0..d {
            let (vp, mp) = at(&[(i, e)])?;
            let (vm, mm) = at(&[(i, -e)])?;
            dv[i] = (vp - vm) / (2.0 * e);
            ddv[(i, i)] = (vp - 2.0 * v0 + vm) / (e * e);
            dm[i] = (&mp - &mm) / (2.0 * e);
            ddm[i][i] = (&mp - &m0 * 2.0 + &mm) / (e * e);
            for jx in 0..i {
                let (vpp, mpp) = at(&[(i, e), (jx, e)])?;
                let (vpm, mpm) = at(&[(i, e), (jx, -e)])?;
                let (vmp, mmp) = at(&[(i, -e), (jx, e)])?;
                let (vmm, mmm) = at(&[(i, -e), (jx, -e)])?;
                let c = 1.0 / (4.0 * e * e);
                ddv[(i, jx)] = (vpp - vpm - vmp + vmm) * c;
                ddv[(jx, i)] = ddv[(i, jx)];
                ddm[i][jx] = (&mpp - &mpm - &mmp + &mmm) * c;
                ddm[jx][i] = ddm[i][jx].clone();
            }
        }
        Ok(Local {
            v: v0,
            dv,
            ddv,
            m: m0,
            dm,
            ddm,
        })
    }

    fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
    }

    // ℓ = ΔᵀmΔ/(2h) − hV at the midpoint.
    fn segment_value(&self, a: &[f64], b: &[f64]) -> Result<f64, ActionError> {
        let (v, m) = self.pulled(&Self::midpoint(a, b))?;
        let dl = DVector::from_iterator(a.len(), a.iter().zip(b).map(|(x, y)| y - x));
        Ok((dl.transpose() * m * &dl)[(0, 0)] / (2.0 * self.h) - self.h * v)
    }

    fn value(&self, nodes: &[Vec<f64>]) -> Result<f64, ActionError> {
        let mut s = 0.0;
        for w in nodes.windows(2) {
            s += self.segment_value(&w[0], &w[1])?;
        }
        Ok(s)
    }

    // Gradient and Hessian blocks of one segment with respect to (a, b).
    fn segment_derivatives(
        &self,
        a: &[f64],
        b: &[f64],
    ) -> Result<([DVector<f64>; 2], [[DMatrix<f64>; 2]; 2]), ActionError> {
        let d = a.len();
        let h = self.h;
        let loc = self.local(&Self::midpoint(a, b))?;
        let dl = DVector::from_iterator(d, a.iter().zip(b).map(|(x, y)| y - x));
        let g_d = &loc.m * &dl / h;
        let g_q = DVector::from_iterator(
            d,
            (0..d).map(|i| (dl.transpose() * &loc.dm[i] * &dl)[(0, 0)] / (2.0 * h) - h * loc.dv[i]),
        );
        let h_dd = &loc.m / h;
        let mut h_dq = DMatrix::zeros(d, d);
        for jx in 0..d {
            let col = &loc.dm[jx] * &dl / h;
            h_dq.set_column(jx, &col);
        }
        let mut h_qq = DMatrix::zeros(d, d);
        for i in 0..d {
            for jx in 0..d {
                h_qq[(i, jx)] = (dl.transpose() * &loc.ddm[i][jx] * &dl)[(0, 0)] / (2.0 * h) - h * loc.ddv[(i, jx)];
            }
        }
        let _ = loc.v;
        let s = [-1.0, 1.0];
        let grad = [-&g_d + &g_q * 0.5, &g_d + &g_q * 0.5];
        let block = |x: usize, y: usize| {
            &h_dd * (s[x] * s[y]) + &h_dq * (0.5 * s[x]) + h_dq.transpose() * (0.5 * s[y]) + &h_qq * 0.25
        };
        Ok((grad, [[block(0, 0), block(0, 1)], [block(1, 0), block(1, 1)]]))
    }

    // Interior gradient and block-tridiagonal Hessian (diag, upper).
    #[allow(clippy::type_complexity)]
    fn newton_system(
        &self,
        nodes: &[Vec<f64>],
    ) -> Result<(Vec<DVector<f64>>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>), ActionError> {
        let n_int = nodes.len() - 2;
        let d = nodes[0].len();
        let mut grad = vec![DVector::zeros(d); n_int];
        let mut diag = vec![DMatrix::zeros(d, d); n_int];
        let mut upper = vec![DMatrix::zeros(d, d); n_int.saturating_sub(1)];
        for k in 0..nodes.len() - 1 {
            let (g, hb) = self.segment_derivatives(&nodes[k], &nodes[k + 1])?;
            // node k is interior index k−1, node k+1 is interior index k
            if k >= 1 {
                grad[k - 1] += &g[0];
                diag[k - 1] += &hb[0][0];
            }
            if k < n_int {
                grad[k] += &g[1];
                diag[k] += &hb[1][1];
            }
            if k >= 1 && k < n_int {
                upper[k - 1] += &hb[0][1];
            }
        }
        Ok((grad, diag, upper))
    }
}

// Solve the symmetric block-tridiagonal system (diag + μI, upper) x = rhs.
fn block_thomas(
    diag: &[DMatrix<f64>],
    upper: &[DMatrix<f64>],
    rhs: &[DVector<f64>],
    mu: f64,
) -> Option<Vec<DVector<f64>>> {
    let n = diag.len();
    let d = rhs[0].len();
    let mut c_prime: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut r_prime: Vec<DVector<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut a = &diag[k] + DMatrix::identity(d, d) * mu;
        let mut r = rhs[k].clone();
        if k > 0 {
            let lower = upper[k - 1].transpose();
            a -= &lower * &c_prime[k - 1];
            r -= &lower * &r_prime[k - 1];
        }
        let lu = a.lu();
        let inv_r = lu.solve(&r)?;
        let c = if k + 1 < n {
            lu.solve(&upper[k])?
        } else {
            DMatrix::zeros(d, d)
        };
        c_prime.push(c);
        r_prime.push(inv_r);
    }
    let mut x = vec![DVector::zeros(d); n];
    for k in (0..n).rev() {
        x[k] = if k + 1 < n {
            &r_prime[k] - &c_prime[k] * &x[k + 1]
        } else {
            r_prime[k].clone()
        };
    }
    x.iter().all(|v| v.iter().all(|z| z.is_finite())).then_some(x)
}

/// Minimize the discretized action between fixed chart endpoints.
///
/// Midpoint collocation on a uniform grid; the discrete Euler-Lagrange
/// equations are solved by damped Newton iteration starting from the
/// straight line in chart coordinates.
pub fn solve_least_action<C: Chart>(
    model: &ActionModel,
    chart: &C,
    q0: &[f64],
    q1: &[f64],
    t_f: f64,
    opts: &LeastActionOptions,
) -> Result<LeastActionSolution, ActionError> {
    let d = chart.dim();
    for q in [q0, q1] {
        if q.len() != d {
            return Err(ActionError::BoundaryMismatch {
                expected: d,
                found: q.len(),
            });
        }
    }
    if chart.n_controls() != model.n_controls() {
        return Err(ActionError::Invalid(format!(
            "chart has {} controls, model {}",
            chart.n_controls(),
            model.n_controls()
        )));
    }
    if !(t_f > 0.0) || opts.segments < 2 {
        return Err(ActionError::Invalid("need t_f > 0 and at least 2 segments".into()));
    }
    let m = opts.segments;
    let h = t_f / m as f64;
    let disc = Discretization {
        model,
        chart,
        h,
        fd: opts.fd_step,
    };
    let times: Vec<f64> = (0..=m).map(|k| t_f * k as f64 / m as f64).collect();
    let mut nodes: Vec<Vec<f64>> = (0..=m)
        .map(|k| {
            let u = k as f64 / m as f64;
            q0.iter().zip(q1).map(|(a, b)| a + u * (b - a)).collect()
        })
        .collect();
    let straight_action = disc.value(&nodes)?;
    let mut s = straight_action;

    let residual_of = |g: &[DVector<f64>]| g.iter().map(|v| v.amax()).fold(0.0, f64::max) / h;
    let mut scale = 0.0f64;
    for w in nodes.windows(2) {
        let (v, mm) = disc.pulled(&Discretization::<C>::midpoint(&w[0], &w[1]))?;
        let dl = DVector::from_iterator(d, w[0].iter().zip(&w[1]).map(|(x, y)| (y - x) / h));
        scale = scale.max(v.abs() + 0.5 * (dl.transpose() * mm * &dl)[(0, 0)]);
    }
    let target = opts.tol * scale.max(f64::MIN_POSITIVE);

    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut mu = 0.0;
    while iterations < opts.max_iterations {
        let (grad, diag, upper) = disc.newton_system(&nodes)?;
        residual = residual_of(&grad);
        if residual <= target {
            break;
        }
        iterations += 1;
        let rhs: Vec<DVector<f64>> = grad.iter().map(|g| -g).collect();
        let mut accepted = false;
        for _ in 0..40 {
            let Some(step) = block_thomas(&diag, &upper, &rhs, mu) else {
                mu = (mu * 10.0).max(1e-12 * scale / h);
                continue;
            };
            let slope: f64 = grad.iter().zip(&step).map(|(g, p)| g.dot(p)).sum();
            if slope >= 0.0 {
                mu = (mu * 10.0).max(1e-8 * scale / h);
                continue;
            }
            let mut alpha = 1.0;
            while alpha > 1e-6 {
                let trial: Vec<Vec<f64>> = nodes
                    .iter()
                    .enumerate()
                    .map(|(k, q)| {
                        if k == 0 || k == m {
                            q.clone()
                        } else {
                            q.iter()
                                .zip(step[k - 1].iter())
                                .map(|(x, p)| x + alpha * p)
                                .collect()
                        }
                    })
                    .collect();
                if let Ok(st) = disc.value(&trial) {
                    let armijo = st <= s + 1e-4 * alpha * slope;
                    let flat = (st - s).abs() <= 1e-13 * s.abs().max(scale * t_f);
                    if armijo || flat {
                        nodes = trial;
                        s = st;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if accepted {
                mu *= 0.1;
                if mu < 1e-14 * scale / h {
                    mu = 0.0;
                }
                break;
            }
            mu = (mu * 10.0).max(1e-8 * scale / h);
        }
        if !accepted {
            break;
        }
    }
    if residual > target {
        return Err(ActionError::NotConverged { residual, iterations });
    }
    let samples: Vec<Vec<f64>> = nodes.iter().map(|q| chart.controls(q)).collect();
    Ok(LeastActionSolution {
        path: SplinePath::new(times.clone(), &samples),
        times,
        q: nodes,
        action: s,
        straight_action,
        residual,
        iterations,
    })
}

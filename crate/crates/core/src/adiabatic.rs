// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! Non-adiabatic perturbation theory along a control path.
//!
//! For `H(t) = Σ_j G_j(t) H_j` with instantaneous eigenpairs `E_n, |E_n⟩`,
//! the leakage out of a transported level `|E_r⟩` is governed by
//!
//! ```text
//! ε_{m,n}(t) = ⟨E_m|Ḣ|E_n⟩ / (E_m − E_n)²
//! ```
//!
//! and to leading order the other amplitudes are
//! `c_m(t) = −i ε_{m,r}(t) + i ε_{m,r}(0) e^{iγ_{m,r}(t)} e^{−iφ_{m,r}(t)}`.
//!
//! Eigenvectors are gauge-aligned snapshot to snapshot (parallel transport),
//! so the stored geometric phases stay at the discretization level and the
//! gauge-invariant combination is `e^{iγ_n}|E_n⟩`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::operator::{
    eigendecompose_in_sectors, validate_sectors, Operator, OperatorError, SpectrumSnapshot, C64,
    ZERO,
};
use crate::path::ControlPath;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdiabaticError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("generator {index} is not Hermitian")]
    NonHermitianGenerator { index: usize },
    #[error("family needs at least one generator")]
    NoGenerators,
    #[error("generator {generator} couples sectors through element ({row}, {col})")]
    SectorNotInvariant {
        generator: usize,
        row: usize,
        col: usize,
    },
    #[error("path has {found} controls, family expects {expected}")]
    ControlCountMismatch { expected: usize, found: usize },
    #[error("grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("time {t} outside [0, {t_f}]")]
    TimeOutOfRange { t: f64, t_f: f64 },
    #[error("level crossing near t = {t}: levels {m} and {n} within {gap:e}")]
    LevelCrossing { t: f64, m: usize, n: usize, gap: f64 },
    #[error("gap underflow at t = {t}: levels {m} and {n} within {gap:e}")]
    GapUnderflow { t: f64, m: usize, n: usize, gap: f64 },
    #[error("reference level {0} out of range")]
    BadReference(usize),
}

/// A dissipation channel `√Γ A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub op: Operator,
    pub rate: f64,
    pub label: String,
}

impl Channel {
    pub fn new(label: impl Into<String>, op: Operator, rate: f64) -> Self {
        Self {
            op,
            rate,
            label: label.into(),
        }
    }
}

/// A controlled open system `H = Σ_j G_j H_j` with Lindblad channels.
#[derive(Debug, Clone)]
pub struct HamiltonianFamily {
    generators: Vec<Operator>,
    channels: Vec<Channel>,
    sectors: Vec<Vec<usize>>,
}

impl HamiltonianFamily {
    pub fn new(generators: Vec<Operator>, channels: Vec<Channel>) -> Result<Self, AdiabaticError> {
        let dim = generators.first().ok_or(AdiabaticError::NoGenerators)?.dim();
        let all = vec![(0..dim).collect()];
        Self::with_sectors(generators, channels, all)
    }

    /// A family whose generators all leave each sector invariant.
    ///
    /// Spectra are then computed sector by sector, so degeneracies across
    /// sectors never count as level crossings.
    pub fn with_sectors(
        generators: Vec<Operator>,
        channels: Vec<Channel>,
        sectors: Vec<Vec<usize>>,
    ) -> Result<Self, AdiabaticError> {
        let dim = generators.first().ok_or(AdiabaticError::NoGenerators)?.dim();
        for (index, g) in generators.iter().enumerate() {
            if g.dim() != dim {
                return Err(OperatorError::DimensionMismatch {
                    expected: dim,
                    found: g.dim(),
                }
                .into());
            }
            if !g.is_hermitian() {
                return Err(AdiabaticError::NonHermitianGenerator { index });
            }
        }
        for (index, c) in channels.iter().enumerate() {
            if c.op.dim() != dim {
                return Err(OperatorError::DimensionMismatch {
                    expected: dim,
                    found: c.op.dim(),
                }
                .into());
            }
            if !(c.rate >= 0.0) || !c.rate.is_finite() {
                return Err(OperatorError::NegativeRate {
                    index,
                    rate: c.rate,
                }
                .into());
            }
        }
        validate_sectors(&sectors, dim)?;
        let mut label = vec![0; dim];
        for (s, idx) in sectors.iter().enumerate() {
            for &i in idx {
                label[i] = s;
            }
        }
        for (generator, g) in generators.iter().enumerate() {
            for row in 0..dim {
                for col in 0..dim {
                    if label[row] != label[col] && g.matrix()[(row, col)].norm() > 0.0 {
                        return Err(AdiabaticError::SectorNotInvariant {
                            generator,
                            row,
                            col,
                        });
                    }
                }
            }
        }
        Ok(Self {
            generators,
            channels,
            sectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn n_controls(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Operator] {
        &self.generators
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn sectors(&self) -> &[Vec<usize>] {
        &self.sectors
    }

    /// Channels as `(operator, rate)` pairs for [`crate::operator::lindblad_rhs`].
    pub fn channel_pairs(&self) -> Vec<(Operator, f64)> {
        self.channels.iter().map(|c| (c.op.clone(), c.rate)).collect()
    }

    /// Same family with channel rates replaced.
    pub fn with_rates(&self, rates: &[f64]) -> Result<Self, AdiabaticError> {
        let channels = self
            .channels
            .iter()
            .zip(rates)
            .map(|(c, &r)| Channel::new(c.label.clone(), c.op.clone(), r))
            .collect();
        Self::with_sectors(self.generators.clone(), channels, self.sectors.clone())
    }

    fn check_controls(&self, n: usize) -> Result<(), AdiabaticError> {
        if n != self.n_controls() {
            return Err(AdiabaticError::ControlCountMismatch {
                expected: self.n_controls(),
                found: n,
            });
        }
        Ok(())
    }

    /// `Σ_j c_j H_j`.
    pub fn combine(&self, coeffs: &[f64]) -> Result<Operator, AdiabaticError> {
        self.check_controls(coeffs.len())?;
        let dim = self.dim();
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for (g, &c) in self.generators.iter().zip(coeffs) {
            if c != 0.0 {
                m += g.matrix() * C64::new(c, 0.0);
            }
        }
        Ok(Operator::new(m)?)
    }

    pub fn hamiltonian(&self, g: &[f64]) -> Result<Operator, AdiabaticError> {
        self.combine(g)
    }

    pub fn spectrum(
        &self,
        g: &[f64],
        gauge_ref: Option<&SpectrumSnapshot>,
    ) -> Result<SpectrumSnapshot, AdiabaticError> {
        let h = self.hamiltonian(g)?;
        Ok(eigendecompose_in_sectors(&h, &self.sectors, gauge_ref)?)
    }
}

/// Default number of frame grid points.
pub const DEFAULT_GRID: usize = 2001;
/// Default relative gap floor.
pub const DEFAULT_GAP_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOptions {
    pub n_grid: usize,
    /// Gaps below `gap_floor · max|E|` count as degeneracies.
    pub gap_floor: f64,
    /// Unit phases applied to the first snapshot (gauge-invariance checks).
    pub initial_phases: Option<Vec<C64>>,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            n_grid: DEFAULT_GRID,
            gap_floor: DEFAULT_GAP_FLOOR,
            initial_phases: None,
        }
    }
}

/// Spectra and phases sampled along a path.
#[derive(Debug, Clone)]
pub struct AdiabaticFrame {
    pub times: Vec<f64>,
    pub snapshots: Vec<SpectrumSnapshot>,
    /// `φ_n(t_k) = ∫₀^{t_k} E_n`, indexed `[k][n]`.
    pub dynamical_phases: Vec<Vec<f64>>,
    /// `γ_n(t_k) = i∫₀^{t_k} ⟨E_n|Ė_n⟩`, indexed `[k][n]`.
    pub geometric_phases: Vec<Vec<f64>>,
    gap_floor: f64,
}

/// Point evaluation of the frame at an arbitrary time.
#[derive(Debug, Clone)]
pub struct FramePoint {
    pub snapshot: SpectrumSnapshot,
    pub dynamical: Vec<f64>,
    pub geometric: Vec<f64>,
}

fn min_gap(s: &SpectrumSnapshot) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for m in 0..s.dim() {
        for n in m + 1..s.dim() {
            if s.sectors[m] != s.sectors[n] {
                continue;
            }
            let gap = (s.values[m] - s.values[n]).abs();
            if best.map_or(true, |b| gap < b.2) {
                best = Some((m, n, gap));
            }
        }
    }
    best
}

fn energy_scale(s: &SpectrumSnapshot) -> f64 {
    s.values.iter().map(|e| e.abs()).fold(0.0, f64::max)
}

// −arg⟨a|b⟩: the parallel-transport increment of the geometric phase.
fn transport_increment(a: &SpectrumSnapshot, b: &SpectrumSnapshot, n: usize) -> f64 {
    -a.vectors.column(n).dotc(&b.vectors.column(n)).arg()
}

pub fn build_frame<P: ControlPath + ?Sized>(
    fam: &HamiltonianFamily,
    path: &P,
    n_grid: usize,
) -> Result<AdiabaticFrame, AdiabaticError> {
    build_frame_with(
        fam,
        path,
        &FrameOptions {
            n_grid,
            ..FrameOptions::default()
        },
    )
}

pub fn build_frame_with<P: ControlPath + ?Sized>(
    fam: &HamiltonianFamily,
    path: &P,
    opts: &FrameOptions,
) -> Result<AdiabaticFrame, AdiabaticError> {
    if opts.n_grid < 2 {
        return Err(AdiabaticError::GridTooSmall(opts.n_grid));
    }
    fam.check_controls(path.n_controls())?;
    let tf = path.duration();
    let n = opts.n_grid;
    let times: Vec<f64> = (0..n)
        .map(|k| if k + 1 == n { tf } else { tf * k as f64 / (n - 1) as f64 })
        .collect();

    let mut snapshots: Vec<SpectrumSnapshot> = Vec::with_capacity(n);
    for (k, &t) in times.iter().enumerate() {
        let mut s = fam.spectrum(&path.evaluate(t), snapshots.last())?;
        if k == 0 {
            if let Some(ph) = &opts.initial_phases {
                s = s.with_phases(ph);
            }
        }
        if let Some((m, l, gap)) = min_gap(&s) {
            if gap <= opts.gap_floor * energy_scale(&s) || (gap == 0.0) {
                return Err(AdiabaticError::LevelCrossing { t, m, n: l, gap });
            }
        }
        snapshots.push(s);
    }

    let dim = fam.dim();
    let mut dynamical = vec![vec![0.0; dim]; n];
    let mut geometric = vec![vec![0.0; dim]; n];
    for k in 1..n {
        let dt = times[k] - times[k - 1];
        for l in 0..dim {
            dynamical[k][l] = dynamical[k - 1][l]
                + 0.5 * dt * (snapshots[k - 1].values[l] + snapshots[k].values[l]);
            geometric[k][l] =
                geometric[k - 1][l] + transport_increment(&snapshots[k - 1], &snapshots[k], l);
        }
    }

    Ok(AdiabaticFrame {
        times,
        snapshots,
        dynamical_phases: dynamical,
        geometric_phases: geometric,
        gap_floor: opts.gap_floor,
    })
}

impl AdiabaticFrame {
    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn dim(&self) -> usize {
        self.snapshots[0].dim()
    }

    fn check_time(&self, t: f64) -> Result<(), AdiabaticError> {
        let tf = self.duration();
        if !(t >= 0.0 && t <= tf) {
            return Err(AdiabaticError::TimeOutOfRange { t, t_f: tf });
        }
        Ok(())
    }

    // last grid index with times[k] ≤ t
    fn lower_index(&self, t: f64) -> usize {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(k) => k,
            Err(k) => k.saturating_sub(1),
        }
    }

    /// Spectrum and phases at `t`, gauge-aligned to the grid.
    pub fn point<P: ControlPath + ?Sized>(
        &self,
        fam: &HamiltonianFamily,
        path: &P,
        t: f64,
    ) -> Result<FramePoint, AdiabaticError> {
        self.check_time(t)?;
        let k = self.lower_index(t);
        if self.times[k] == t {
            return Ok(FramePoint {
                snapshot: self.snapshots[k].clone(),
                dynamical: self.dynamical_phases[k].clone(),
                geometric: self.geometric_phases[k].clone(),
            });
        }
        let base = &self.snapshots[k];
        let s = fam.spectrum(&path.evaluate(t), Some(base))?;
        let dt = t - self.times[k];
        let dim = s.dim();
        let dynamical = (0..dim)
            .map(|l| self.dynamical_phases[k][l] + 0.5 * dt * (base.values[l] + s.values[l]))
            .collect();
        let geometric = (0..dim)
            .map(|l| self.geometric_phases[k][l] + transport_increment(base, &s, l))
            .collect();
        Ok(FramePoint {
            snapshot: s,
            dynamical,
            geometric,
        })
    }

    fn eps_from(
        &self,
        fam: &HamiltonianFamily,
        snap: &SpectrumSnapshot,
        gdot: &[f64],
        t: f64,
    ) -> Result<DMatrix<C64>, AdiabaticError> {
        let hdot = fam.combine(gdot)?;
        let elems = snap.matrix_elements(&hdot);
        let dim = snap.dim();
        let floor = self.gap_floor * energy_scale(snap);
        let mut eps = DMatrix::from_element(dim, dim, ZERO);
        for m in 0..dim {
            for n in m + 1..dim {
                if snap.sectors[m] != snap.sectors[n] {
                    continue;
                }
                let delta = snap.values[m] - snap.values[n];
                if delta.abs() <= floor || delta == 0.0 {
                    return Err(AdiabaticError::GapUnderflow {
                        t,
                        m,
                        n,
                        gap: delta.abs(),
                    });
                }
                let e = elems[(m, n)] / (delta * delta);
                eps[(m, n)] = e;
                eps[(n, m)] = e.conj();
            }
        }
        Ok(eps)
    }
}

/// `ε_{m,n}(t)` in the frame gauge; zero on the diagonal and across sectors.
pub fn nonadiabatic_eps<P: ControlPath + ?Sized>(
    frame: &AdiabaticFrame,
    fam: &HamiltonianFamily,
    path: &P,
    t: f64,
) -> Result<DMatrix<C64>, AdiabaticError> {
    let p = frame.point(fam, path, t)?;
    frame.eps_from(fam, &p.snapshot, &path.derivative(t), t)
}

/// Leading-order amplitudes `c_m(t)` for leakage out of `reference`.
///
/// The entry at `reference` itself is left at zero.
pub fn perturbative_amplitudes<P: ControlPath + ?Sized>(
    frame: &AdiabaticFrame,
    fam: &HamiltonianFamily,
    path: &P,
    t: f64,
    reference: usize,
) -> Result<DVector<C64>, AdiabaticError> {
    let dim = frame.dim();
    if reference >= dim {
        return Err(AdiabaticError::BadReference(reference));
    }
    let p = frame.point(fam, path, t)?;
    let eps_t = frame.eps_from(fam, &p.snapshot, &path.derivative(t), t)?;
    let eps_0 = frame.eps_from(fam, &frame.snapshots[0], &path.derivative(0.0), 0.0)?;
    let i = C64::new(0.0, 1.0);
    let mut c = DVector::from_element(dim, ZERO);
    for m in 0..dim {
        if m == reference {
            continue;
        }
        let gamma = p.geometric[m] - p.geometric[reference];
        let phi = p.dynamical[m] - p.dynamical[reference];
        c[m] = -i * eps_t[(m, reference)]
            + i * eps_0[(m, reference)] * C64::from_polar(1.0, gamma - phi);
    }
    Ok(c)
}

/// Second-order phase correction `δγ_r(t) = Σ_{m≠r} ∫₀ᵗ Δ_{m,r}|ε_{m,r}|²`.
pub fn phase_correction<P: ControlPath + ?Sized>(
    frame: &AdiabaticFrame,
    fam: &HamiltonianFamily,
    path: &P,
    t: f64,
    reference: usize,
) -> Result<f64, AdiabaticError> {
    let dim = frame.dim();
    if reference >= dim {
        return Err(AdiabaticError::BadReference(reference));
    }
    frame.check_time(t)?;
    let integrand = |snap: &SpectrumSnapshot, tk: f64| -> Result<f64, AdiabaticError> {
        let eps = frame.eps_from(fam, snap, &path.derivative(tk), tk)?;
        Ok((0..dim)
            .filter(|&m| m != reference)
            .map(|m| (snap.values[m] - snap.values[reference]) * eps[(m, reference)].norm_sqr())
            .sum())
    };
    let k_end = frame.lower_index(t);
    let mut acc = 0.0;
    let mut prev = integrand(&frame.snapshots[0], 0.0)?;
    for k in 1..=k_end {
        let cur = integrand(&frame.snapshots[k], frame.times[k])?;
        acc += 0.5 * (frame.times[k] - frame.times[k - 1]) * (prev + cur);
        prev = cur;
    }
    let tk = frame.times[k_end];
    if t > tk {
        let p = frame.point(fam, path, t)?;
        let cur = integrand(&p.snapshot, t)?;
        acc += 0.5 * (t - tk) * (prev + cur);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{ConstantPath, LinearPath};

    fn two_level() -> HamiltonianFamily {
        let sx = Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let sz = Operator::diagonal(&[1.0, -1.0]);
        HamiltonianFamily::new(vec![sx, sz], vec![]).unwrap()
    }

    #[test]
    fn constant_path_phases() {
        let fam = two_level();
        let path = ConstantPath {
            controls: vec![0.6, 0.8],
            t_f: 2.0,
        };
        let f = build_frame(&fam, &path, 11).unwrap();
        let last = f.dynamical_phases.last().unwrap();
        assert!((last[0] + 2.0).abs() < 1e-12 && (last[1] - 2.0).abs() < 1e-12);
        assert!(f.geometric_phases.iter().flatten().all(|g| g.abs() < 1e-12));
        let eps = nonadiabatic_eps(&f, &fam, &path, 0.7).unwrap();
        assert!(eps.iter().all(|z| z.norm() == 0.0));
        let c = perturbative_amplitudes(&f, &fam, &path, 1.3, 0).unwrap();
        assert!(c.iter().all(|z| z.norm() == 0.0));
        assert_eq!(phase_correction(&f, &fam, &path, 2.0, 0).unwrap(), 0.0);
    }

    #[test]
    fn crossing_is_reported() {
        let fam = two_level();
        let path = LinearPath {
            start: vec![0.0, -1.0],
            end: vec![0.0, 1.0],
            t_f: 1.0,
        };
        let r = build_frame(&fam, &path, 11);
        assert!(matches!(r, Err(AdiabaticError::LevelCrossing { .. })), "{r:?}");
    }

    #[test]
    fn eps_is_hermitian_and_matches_two_level_formula() {
        // H = Δ σx + t σz sweep: ε_{0,1} = ⟨0|Ḣ|1⟩/(2E)²
        let fam = two_level();
        let path = LinearPath {
            start: vec![0.5, -1.0],
            end: vec![0.5, 1.0],
            t_f: 4.0,
        };
        let f = build_frame(&fam, &path, 201).unwrap();
        for &t in &[0.3, 2.0, 3.71] {
            let eps = nonadiabatic_eps(&f, &fam, &path, t).unwrap();
            assert_eq!(eps[(1, 0)], eps[(0, 1)].conj());
            let z = -1.0 + 2.0 * t / 4.0;
            let e = (0.25 + z * z).sqrt();
            // |⟨0|σz|1⟩| = Δ/E for H = Δσx + zσz, ż = 0.5
            let expect = 0.5 * (0.5 / e) / (4.0 * e * e);
            assert!((eps[(0, 1)].norm() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn sectors_must_be_invariant() {
        let sx = Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let r = HamiltonianFamily::with_sectors(vec![sx], vec![], vec![vec![0], vec![1]]);
        assert!(matches!(r, Err(AdiabaticError::SectorNotInvariant { .. })));
    }
}

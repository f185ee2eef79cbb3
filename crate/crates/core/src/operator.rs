// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex operator algebra for small open quantum systems.
//!
//! Everything here works on dense `dim × dim` matrices; the systems this crate
//! targets have a handful of levels, so there is no sparse storage. The three
//! building blocks used everywhere else are:
//!
//! * [`eigendecompose`] / [`eigendecompose_in_sectors`]: Hermitian
//!   diagonalization with a continuous eigenvector gauge,
//! * [`lindblad_rhs`]: the Lindblad generator `-i[H,ρ] + Σ Γ D[A]ρ`,
//! * [`expectation`]: `⟨ψ|A|ψ⟩` or `Tr(Aρ)`.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Relative Hermiticity tolerance for operators.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("operator is not Hermitian (max |A - A†| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("negative dissipation rate {rate} on channel {index}")]
    NegativeRate { index: usize, rate: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("eigensolver did not converge")]
    EigenNonConvergence,
    #[error("invalid sector partition: {0}")]
    InvalidSectors(String),
}

/// A dense `dim × dim` complex operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl Operator {
    pub fn new(mat: DMatrix<C64>) -> Result<Self, OperatorError> {
        if mat.nrows() != mat.ncols() {
            return Err(OperatorError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(OperatorError::NonFinite);
        }
        Ok(Self { mat })
    }

    /// Build from real row-major entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, OperatorError> {
        let dim = rows.len();
        let mut mat = DMatrix::from_element(dim, dim, ZERO);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(OperatorError::NotSquare {
                    rows: dim,
                    cols: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                mat[(i, j)] = C64::new(x, 0.0);
            }
        }
        Self::new(mat)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::from_element(dim, dim, ZERO),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        let mut mat = DMatrix::from_element(dim, dim, ZERO);
        for (i, &v) in values.iter().enumerate() {
            mat[(i, i)] = C64::new(v, 0.0);
        }
        Self { mat }
    }

    /// `|i⟩⟨j|` in a `dim`-dimensional space.
    pub fn transition(dim: usize, i: usize, j: usize) -> Self {
        let mut op = Self::zeros(dim);
        op.mat[(i, j)] = ONE;
        op
    }

    /// `|a⟩⟨b|` for arbitrary vectors.
    pub fn outer(a: &DVector<C64>, b: &DVector<C64>) -> Self {
        Self {
            mat: a * b.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            mat: self.mat.map(|z| z * s),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITIAN_TOL * self.max_abs()
    }

    /// Matrix element `⟨a|A|b⟩`.
    pub fn element(&self, a: &DVector<C64>, b: &DVector<C64>) -> C64 {
        a.dotc(&(&self.mat * b))
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<C64>,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const EIGEN_TOL: f64 = -1e-8;

    pub fn new(mat: DMatrix<C64>) -> Result<Self, OperatorError> {
        let op = Operator::new(mat)?;
        let dev = op.hermiticity_deviation();
        if dev > Self::HERMITIAN_TOL {
            return Err(OperatorError::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = op.mat.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(OperatorError::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        let rho = Self { mat: op.mat };
        let min_eig = rho.min_eigenvalue();
        if min_eig < Self::EIGEN_TOL {
            return Err(OperatorError::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(rho)
    }

    /// Wrap a propagated state without validation; drift is tracked separately.
    pub(crate) fn from_raw(mat: DMatrix<C64>) -> Self {
        Self { mat }
    }

    /// `|ψ⟩⟨ψ|` for a normalized `ψ`.
    pub fn pure(psi: &DVector<C64>) -> Result<Self, OperatorError> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(OperatorError::InvalidDensityMatrix(format!(
                "state norm {norm} is not 1"
            )));
        }
        Ok(Self {
            mat: psi * psi.adjoint(),
        })
    }

    /// Projector onto basis state `k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut mat = DMatrix::from_element(dim, dim, ZERO);
        mat[(k, k)] = ONE;
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn population(&self, k: usize) -> f64 {
        self.mat[(k, k)].re
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        Operator {
            mat: self.mat.clone(),
        }
        .hermiticity_deviation()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

static SNAPSHOT_IDS: AtomicU64 = AtomicU64::new(1);

/// Instantaneous spectrum at one point of a control path.
///
/// Levels are stored sector by sector (in the order the sectors were given)
/// and in ascending order inside each sector. Without sectors the whole space
/// is one sector and the values are globally ascending.
#[derive(Debug, Clone)]
pub struct SpectrumSnapshot {
    pub values: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: DMatrix<C64>,
    /// Sector index of each level.
    pub sectors: Vec<usize>,
    pub id: u64,
    pub gauge_ref: Option<u64>,
}

impl SpectrumSnapshot {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, n: usize) -> DVector<C64> {
        self.vectors.column(n).into_owned()
    }

    /// Multiply eigenvector `n` by `phases[n]` (unit modulus assumed).
    pub fn with_phases(&self, phases: &[C64]) -> Self {
        let mut out = self.clone();
        for (n, &ph) in phases.iter().enumerate() {
            let mut col = out.vectors.column_mut(n);
            col *= ph;
        }
        out.id = SNAPSHOT_IDS.fetch_add(1, Ordering::Relaxed);
        out
    }

    /// `max_n ‖H v_n − E_n v_n‖`.
    pub fn residual(&self, h: &Operator) -> f64 {
        (0..self.dim())
            .map(|n| {
                let v = self.vectors.column(n);
                (h.matrix() * v - v * C64::new(self.values[n], 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |V†V − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        let n = self.dim();
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                err = err.max((g[(i, j)] - target).norm());
            }
        }
        err
    }

    /// `V diag(E) V†`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.values.iter().map(|&e| C64::new(e, 0.0)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }

    /// `⟨E_m|A|E_n⟩` for all `m, n`.
    pub fn matrix_elements(&self, a: &Operator) -> DMatrix<C64> {
        self.vectors.adjoint() * a.matrix() * &self.vectors
    }
}

/// Diagonalize a Hermitian operator with ascending eigenvalues.
///
/// When `gauge_ref` is given, each eigenvector is rotated by a unit phase so
/// that its overlap with the best-matching reference eigenvector is real and
/// non-negative. Without a reference the largest component of each
/// eigenvector is made real-positive.
pub fn eigendecompose(
    h: &Operator,
    gauge_ref: Option<&SpectrumSnapshot>,
) -> Result<SpectrumSnapshot, OperatorError> {
    let all: Vec<usize> = (0..h.dim()).collect();
    eigendecompose_in_sectors(h, std::slice::from_ref(&all), gauge_ref)
}

/// Diagonalize a Hermitian operator block by block.
///
/// `sectors` must partition the basis indices into subspaces that `h` leaves
/// invariant; each sector is diagonalized separately so that degeneracies
/// between different sectors are harmless.
pub fn eigendecompose_in_sectors(
    h: &Operator,
    sectors: &[Vec<usize>],
    gauge_ref: Option<&SpectrumSnapshot>,
) -> Result<SpectrumSnapshot, OperatorError> {
    let dim = h.dim();
    let dev = h.hermiticity_deviation();
    if dev > HERMITIAN_TOL * h.max_abs() {
        return Err(OperatorError::NotHermitian { deviation: dev });
    }
    if let Some(r) = gauge_ref {
        if r.dim() != dim {
            return Err(OperatorError::DimensionMismatch {
                expected: dim,
                found: r.dim(),
            });
        }
    }
    validate_sectors(sectors, dim)?;

    let mut values = Vec::with_capacity(dim);
    let mut vectors = DMatrix::from_element(dim, dim, ZERO);
    let mut labels = Vec::with_capacity(dim);
    let mut col = 0;
    for (s, idx) in sectors.iter().enumerate() {
        let k = idx.len();
        let mut block = DMatrix::from_element(k, k, ZERO);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                // symmetrize so the solver sees an exactly Hermitian block
                block[(a, b)] = (h.matrix()[(i, j)] + h.matrix()[(j, i)].conj()) * 0.5;
            }
        }
        let eig = nalgebra::SymmetricEigen::try_new(block, 1e-15, 10_000)
            .ok_or(OperatorError::EigenNonConvergence)?;
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        for &o in &order {
            values.push(eig.eigenvalues[o]);
            labels.push(s);
            for (a, &i) in idx.iter().enumerate() {
                vectors[(i, col)] = eig.eigenvectors[(a, o)];
            }
            col += 1;
        }
    }

    fix_gauge(&mut vectors, gauge_ref);

    Ok(SpectrumSnapshot {
        values,
        vectors,
        sectors: labels,
        id: SNAPSHOT_IDS.fetch_add(1, Ordering::Relaxed),
        gauge_ref: gauge_ref.map(|r| r.id),
    })
}

pub(crate) fn validate_sectors(sectors: &[Vec<usize>], dim: usize) -> Result<(), OperatorError> {
    let mut seen = vec![false; dim];
    for s in sectors {
        if s.is_empty() {
            return Err(OperatorError::InvalidSectors("empty sector".into()));
        }
        for &i in s {
            if i >= dim {
                return Err(OperatorError::InvalidSectors(format!(
                    "index {i} out of range for dimension {dim}"
                )));
            }
            if seen[i] {
                return Err(OperatorError::InvalidSectors(format!(
                    "index {i} appears twice"
                )));
            }
            seen[i] = true;
        }
    }
    if let Some(i) = seen.iter().position(|&s| !s) {
        return Err(OperatorError::InvalidSectors(format!(
            "index {i} not covered"
        )));
    }
    Ok(())
}

fn fix_gauge(vectors: &mut DMatrix<C64>, gauge_ref: Option<&SpectrumSnapshot>) {
    let dim = vectors.nrows();
    for n in 0..dim {
        let phase = match gauge_ref {
            Some(r) => {
                let v = vectors.column(n);
                let mut best = ZERO;
                for m in 0..dim {
                    let ov = r.vectors.column(m).dotc(&v);
                    if ov.norm() > best.norm() {
                        best = ov;
                    }
                }
                if best.norm() > 1e-300 {
                    Some(best / best.norm())
                } else {
                    None
                }
            }
            None => None,
        };
        let phase = phase.unwrap_or_else(|| largest_component_phase(vectors.column(n).as_slice()));
        let mut c = vectors.column_mut(n);
        c *= phase.conj();
    }
}

fn largest_component_phase(v: &[C64]) -> C64 {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)) {
        Some(z) if max > 0.0 => z / z.norm(),
        _ => ONE,
    }
}

fn check_channels(dim: usize, channels: &[(Operator, f64)]) -> Result<(), OperatorError> {
    for (index, (a, rate)) in channels.iter().enumerate() {
        if a.dim() != dim {
            return Err(OperatorError::DimensionMismatch {
                expected: dim,
                found: a.dim(),
            });
        }
        if !(*rate >= 0.0) {
            return Err(OperatorError::NegativeRate { index, rate: *rate });
        }
    }
    Ok(())
}

/// Lindblad generator `−i[H,ρ] + Σ_α Γ_α (AρA† − ½A†Aρ − ½ρA†A)`.
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    h: &Operator,
    channels: &[(Operator, f64)],
) -> Result<DMatrix<C64>, OperatorError> {
    let dim = rho.dim();
    if h.dim() != dim {
        return Err(OperatorError::DimensionMismatch {
            expected: dim,
            found: h.dim(),
        });
    }
    check_channels(dim, channels)?;
    let r = rho.matrix();
    let hm = h.matrix();
    let mut out = (hm * r - r * hm) * C64::new(0.0, -1.0);
    for (a, rate) in channels {
        if *rate == 0.0 {
            continue;
        }
        let am = a.matrix();
        let ad = am.adjoint();
        let ada = &ad * am;
        let d = am * r * &ad - (&ada * r + r * &ada) * C64::new(0.5, 0.0);
        out += d * C64::new(*rate, 0.0);
    }
    Ok(out)
}

/// A pure or mixed state to take expectation values in.
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a DVector<C64>),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a DVector<C64>> for StateRef<'a> {
    fn from(v: &'a DVector<C64>) -> Self {
        StateRef::Pure(v)
    }
}

impl<'a> From<&'a DensityMatrix> for StateRef<'a> {
    fn from(r: &'a DensityMatrix) -> Self {
        StateRef::Mixed(r)
    }
}

/// `⟨ψ|A|ψ⟩` or `Tr(Aρ)`.
pub fn expectation<'a>(a: &Operator, state: impl Into<StateRef<'a>>) -> Result<C64, OperatorError> {
    match state.into() {
        StateRef::Pure(psi) => {
            if psi.len() != a.dim() {
                return Err(OperatorError::DimensionMismatch {
                    expected: a.dim(),
                    found: psi.len(),
                });
            }
            Ok(a.element(psi, psi))
        }
        StateRef::Mixed(rho) => {
            if rho.dim() != a.dim() {
                return Err(OperatorError::DimensionMismatch {
                    expected: a.dim(),
                    found: rho.dim(),
                });
            }
            Ok((a.matrix() * rho.matrix()).trace())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sigma_x() -> Operator {
        Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    fn sigma_z() -> Operator {
        Operator::diagonal(&[1.0, -1.0])
    }

    #[test]
    fn diagonal_spectrum_is_identity_basis() {
        let s = eigendecompose(&Operator::diagonal(&[0.0, 1.0]), None).unwrap();
        assert_eq!(s.values, vec![0.0, 1.0]);
        assert_abs_diff_eq!(s.vectors[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.vectors[(1, 1)].re, 1.0, epsilon = 1e-15);
        assert!(s.vectors[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn pauli_x_spectrum() {
        let s = eigendecompose(&sigma_x(), None).unwrap();
        assert_abs_diff_eq!(s.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.values[1], 1.0, epsilon = 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // lower state ∝ (1, -1), upper ∝ (1, 1); gauge puts the first large component real-positive
        assert_abs_diff_eq!(s.vectors[(0, 0)].re, r, epsilon = 1e-14);
        assert_abs_diff_eq!(s.vectors[(1, 0)].re, -r, epsilon = 1e-14);
        assert_abs_diff_eq!(s.vectors[(1, 1)].re, r, epsilon = 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = Operator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(
            eigendecompose(&a, None),
            Err(OperatorError::NotHermitian { .. })
        ));
    }

    #[test]
    fn gauge_ref_makes_overlaps_positive() {
        let s0 = eigendecompose(&sigma_x(), None).unwrap();
        let phases = [C64::from_polar(1.0, 0.7), C64::from_polar(1.0, -2.1)];
        let rotated = s0.with_phases(&phases);
        let s1 = eigendecompose(&sigma_x(), Some(&rotated)).unwrap();
        for n in 0..2 {
            let ov = rotated.vector(n).dotc(&s1.vector(n));
            assert!(ov.re > 0.999 && ov.im.abs() < 1e-12);
        }
        assert_eq!(s1.gauge_ref, Some(rotated.id));
    }

    #[test]
    fn sectors_keep_cross_sector_degeneracy_apart() {
        // H = diag block [[0,1],[1,0]] ⊕ [0] has E = -1, 1 | 0 and an exact
        // degeneracy with nothing; ordering is sector-major
        let h = Operator::from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]])
            .unwrap();
        let s = eigendecompose_in_sectors(&h, &[vec![0, 1], vec![2]], None).unwrap();
        assert_eq!(s.sectors, vec![0, 0, 1]);
        assert_abs_diff_eq!(s.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.values[2], 0.0, epsilon = 1e-14);
        assert!(s.vectors[(2, 2)].re > 0.999);
        assert!(eigendecompose_in_sectors(&h, &[vec![0, 1]], None).is_err());
    }

    #[test]
    fn coherent_rhs_for_plus_state() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DVector::from_vec(vec![C64::new(r, 0.0), C64::new(r, 0.0)]);
        let rho = DensityMatrix::pure(&plus).unwrap();
        let rhs = lindblad_rhs(&rho, &sigma_z(), &[]).unwrap();
        let z = sigma_z();
        let expected = (z.matrix() * rho.matrix() - rho.matrix() * z.matrix()) * C64::new(0.0, -1.0);
        assert!((rhs - expected).norm() < 1e-15);
    }

    #[test]
    fn decay_generator_rate() {
        let gamma = 0.37;
        let lower = Operator::transition(2, 1, 0);
        let rho = DensityMatrix::basis(2, 0);
        let rhs = lindblad_rhs(&rho, &Operator::zeros(2), &[(lower, gamma)]).unwrap();
        assert_abs_diff_eq!(rhs[(0, 0)].re, -gamma, epsilon = 1e-15);
        assert_abs_diff_eq!(rhs[(1, 1)].re, gamma, epsilon = 1e-15);
    }

    #[test]
    fn lindblad_errors() {
        let rho = DensityMatrix::basis(2, 0);
        let bad = lindblad_rhs(&rho, &Operator::zeros(3), &[]);
        assert!(matches!(bad, Err(OperatorError::DimensionMismatch { .. })));
        let neg = lindblad_rhs(&rho, &Operator::zeros(2), &[(Operator::identity(2), -1.0)]);
        assert!(matches!(neg, Err(OperatorError::NegativeRate { .. })));
    }

    #[test]
    fn trivial_expectations() {
        let zero = DVector::from_vec(vec![ONE, ZERO]);
        assert_abs_diff_eq!(expectation(&sigma_z(), &zero).unwrap().re, 1.0);
        let rho = DensityMatrix::basis(3, 1);
        assert_abs_diff_eq!(expectation(&Operator::identity(3), &rho).unwrap().re, 1.0);
        assert!(expectation(&sigma_z(), &rho).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = DMatrix::from_element(2, 2, ZERO);
        m[(0, 0)] = C64::new(0.6, 0.0);
        m[(1, 1)] = C64::new(0.6, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 1)] = C64::new(0.4, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_ok());
        m[(0, 0)] = C64::new(1.1, 0.0);
        m[(1, 1)] = C64::new(-0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }
}

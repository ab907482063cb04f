//! Quadratic Hamiltonians `H = ½|p|² + ½(Vq, q)` on the phase space `R^{2N}`.
//!
//! Everything is computed in the normal coordinates of `V`: with
//! `V = Σ ωₖ² vₖvₖᵀ` the flow is a rotation in every `(ωₖ q̃ₖ, p̃ₖ)` plane, which
//! makes it exact for all times and cheap once the decomposition is cached.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, relative_asymmetry, symmetric_eigen_sorted, RANK_TOL};
use crate::rng::Rng;

/// Asymmetry accepted by [`spectral_decompose`] (relative, Frobenius).
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A point `ψ = (q, p)` of the phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl PhaseVector {
    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), found: p.len() });
        }
        if q.iter().chain(p.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(PhaseVector { q, p })
    }

    pub fn from_slices(q: &[f64], p: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(q), DVector::from_column_slice(p))
    }

    pub fn zeros(n: usize) -> Self {
        PhaseVector { q: DVector::zeros(n), p: DVector::zeros(n) }
    }

    /// Splits a `2N` vector laid out as `(q, p)`.
    pub fn from_stacked(psi: &DVector<f64>) -> Result<Self> {
        if psi.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!("odd phase dimension {}", psi.len())));
        }
        let n = psi.len() / 2;
        Self::new(psi.rows(0, n).clone_owned(), psi.rows(n, n).clone_owned())
    }

    pub fn stacked(&self) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(2 * n, |i, _| if i < n { self.q[i] } else { self.p[i - n] })
    }

    /// Number of degrees of freedom `N`.
    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

/// `V` together with its spectral decomposition `V = Σ ωₖ² vₖvₖᵀ`.
#[derive(Debug, Clone)]
pub struct QuadraticHamiltonian {
    v: DMatrix<f64>,
    omega_sq: DVector<f64>,
    omega: DVector<f64>,
    /// Column `k` is the eigenvector `vₖ`.
    modes: DMatrix<f64>,
}

/// Diagonalises a symmetric positive-definite interaction matrix.
pub fn spectral_decompose(v: &DMatrix<f64>) -> Result<QuadraticHamiltonian> {
    ensure_square(v)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let asymmetry = relative_asymmetry(v);
    if asymmetry > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let sym = (v + v.transpose()) * 0.5;
    let (omega_sq, modes) = symmetric_eigen_sorted(&sym);
    let max = omega_sq.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = omega_sq[0];
    if max <= 0.0 || min <= 1e-12 * max {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    let omega = omega_sq.map(f64::sqrt);
    Ok(QuadraticHamiltonian { v: sym, omega_sq, omega, modes })
}

impl QuadraticHamiltonian {
    pub fn new(v: &DMatrix<f64>) -> Result<Self> {
        spectral_decompose(v)
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Eigenvalues `ωₖ²`, ascending.
    pub fn omega_sq(&self) -> &DVector<f64> {
        &self.omega_sq
    }

    /// Frequencies `ωₖ = √(ωₖ²)`, ascending.
    pub fn frequencies(&self) -> &DVector<f64> {
        &self.omega
    }

    /// Orthonormal eigenvectors as columns.
    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    /// Overlaps `βₖ = (vₖ, e₁)`.
    pub fn overlaps(&self) -> DVector<f64> {
        self.modes.row(0).transpose()
    }

    /// `‖V − Σ ωₖ² vₖvₖᵀ‖_F / ‖V‖_F`.
    pub fn reconstruction_error(&self) -> f64 {
        let rebuilt = &self.modes * DMatrix::from_diagonal(&self.omega_sq) * self.modes.transpose();
        (&self.v - rebuilt).norm() / self.v.norm()
    }

    /// `f(√V) = Σ f(ωₖ) vₖvₖᵀ`.
    pub fn spectral_function(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let d = DVector::from_iterator(self.dim(), self.omega.iter().map(|&w| f(w)));
        &self.modes * DMatrix::from_diagonal(&d) * self.modes.transpose()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.spectral_function(|w| 1.0 / (w * w))
    }

    fn check_dim(&self, psi: &PhaseVector) -> Result<()> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.dim() });
        }
        Ok(())
    }

    /// `H(ψ) = ½|p|² + ½(Vq, q)`.
    pub fn energy(&self, psi: &PhaseVector) -> Result<f64> {
        self.check_dim(psi)?;
        Ok(0.5 * psi.p.norm_squared() + 0.5 * psi.q.dot(&(&self.v * &psi.q)))
    }

    /// Normal coordinates `(q̃, p̃) = (Mᵀq, Mᵀp)` of a phase vector.
    pub fn to_normal(&self, psi: &PhaseVector) -> Result<NormalState> {
        self.check_dim(psi)?;
        Ok(NormalState { q: self.modes.tr_mul(&psi.q), p: self.modes.tr_mul(&psi.p) })
    }

    pub fn from_normal(&self, state: &NormalState) -> PhaseVector {
        PhaseVector { q: &self.modes * &state.q, p: &self.modes * &state.p }
    }

    /// Rotates normal coordinates by time `t`.
    pub fn advance_normal(&self, state: &NormalState, t: f64) -> NormalState {
        let n = self.dim();
        let mut q = DVector::zeros(n);
        let mut p = DVector::zeros(n);
        for k in 0..n {
            let w = self.omega[k];
            let (s, c) = (w * t).sin_cos();
            q[k] = state.q[k] * c + state.p[k] / w * s;
            p[k] = -w * state.q[k] * s + state.p[k] * c;
        }
        NormalState { q, p }
    }

    /// `e^{tA}ψ` for `A = [[0, E], [−V, 0]]`; `t` may be negative.
    pub fn flow(&self, psi: &PhaseVector, t: f64) -> Result<PhaseVector> {
        let normal = self.to_normal(psi)?;
        Ok(self.from_normal(&self.advance_normal(&normal, t)))
    }

    /// The generator `A = [[0, E], [−V, 0]]`.
    pub fn generator(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        a.view_mut((0, n), (n, n)).fill_with_identity();
        a.view_mut((n, 0), (n, n)).copy_from(&(-&self.v));
        a
    }
}

/// Phase vector expressed in the eigenbasis of `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalState {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

/// The Krylov space `l_V = span{Vⁿe₁}` and the overlaps of `e₁` with the modes.
#[derive(Debug, Clone)]
pub struct MixingSubspace {
    /// Orthonormal columns spanning `l_V`.
    pub basis: DMatrix<f64>,
    pub dim: usize,
    /// `βₖ = (vₖ, e₁)`, one per eigenvector.
    pub overlaps: DVector<f64>,
}

/// Orthonormal basis of `span{e₁, Ve₁, …, V^{N−1}e₁}` by Lanczos with full
/// re-orthogonalisation.
///
/// A new direction is rejected when its residual after orthogonalisation is at
/// most `RANK_TOL·‖V‖₂`; by Cayley–Hamilton degree `N − 1` suffices.
pub fn mixing_subspace(h: &QuadraticHamiltonian) -> MixingSubspace {
    let n = h.dim();
    let v = h.matrix();
    let scale = h.omega_sq()[n - 1];
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut e1 = DVector::zeros(n);
    e1[0] = 1.0;
    columns.push(e1);
    while columns.len() < n {
        let mut w = v * columns.last().expect("non-empty");
        for _ in 0..2 {
            for c in &columns {
                let proj = c.dot(&w);
                w.axpy(-proj, c, 1.0);
            }
        }
        let norm = w.norm();
        if norm <= RANK_TOL * scale {
            break;
        }
        columns.push(w / norm);
    }
    let dim = columns.len();
    MixingSubspace { basis: DMatrix::from_columns(&columns), dim, overlaps: h.overlaps() }
}

/// `true` iff `l_V = R^N`, i.e. `L₋(V)` is the whole phase space.
pub fn is_v_plus(h: &QuadraticHamiltonian) -> bool {
    mixing_subspace(h).dim == h.dim()
}

/// Spectral characterisation of `V⁺`: simple spectrum and no vanishing overlap.
pub fn is_v_plus_spectral(h: &QuadraticHamiltonian) -> bool {
    let w2 = h.omega_sq();
    let scale = w2[w2.len() - 1];
    let simple = w2.as_slice().windows(2).all(|p| p[1] - p[0] > RANK_TOL * scale);
    simple && h.overlaps().iter().all(|b| b.abs() > RANK_TOL)
}

/// Result of the bounded search for integer relations between frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RelationReport {
    /// No `n ≠ 0` with `‖n‖_∞ ≤ max_coeff` and `|Σ nₖωₖ| ≤ tol`.
    NoRelationFound { max_coeff: u32, tol: f64 },
    /// The first relation found (smallest `‖n‖_∞`, then lexicographic, first
    /// non-zero coefficient positive).
    Relation { coefficients: Vec<i64>, residual: f64 },
}

impl RelationReport {
    pub fn is_independent(&self) -> bool {
        matches!(self, RelationReport::NoRelationFound { .. })
    }
}

pub const DEFAULT_MAX_COEFF: u32 = 20;
pub const DEFAULT_RELATION_TOL: f64 = 1e-9;
pub const DEFAULT_SEARCH_BUDGET: f64 = 1e8;

/// Bounded certificate of rational independence with the default budget.
pub fn rational_independence(frequencies: &[f64], max_coeff: u32, tol: f64) -> Result<RelationReport> {
    rational_independence_with_budget(frequencies, max_coeff, tol, DEFAULT_SEARCH_BUDGET)
}

pub fn rational_independence_with_budget(
    frequencies: &[f64],
    max_coeff: u32,
    tol: f64,
    budget: f64,
) -> Result<RelationReport> {
    if frequencies.is_empty() {
        return Err(Error::Empty);
    }
    if max_coeff < 1 || tol <= 0.0 {
        return Err(Error::InvalidArgument("max_coeff must be ≥ 1 and tol > 0".into()));
    }
    let dim = frequencies.len();
    let size = (2.0 * max_coeff as f64 + 1.0).powi(dim as i32);
    if size > budget {
        return Err(Error::SearchSpaceTooLarge { size, budget });
    }
    // Shell by shell so that the smallest relation is reported first.
    for shell in 1..=max_coeff as i64 {
        let mut n = vec![-shell; dim];
        loop {
            let on_shell = n.iter().any(|c| c.abs() == shell);
            let canonical = n.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0);
            if on_shell && canonical {
                let residual: f64 = n.iter().zip(frequencies).map(|(&c, w)| c as f64 * w).sum();
                if residual.abs() <= tol {
                    return Ok(RelationReport::Relation { coefficients: n, residual });
                }
            }
            // Odometer increment, last coordinate fastest.
            let mut i = dim;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if n[i] < shell {
                    n[i] += 1;
                    break;
                }
                n[i] = -shell;
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX {
                break;
            }
        }
    }
    Ok(RelationReport::NoRelationFound { max_coeff, tol })
}

/// Upper bound `⌈2 / minₖ βₖ² + 2⌉` on the number of alternated flows and
/// flips needed to cover an energy surface.
pub fn covering_bound(h: &QuadraticHamiltonian) -> Result<u64> {
    let overlaps = h.overlaps();
    let (mode, min_sq) = overlaps
        .iter()
        .map(|b| b * b)
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    if min_sq.sqrt() <= RANK_TOL {
        return Err(Error::NotMixing { mode });
    }
    let bound = 2.0 / min_sq + 2.0;
    // Absorb rounding in βₖ² so that exact rational bounds are not bumped up.
    Ok((bound * (1.0 - 1e-12)).ceil() as u64)
}

/// Draws a point of the energy surface `H = h` from the microcanonical
/// (Liouville) measure.
///
/// In the scaled normal coordinates `(ωₖq̃ₖ, p̃ₖ)` the surface is the sphere of
/// radius `√(2h)` and the Liouville measure is its uniform measure.
pub fn sample_microcanonical(h: &QuadraticHamiltonian, energy: f64, rng: &mut Rng) -> Result<PhaseVector> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::NonPositiveEnergy(energy));
    }
    let n = h.dim();
    let z: Vec<f64> = loop {
        let z: Vec<f64> = (0..2 * n).map(|_| StandardNormal.sample(rng)).collect();
        if z.iter().any(|x: &f64| *x != 0.0) {
            break z;
        }
    };
    let radius = (2.0 * energy).sqrt();
    let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let omega = h.frequencies();
    let q = DVector::from_fn(n, |k, _| radius * z[k] / norm / omega[k]);
    let p = DVector::from_fn(n, |k, _| radius * z[n + k] / norm);
    Ok(h.from_normal(&NormalState { q, p }))
}

/// Exact microcanonical second moments `E[ψψᵀ]` on `H = h`.
///
/// Equipartition on the sphere gives `(h/N)·diag(V⁻¹, E)`.
pub fn microcanonical_second_moments(h: &QuadraticHamiltonian, energy: f64) -> DMatrix<f64> {
    let n = h.dim();
    let scale = energy / n as f64;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(h.inverse() * scale));
    m.view_mut((n, n), (n, n)).fill_with_identity();
    m.view_mut((n, n), (n, n)).scale_mut(scale);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn chain2() -> QuadraticHamiltonian {
        spectral_decompose(&DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])).unwrap()
    }

    #[test]
    fn decompose_identity_case() {
        let h = spectral_decompose(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_relative_eq!(h.omega_sq()[0], 1.0);
        assert_relative_eq!(h.modes()[(0, 0)], 1.0);
    }

    #[test]
    fn decompose_two_chain_by_hand() {
        let h = chain2();
        assert_relative_eq!(h.omega_sq()[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(h.omega_sq()[1], 3.0, epsilon = 1e-14);
        assert_relative_eq!(h.modes()[(0, 0)], FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_relative_eq!(h.modes()[(1, 0)], FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_relative_eq!(h.modes()[(0, 1)], FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_relative_eq!(h.modes()[(1, 1)], -FRAC_1_SQRT_2, epsilon = 1e-14);
        assert!(h.reconstruction_error() <= 1e-10);
    }

    #[test]
    fn decompose_diagonal() {
        let h = spectral_decompose(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 9.0]))).unwrap();
        for k in 0..3 {
            assert_relative_eq!(h.frequencies()[k], (k + 1) as f64, epsilon = 1e-14);
            assert_relative_eq!(h.modes()[(k, k)], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn decompose_rejects_bad_input() {
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -0.9, 2.0]);
        assert!(matches!(spectral_decompose(&asym), Err(Error::NotSymmetric { .. })));
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(spectral_decompose(&indefinite), Err(Error::NotPositiveDefinite { .. })));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(spectral_decompose(&singular), Err(Error::NotPositiveDefinite { .. })));
        assert!(matches!(spectral_decompose(&DMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn flow_of_unit_oscillator_quarter_period() {
        let h = spectral_decompose(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        let psi = PhaseVector::from_slices(&[1.0], &[0.0]).unwrap();
        let out = h.flow(&psi, PI / 2.0).unwrap();
        assert_relative_eq!(out.q[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(out.p[0], -1.0, epsilon = 1e-15);
        assert_eq!(h.flow(&psi, 0.0).unwrap(), psi);
    }

    #[test]
    fn flow_conserves_energy_on_chain() {
        let h = chain2();
        let mut rng = stream_rng(3, 0);
        let psi = sample_microcanonical(&h, 2.5, &mut rng).unwrap();
        let e0 = h.energy(&psi).unwrap();
        let e1 = h.energy(&h.flow(&psi, 0.7).unwrap()).unwrap();
        assert!((e1 - e0).abs() <= 1e-10 * e0);
    }

    #[test]
    fn flow_matches_matrix_exponential() {
        let h = chain2();
        let psi = PhaseVector::from_slices(&[0.3, -1.2], &[0.5, 0.1]).unwrap();
        let t = 1.9;
        let expected = (h.generator() * t).exp() * psi.stacked();
        let got = h.flow(&psi, t).unwrap().stacked();
        assert!((got - expected).norm() < 1e-12);
    }

    #[test]
    fn energy_examples() {
        let one = spectral_decompose(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(one.energy(&PhaseVector::zeros(1)).unwrap(), 0.0);
        let psi = PhaseVector::from_slices(&[3.0], &[4.0]).unwrap();
        assert_relative_eq!(one.energy(&psi).unwrap(), 12.5);
        let psi = PhaseVector::from_slices(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_relative_eq!(chain2().energy(&psi).unwrap(), 1.0);
        assert!(matches!(one.energy(&PhaseVector::zeros(2)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn mixing_subspace_examples() {
        let diag = |d: &[f64]| spectral_decompose(&DMatrix::from_diagonal(&DVector::from_column_slice(d))).unwrap();
        assert_eq!(mixing_subspace(&diag(&[1.0, 4.0])).dim, 1);
        assert_eq!(mixing_subspace(&diag(&[1.0, 1.0, 2.0])).dim, 1);
        let m = mixing_subspace(&chain2());
        assert_eq!(m.dim, 2);
        assert_relative_eq!(m.overlaps[0].abs(), FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_relative_eq!(m.overlaps[1].abs(), FRAC_1_SQRT_2, epsilon = 1e-14);
    }

    #[test]
    fn v_plus_examples() {
        assert!(is_v_plus(&chain2()));
        let d = spectral_decompose(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))).unwrap();
        assert!(!is_v_plus(&d));
        assert!(!is_v_plus_spectral(&d));
    }

    #[test]
    fn relation_search_examples() {
        assert_eq!(
            rational_independence(&[1.0, 2.0], 3, 1e-9).unwrap(),
            RelationReport::Relation { coefficients: vec![2, -1], residual: 0.0 }
        );
        assert_eq!(
            rational_independence(&[1.0, 3.0], 3, 1e-9).unwrap(),
            RelationReport::Relation { coefficients: vec![3, -1], residual: 0.0 }
        );
        assert!(rational_independence(&[1.0, 2f64.sqrt()], 10, 1e-9).unwrap().is_independent());
        assert!(matches!(
            rational_independence_with_budget(&[1.0; 6], 20, 1e-9, 1e6),
            Err(Error::SearchSpaceTooLarge { .. })
        ));
        assert!(rational_independence(&[1.0], 0, 1e-9).is_err());
    }

    #[test]
    fn covering_bound_examples() {
        let one = spectral_decompose(&DMatrix::from_element(1, 1, 4.0)).unwrap();
        assert_eq!(covering_bound(&one).unwrap(), 4);
        assert_eq!(covering_bound(&chain2()).unwrap(), 6);
        let d = spectral_decompose(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))).unwrap();
        assert!(matches!(covering_bound(&d), Err(Error::NotMixing { mode: 1 })));
    }

    #[test]
    fn microcanonical_rejects_nonpositive_energy() {
        let mut rng = stream_rng(0, 0);
        assert!(matches!(sample_microcanonical(&chain2(), 0.0, &mut rng), Err(Error::NonPositiveEnergy(_))));
        assert!(matches!(sample_microcanonical(&chain2(), -1.0, &mut rng), Err(Error::NonPositiveEnergy(_))));
    }

    #[test]
    fn microcanonical_energy_is_exact() {
        let h = chain2();
        let mut rng = stream_rng(1, 0);
        let draws = 10_000;
        let mut mean = 0.0;
        for _ in 0..draws {
            let psi = sample_microcanonical(&h, 1.3, &mut rng).unwrap();
            let e = h.energy(&psi).unwrap();
            assert!((e - 1.3).abs() <= 1e-12 * 1.3);
            mean += e / draws as f64;
        }
        assert!((mean - 1.3).abs() <= 1e-10);
    }

    #[test]
    fn microcanonical_moments_on_identity() {
        let h = spectral_decompose(&DMatrix::identity(2, 2)).unwrap();
        let energy = 0.8;
        let mut rng = stream_rng(2, 0);
        let draws = 100_000;
        let (mut p1sq, mut p1sq2, mut qp, mut qp2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..draws {
            let psi = sample_microcanonical(&h, energy, &mut rng).unwrap();
            let a = psi.p[0] * psi.p[0];
            let b = psi.q[0] * psi.p[0];
            p1sq += a;
            p1sq2 += a * a;
            qp += b;
            qp2 += b * b;
        }
        let n = draws as f64;
        let (m1, m2) = (p1sq / n, qp / n);
        let se1 = ((p1sq2 / n - m1 * m1) / n).sqrt();
        let se2 = ((qp2 / n - m2 * m2) / n).sqrt();
        // 2h/(2N) with 2N = 4.
        assert!((m1 - energy / 2.0).abs() <= 3.0 * se1, "{m1} vs {}", energy / 2.0);
        assert!(m2.abs() <= 3.0 * se2);
    }
}

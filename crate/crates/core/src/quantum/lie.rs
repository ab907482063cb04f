//! Dynamical Lie algebras generated by two Hamiltonians.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{bracket, random_hermitian, HermitianMatrix};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RANK_TOL};
use crate::rng::stream_rng;

/// A new direction is kept when its squared relative residual after
/// projection exceeds this (the Gram-eigenvalue threshold).
pub const INDEPENDENCE_TOL: f64 = 1e-10;

/// Orthonormal coordinates of a Hermitian matrix for `⟨A, B⟩ = Tr(AB)`:
/// diagonal entries, then `√2·Re` and `√2·Im` of the upper triangle.
pub fn hermitian_coordinates(h: &HermitianMatrix) -> DVector<f64> {
    let n = h.dim();
    let m = h.matrix();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    let s = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in i + 1..n {
            out.push(s * m[(i, j)].re);
            out.push(s * m[(i, j)].im);
        }
    }
    DVector::from_vec(out)
}

pub fn from_hermitian_coordinates(x: &DVector<f64>, n: usize) -> HermitianMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(x[i], 0.0);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = Complex64::new(s * x[k], s * x[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    HermitianMatrix::hermitize(m)
}

/// Real span of `H₁`, `H₂` and all their iterated brackets.
#[derive(Debug, Clone, Serialize)]
pub struct LieClosure {
    /// Orthonormal for `Tr(AB)`.
    #[serde(skip)]
    pub basis: Vec<HermitianMatrix>,
    pub dim: usize,
    /// Bracket rounds performed until no new direction appeared.
    pub generations: usize,
}

impl LieClosure {
    fn coordinates(&self) -> Vec<DVector<f64>> {
        self.basis.iter().map(hermitian_coordinates).collect()
    }

    /// Relative distance of `x` from the span.
    pub fn membership_residual(&self, x: &HermitianMatrix) -> f64 {
        let norm = x.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let mut r = hermitian_coordinates(x);
        for b in self.coordinates() {
            let proj = b.dot(&r);
            r.axpy(-proj, &b, 1.0);
        }
        r.norm() / norm
    }

    /// Largest relative residual of `{B, Hᵢ}` over basis elements `B`.
    pub fn closure_defect(&self, h1: &HermitianMatrix, h2: &HermitianMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for b in &self.basis {
            for g in [h1, h2] {
                let x = bracket(b, g).expect("dimensions agree");
                // Brackets that vanish to rounding say nothing about membership.
                if x.norm() > 1e-12 * g.norm() {
                    worst = worst.max(self.membership_residual(&x));
                }
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Gram matrix `Tr(BᵢBⱼ)`.
    pub fn gram_min_eigenvalue(&self) -> f64 {
        let k = self.basis.len();
        if k == 0 {
            return 0.0;
        }
        let g = DMatrix::from_fn(k, k, |i, j| self.basis[i].inner(&self.basis[j]));
        g.symmetric_eigenvalues().min()
    }
}

struct SpanBuilder {
    coords: Vec<DVector<f64>>,
    n: usize,
}

impl SpanBuilder {
    /// Adds the component of `x` orthogonal to the span if it is significant.
    fn try_add(&mut self, x: &HermitianMatrix, scale: f64) -> Option<HermitianMatrix> {
        let norm = x.norm();
        if norm <= 1e-12 * scale {
            return None;
        }
        let mut r = hermitian_coordinates(x);
        for _ in 0..2 {
            for b in &self.coords {
                let proj = b.dot(&r);
                r.axpy(-proj, b, 1.0);
            }
        }
        let rel = r.norm() / norm;
        if rel * rel <= INDEPENDENCE_TOL {
            return None;
        }
        let r = r.normalize();
        let m = from_hermitian_coordinates(&r, self.n);
        self.coords.push(r);
        Some(m)
    }
}

/// Breadth-first closure of `span{H₁, H₂}` under brackets with `H₁` and `H₂`.
///
/// Iterated brackets `{…{{Hᵢ₁, Hᵢ₂}, Hᵢ₃}…}` span the generated algebra, so it
/// suffices to bracket each new direction with the two generators.
pub fn lie_closure(h1: &HermitianMatrix, h2: &HermitianMatrix) -> Result<LieClosure> {
    if h1.dim() != h2.dim() {
        return Err(Error::DimensionMismatch { expected: h1.dim(), found: h2.dim() });
    }
    let n = h1.dim();
    let max_dim = n * n;
    let scale = h1.norm().max(h2.norm());
    let mut span = SpanBuilder { coords: Vec::new(), n };
    let mut basis = Vec::new();
    let mut frontier = Vec::new();
    for g in [h1, h2] {
        if let Some(m) = span.try_add(g, scale) {
            frontier.push(m.clone());
            basis.push(m);
        }
    }
    let mut generations = 0;
    while !frontier.is_empty() && basis.len() < max_dim {
        generations += 1;
        let mut next = Vec::new();
        for b in &frontier {
            for g in [h1, h2] {
                let x = bracket(b, g)?;
                if let Some(m) = span.try_add(&x, g.norm()) {
                    next.push(m.clone());
                    basis.push(m);
                }
            }
        }
        frontier = next;
    }
    Ok(LieClosure { dim: basis.len(), basis, generations })
}

/// `L(H₁, H₂)` is all Hermitian matrices, i.e. the switching group is `U(N)`.
pub fn is_u_controllable(h1: &HermitianMatrix, h2: &HermitianMatrix) -> Result<bool> {
    Ok(lie_closure(h1, h2)?.dim == h1.dim() * h1.dim())
}

/// `ad_{H₂}ⁿ(H₁) = {H₂, {H₂, … {H₂, H₁}}}`.
pub fn ad_power(h2: &HermitianMatrix, h1: &HermitianMatrix, n: usize) -> Result<HermitianMatrix> {
    let mut x = h1.clone();
    for _ in 0..n {
        x = bracket(h2, &x)?;
    }
    Ok(x)
}

/// Sufficient spectral criterion for controllability, evaluated in the
/// eigenbasis `ψₖ` of `H₂`.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    /// All `(H₁ψₖ, ψⱼ)`, `k ≠ j`, are non-zero.
    pub off_diagonal_nonzero: bool,
    pub min_off_diagonal: f64,
    /// The gaps `λₖ − λₗ` over ordered pairs `k ≠ l` are pairwise distinct.
    pub gaps_distinct: bool,
    pub min_gap_separation: f64,
    pub trace_h1: f64,
    pub trace_h2: f64,
    pub applicable: bool,
    /// `N² − 1` when both generators are traceless, `N²` otherwise; `None`
    /// when the hypotheses fail.
    pub predicted_dim: Option<usize>,
}

pub fn check_explicit_criterion(h1: &HermitianMatrix, h2: &HermitianMatrix) -> Result<CriterionReport> {
    if h1.dim() != h2.dim() {
        return Err(Error::DimensionMismatch { expected: h1.dim(), found: h2.dim() });
    }
    let n = h1.dim();
    let spec = h2.eigen();
    let rotated = spec.vectors.adjoint() * h1.matrix() * &spec.vectors;
    let mut min_off = f64::INFINITY;
    for k in 0..n {
        for j in 0..n {
            if k != j {
                min_off = min_off.min(rotated[(k, j)].norm());
            }
        }
    }
    let mut gaps = Vec::with_capacity(n * (n - 1));
    for k in 0..n {
        for l in 0..n {
            if k != l {
                gaps.push(spec.values[k] - spec.values[l]);
            }
        }
    }
    gaps.sort_by(f64::total_cmp);
    let min_sep = gaps.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let spread = spec.values[n - 1] - spec.values[0];
    let off_ok = n < 2 || min_off > RANK_TOL * h1.norm();
    let gaps_ok = n < 2 || (spread > 0.0 && min_sep > RANK_TOL * spread);
    let traceless = |h: &HermitianMatrix| h.trace().abs() <= RANK_TOL * h.norm() * (n as f64).sqrt();
    let applicable = off_ok && gaps_ok;
    let predicted_dim = applicable.then(|| if traceless(h1) && traceless(h2) { n * n - 1 } else { n * n });
    Ok(CriterionReport {
        off_diagonal_nonzero: off_ok,
        min_off_diagonal: if n < 2 { 0.0 } else { min_off },
        gaps_distinct: gaps_ok,
        min_gap_separation: if gaps.len() < 2 { 0.0 } else { min_sep },
        trace_h1: h1.trace(),
        trace_h2: h2.trace(),
        applicable,
        predicted_dim,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GenericityFailure {
    pub index: usize,
    pub closure_dim: usize,
    pub h1: HermitianMatrix,
    pub h2: HermitianMatrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct GenericityReport {
    pub dim: usize,
    pub samples: usize,
    pub controllable: usize,
    pub fraction: f64,
    pub failures: Vec<GenericityFailure>,
}

/// Fraction of independent random Hermitian pairs that are U-controllable.
pub fn sample_generic_pairs(n: usize, n_samples: usize, seed: u64) -> Result<GenericityReport> {
    if n_samples == 0 {
        return Err(Error::TooFewSamples { required: 1, found: 0 });
    }
    if n == 0 {
        return Err(Error::Empty);
    }
    let results: Vec<(usize, HermitianMatrix, HermitianMatrix)> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let h1 = random_hermitian(n, &mut rng);
            let h2 = random_hermitian(n, &mut rng);
            let dim = lie_closure(&h1, &h2).map(|c| c.dim).unwrap_or(0);
            (dim, h1, h2)
        })
        .collect();
    let failures: Vec<GenericityFailure> = results
        .into_iter()
        .enumerate()
        .filter(|(_, (dim, _, _))| *dim != n * n)
        .map(|(index, (closure_dim, h1, h2))| GenericityFailure { index, closure_dim, h1, h2 })
        .collect();
    let controllable = n_samples - failures.len();
    Ok(GenericityReport {
        dim: n,
        samples: n_samples,
        controllable,
        fraction: controllable as f64 / n_samples as f64,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn pauli_closures() {
        let sx = HermitianMatrix::sigma_x();
        let sz = HermitianMatrix::sigma_z();
        let c = lie_closure(&sx, &sz).unwrap();
        assert_eq!(c.dim, 3);
        assert!(c.closure_defect(&sx, &sz) < 1e-9);
        let d = HermitianMatrix::diagonal(&[1.0, 0.0]);
        assert_eq!(lie_closure(&sx, &d).unwrap().dim, 4);
        assert!(is_u_controllable(&sx, &d).unwrap());
        assert!(!is_u_controllable(&sx, &sz).unwrap());
        let a = HermitianMatrix::diagonal(&[1.0, 2.0]);
        let b = HermitianMatrix::diagonal(&[3.0, 4.0]);
        let c = lie_closure(&a, &b).unwrap();
        assert_eq!(c.dim, 2);
        assert_eq!(c.generations, 1);
        assert!(!is_u_controllable(&a, &b).unwrap());
    }

    #[test]
    fn coordinates_are_an_isometry() {
        let mut rng = stream_rng(3, 0);
        let a = random_hermitian(3, &mut rng);
        let b = random_hermitian(3, &mut rng);
        let (x, y) = (hermitian_coordinates(&a), hermitian_coordinates(&b));
        assert!((x.dot(&y) - a.inner(&b)).abs() < 1e-12);
        assert!((from_hermitian_coordinates(&x, 3).matrix() - a.matrix()).norm() < 1e-14);
    }

    #[test]
    fn criterion_on_pauli_pairs() {
        let sx = HermitianMatrix::sigma_x();
        let r = check_explicit_criterion(&sx, &HermitianMatrix::sigma_z()).unwrap();
        assert!(r.off_diagonal_nonzero && r.gaps_distinct);
        assert_eq!(r.predicted_dim, Some(3));
        let r = check_explicit_criterion(&sx, &HermitianMatrix::diagonal(&[1.0, 0.0])).unwrap();
        assert_eq!(r.predicted_dim, Some(4));
        let r = check_explicit_criterion(&HermitianMatrix::sigma_z(), &HermitianMatrix::sigma_z()).unwrap();
        assert!(!r.off_diagonal_nonzero);
        assert_eq!(r.predicted_dim, None);
    }

    #[test]
    fn generic_pairs_need_samples() {
        assert!(sample_generic_pairs(2, 0, 0).is_err());
        let r = sample_generic_pairs(2, 20, 0).unwrap();
        assert_eq!(r.fraction, 1.0);
    }
}

//! Finite quantum systems switched at random between two Hamiltonians.

mod lie;
mod switch;
mod symplectic;

pub use lie::*;
pub use switch::*;
pub use symplectic::*;

use nalgebra::DVector;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, hermitian_eigen_sorted, relative_antihermiticity, unitarity_defect, CMatrix, CVector};
use crate::rng::Rng;

/// Accepted relative anti-Hermitian part of a Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Accepted `‖U*U − E‖_F` of a unitary input.
pub const UNITARY_TOL: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// A self-adjoint `N×N` matrix, stored exactly Hermitian.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "ComplexRows")]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure_square(&m)?;
        check_finite(&m)?;
        let asymmetry = relative_antihermiticity(&m);
        if asymmetry > HERMITIAN_TOL {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self::hermitize(m))
    }

    /// `(M + M*)/2`, without validation.
    pub fn hermitize(m: CMatrix) -> Self {
        let adj = m.adjoint();
        HermitianMatrix((m + adj) * c(0.5))
    }

    pub fn from_real(m: &nalgebra::DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(c))
    }

    pub fn diagonal(d: &[f64]) -> Self {
        HermitianMatrix(CMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&x| c(x)))))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMatrix::identity(n, n))
    }

    pub fn sigma_x() -> Self {
        HermitianMatrix(CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]))
    }

    pub fn sigma_y() -> Self {
        HermitianMatrix(CMatrix::from_row_slice(2, 2, &[c(0.0), -I, I, c(0.0)]))
    }

    pub fn sigma_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    /// Projector onto the unit vector `ψ`.
    pub fn projector(psi: &CVector) -> Self {
        Self::hermitize(psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `Tr(AB)`, real for Hermitian arguments.
    pub fn inner(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a * b.conj()).re).sum()
    }

    pub fn eigen(&self) -> Spectrum {
        let (values, vectors) = hermitian_eigen_sorted(&self.0);
        Spectrum { values, vectors }
    }

    /// Conjugation `W H W*`.
    pub fn conjugate_by(&self, w: &CMatrix) -> Self {
        Self::hermitize(w * &self.0 * w.adjoint())
    }
}

/// `{A, B} = i(AB − BA)`, Hermitian whenever `A` and `B` are.
pub fn bracket(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let ab = &a.0 * &b.0;
    let ba = &b.0 * &a.0;
    Ok(HermitianMatrix::hermitize((ab - ba) * I))
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    /// `e^{−itH}`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let phases = self.values.map(|l| Complex64::from_polar(1.0, -l * t));
        let scaled = CMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| self.vectors[(i, j)] * phases[j]);
        scaled * self.vectors.adjoint()
    }

    /// Smallest gap between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.values.as_slice().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn radius(&self) -> f64 {
        self.values.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }
}

/// A unitary `N×N` matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "ComplexRows")]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure_square(&m)?;
        check_finite(&m)?;
        let defect = unitarity_defect(&m);
        if defect > UNITARY_TOL {
            return Err(Error::InvalidArgument(format!("matrix is not unitary (defect {defect:.3e})")));
        }
        Ok(UnitaryMatrix(m))
    }

    pub fn identity(n: usize) -> Self {
        UnitaryMatrix(CMatrix::identity(n, n))
    }

    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        UnitaryMatrix(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn defect(&self) -> f64 {
        unitarity_defect(&self.0)
    }
}

/// A state `ρ ≥ 0` with `Tr ρ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "ComplexRows")]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let h = HermitianMatrix::new(m)?;
        let trace = h.trace();
        if (trace - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("density matrix has trace {trace}")));
        }
        let min = h.eigen().values[0];
        if min < -1e-12 {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
        }
        Ok(DensityMatrix(h.0))
    }

    /// `P_ψ` for a unit vector `ψ`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("state vector has norm {norm}")));
        }
        Ok(DensityMatrix(HermitianMatrix::projector(psi).0))
    }

    /// The maximally mixed state `E/N`.
    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix(CMatrix::identity(n, n) * c(1.0 / n as f64))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `Tr(ρA)`.
    pub fn expectation(&self, a: &HermitianMatrix) -> f64 {
        (&self.0 * a.matrix()).trace().re
    }
}

/// Row-major `[re, im]` pairs, used for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct ComplexRows(pub Vec<Vec<[f64; 2]>>);

impl From<&CMatrix> for ComplexRows {
    fn from(m: &CMatrix) -> Self {
        ComplexRows((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect())
    }
}

impl From<HermitianMatrix> for ComplexRows {
    fn from(m: HermitianMatrix) -> Self {
        (&m.0).into()
    }
}

impl From<UnitaryMatrix> for ComplexRows {
    fn from(m: UnitaryMatrix) -> Self {
        (&m.0).into()
    }
}

impl From<DensityMatrix> for ComplexRows {
    fn from(m: DensityMatrix) -> Self {
        (&m.0).into()
    }
}

fn complex_gaussian(rng: &mut Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `(G + G*)/2` for a matrix `G` of standard complex Gaussians.
pub fn random_hermitian(n: usize, rng: &mut Rng) -> HermitianMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    HermitianMatrix::hermitize(g)
}

/// A unit vector uniformly distributed on the complex sphere.
pub fn random_unit_vector(n: usize, rng: &mut Rng) -> CVector {
    let v = CVector::from_fn(n, |_, _| complex_gaussian(rng));
    let norm = v.norm();
    v / c(norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_bracket() {
        let b = bracket(&HermitianMatrix::sigma_x(), &HermitianMatrix::sigma_z()).unwrap();
        let expected = HermitianMatrix::sigma_y().0 * c(2.0);
        assert!((b.0 - expected).norm() < 1e-15);
        let zero = bracket(&HermitianMatrix::sigma_x(), &HermitianMatrix::sigma_x()).unwrap();
        assert_eq!(zero.norm(), 0.0);
        assert!(bracket(&HermitianMatrix::sigma_x(), &HermitianMatrix::identity(3)).is_err());
    }

    #[test]
    fn hermitian_validation() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0), I, I, c(0.0)]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
        assert!(HermitianMatrix::new(CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn propagator_is_unitary_and_matches_exponential() {
        let mut rng = crate::rng::stream_rng(1, 0);
        let h = random_hermitian(3, &mut rng);
        let u = h.eigen().propagator(0.9);
        assert!(unitarity_defect(&u) < 1e-13);
        let direct = (h.matrix() * Complex64::new(0.0, -0.9)).exp();
        assert!((u - direct).norm() < 1e-12);
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(CMatrix::identity(2, 2)).is_err());
        let bad = CMatrix::from_diagonal(&DVector::from_vec(vec![c(1.5), c(-0.5)]));
        assert!(matches!(DensityMatrix::new(bad), Err(Error::NotPositiveSemidefinite { .. })));
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!((mixed.expectation(&HermitianMatrix::identity(3)) - 1.0).abs() < 1e-15);
    }
}

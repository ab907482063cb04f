//! Schrödinger dynamics as a classical linear Hamiltonian system.
//!
//! Writing `f = q + ip` and `Ĥ = a + ib` (`a` real symmetric, `b` real
//! antisymmetric), `f(t) = e^{itĤ}f(0)` is equivalent to
//! `q' = −ap − bq`, `p' = aq − bp`, which are Hamilton's equations for
//! `H(q, p) = −½Σ a_kl (q_k q_l + p_k p_l) + Σ b_kl q_k p_l = −½(Ĥf, f)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::HermitianMatrix;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Classical quadratic Hamiltonian `H = ½ψᵀSψ` on `ψ = (q, p)` together with
/// its linear vector field `ψ' = Gψ`, `G = ΩS`, `Ω = [[0, E], [−E, 0]]`.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticHamiltonianGyro {
    /// `Re Ĥ`.
    pub a: DMatrix<f64>,
    /// `Im Ĥ`.
    pub b: DMatrix<f64>,
    /// `S = [[−a, b], [−b, −a]]`.
    pub hessian: DMatrix<f64>,
    /// `G = [[−b, −a], [a, −b]]`.
    pub vector_field: DMatrix<f64>,
}

pub fn unitary_to_symplectic(h: &HermitianMatrix) -> QuadraticHamiltonianGyro {
    let n = h.dim();
    let a = h.matrix().map(|z| z.re);
    let b = h.matrix().map(|z| z.im);
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(&(-&a));
    s.view_mut((0, n), (n, n)).copy_from(&b);
    s.view_mut((n, 0), (n, n)).copy_from(&(-&b));
    s.view_mut((n, n), (n, n)).copy_from(&(-&a));
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    g.view_mut((0, 0), (n, n)).copy_from(&(-&b));
    g.view_mut((0, n), (n, n)).copy_from(&(-&a));
    g.view_mut((n, 0), (n, n)).copy_from(&a);
    g.view_mut((n, n), (n, n)).copy_from(&(-&b));
    QuadraticHamiltonianGyro { a, b, hessian: s, vector_field: g }
}

impl QuadraticHamiltonianGyro {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `½ψᵀSψ` for `ψ = (q, p)` stacked.
    pub fn energy(&self, psi: &DVector<f64>) -> f64 {
        0.5 * psi.dot(&(&self.hessian * psi))
    }

    /// `(∂H/∂p, −∂H/∂q)` at `ψ`, evaluated from the Hessian.
    pub fn hamilton_rhs(&self, psi: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let grad = &self.hessian * psi;
        DVector::from_fn(2 * n, |i, _| if i < n { grad[n + i] } else { -grad[i - n] })
    }

    /// `e^{tG}ψ` by the dense matrix exponential.
    pub fn flow(&self, psi: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        if psi.len() != 2 * self.dim() {
            return Err(Error::DimensionMismatch { expected: 2 * self.dim(), found: psi.len() });
        }
        Ok((&self.vector_field * t).exp() * psi)
    }
}

/// `(Re f, Im f)` stacked.
pub fn complex_to_phase(f: &CVector) -> DVector<f64> {
    let n = f.len();
    DVector::from_fn(2 * n, |i, _| if i < n { f[i].re } else { f[i - n].im })
}

pub fn phase_to_complex(psi: &DVector<f64>) -> CVector {
    let n = psi.len() / 2;
    CVector::from_fn(n, |i, _| Complex64::new(psi[i], psi[n + i]))
}

/// `e^{itĤ}f` through the spectral decomposition of `Ĥ`.
pub fn schrodinger_forward(h: &HermitianMatrix, f: &CVector, t: f64) -> CVector {
    let u: CMatrix = h.eigen().propagator(-t);
    u * f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{random_hermitian, random_unit_vector};
    use crate::rng::stream_rng;

    #[test]
    fn sigma_x_gives_minus_q1q2_minus_p1p2() {
        let g = unitary_to_symplectic(&HermitianMatrix::sigma_x());
        let psi = DVector::from_vec(vec![0.7, -1.3, 0.4, 2.1]);
        let expected = -0.7 * -1.3 - 0.4 * 2.1;
        assert!((g.energy(&psi) - expected).abs() < 1e-15);
    }

    #[test]
    fn identity_gives_phase_rotation() {
        let g = unitary_to_symplectic(&HermitianMatrix::identity(2));
        let psi = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        assert!((g.energy(&psi) + 0.5 * psi.norm_squared()).abs() < 1e-14);
        let t = 0.4;
        let f = phase_to_complex(&psi) * Complex64::from_polar(1.0, t);
        assert!((g.flow(&psi, t).unwrap() - complex_to_phase(&f)).norm() < 1e-14);
    }

    #[test]
    fn vector_field_is_hamiltonian() {
        let mut rng = stream_rng(4, 0);
        let h = random_hermitian(3, &mut rng);
        let g = unitary_to_symplectic(&h);
        let psi = complex_to_phase(&random_unit_vector(3, &mut rng));
        assert!((&g.vector_field * &psi - g.hamilton_rhs(&psi)).norm() < 1e-13);
        let f = phase_to_complex(&psi);
        let quantum = -0.5 * (f.adjoint() * h.matrix() * &f)[(0, 0)].re;
        assert!((g.energy(&psi) - quantum).abs() < 1e-13);
    }

    #[test]
    fn classical_flow_matches_schrodinger() {
        let mut rng = stream_rng(9, 0);
        for n in 1..=4 {
            let h = random_hermitian(n, &mut rng);
            let f = random_unit_vector(n, &mut rng);
            let classical = unitary_to_symplectic(&h).flow(&complex_to_phase(&f), 1.3).unwrap();
            let quantum = complex_to_phase(&schrodinger_forward(&h, &f, 1.3));
            assert!((classical - quantum).norm() < 1e-9);
        }
    }
}

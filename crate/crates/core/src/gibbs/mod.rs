//! Linear chains damped and randomly forced through their first coordinate:
//! `q' = p`, `p' = −Vq − αDp + e₁f_t`, `D = e₁e₁ᵀ`.

mod graph;
mod kernel;
mod propagator;
mod scan;
mod sde;

pub use graph::*;
pub use kernel::*;
pub use propagator::*;
pub use scan::*;
pub use sde::*;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::phase::{mixing_subspace, QuadraticHamiltonian};

/// Relative residual accepted for the algebraic stationarity equation.
pub const STATIONARITY_TOL: f64 = 1e-9;

/// A `2N×2N` covariance in `(q, p)` block form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryCovariance {
    pub matrix: DMatrix<f64>,
}

impl StationaryCovariance {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        StationaryCovariance { matrix }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(DMatrix::zeros(2 * n, 2 * n))
    }

    /// Number of particles `N`.
    pub fn dim(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn qq(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn pp(&self, i: usize, j: usize) -> f64 {
        let n = self.dim();
        self.matrix[(n + i, n + j)]
    }

    pub fn qp(&self, i: usize, j: usize) -> f64 {
        let n = self.dim();
        self.matrix[(i, n + j)]
    }

    pub fn qq_block(&self) -> DMatrix<f64> {
        let n = self.dim();
        self.matrix.view((0, 0), (n, n)).clone_owned()
    }

    pub fn pp_block(&self) -> DMatrix<f64> {
        let n = self.dim();
        self.matrix.view((n, n), (n, n)).clone_owned()
    }

    pub fn qp_block(&self) -> DMatrix<f64> {
        let n = self.dim();
        self.matrix.view((0, n), (n, n)).clone_owned()
    }

    /// `max |C_qp| / max diag C`.
    pub fn relative_cross_block(&self) -> f64 {
        let diag = self.matrix.diagonal().amax();
        if diag == 0.0 {
            return 0.0;
        }
        self.qp_block().amax().max(self.matrix.view((self.dim(), 0), (self.dim(), self.dim())).amax()) / diag
    }

    /// Smallest eigenvalue divided by the largest (in absolute value).
    pub fn min_eigen_ratio(&self) -> f64 {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        let ev = sym.symmetric_eigenvalues();
        let max = ev.amax();
        if max == 0.0 {
            0.0
        } else {
            ev.min() / max
        }
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigen_ratio() >= -tol
    }
}

/// `(1/β)·diag(V⁻¹, E)`.
pub fn gibbs_covariance(h: &QuadraticHamiltonian, beta: f64) -> Result<StationaryCovariance> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("inverse temperature must be positive, got {beta}")));
    }
    let n = h.dim();
    let mut c = DMatrix::zeros(2 * n, 2 * n);
    c.view_mut((0, 0), (n, n)).copy_from(&(h.inverse() / beta));
    for i in 0..n {
        c[(n + i, n + i)] = 1.0 / beta;
    }
    Ok(StationaryCovariance::new(c))
}

/// The damped, forced system together with its drift matrix
/// `A = [[0, E], [−V, −αD]]`.
#[derive(Debug, Clone)]
pub struct DrivenSystem {
    pub hamiltonian: QuadraticHamiltonian,
    pub alpha: f64,
    pub kernel: Kernel,
    pub drift: DMatrix<f64>,
    /// `dim L₀ = 2(N − dim l_V)`: directions neither damped nor forced.
    pub l0_dim: usize,
    /// Largest real part of the eigenvalues of `A`.
    pub spectral_abscissa: f64,
}

pub fn build_driven(h: &QuadraticHamiltonian, alpha: f64, kernel: Kernel) -> Result<DrivenSystem> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("damping must be non-negative, got {alpha}")));
    }
    kernel.validate()?;
    let n = h.dim();
    let mut drift = h.generator();
    drift[(n, n)] = -alpha;
    let l0_dim = 2 * (n - mixing_subspace(h).dim);
    let spectral_abscissa = drift.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(DrivenSystem { hamiltonian: h.clone(), alpha, kernel, drift, l0_dim, spectral_abscissa })
}

impl DrivenSystem {
    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// `α > 0` and `L₀ = {0}`: then every eigenvalue of `A` has negative real part.
    pub fn is_stable(&self) -> bool {
        self.alpha > 0.0 && self.l0_dim == 0
    }

    pub fn require_stable(&self) -> Result<()> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::Unstable { alpha: self.alpha, l0_dim: self.l0_dim })
        }
    }

    /// Index of `p₁` in the stacked state.
    pub fn forced_index(&self) -> usize {
        self.dim()
    }

    /// `‖AC + CAᵀ + B‖_F / ‖B‖_F` with `B = σ²e_{p₁}e_{p₁}ᵀ`.
    pub fn stationarity_residual(&self, c: &StationaryCovariance, sigma2: f64) -> f64 {
        let mut r = &self.drift * &c.matrix + &c.matrix * self.drift.transpose();
        let k = self.forced_index();
        r[(k, k)] += sigma2;
        if sigma2 == 0.0 {
            r.norm()
        } else {
            r.norm() / sigma2
        }
    }
}

/// Exact stationary covariance under white forcing: the Gibbs matrix at
/// `β⁻¹ = σ²/(2α)`, checked against `AC + CAᵀ + B = 0`.
pub fn stationary_white(system: &DrivenSystem) -> Result<StationaryCovariance> {
    let Kernel::White { sigma2 } = system.kernel else {
        return Err(Error::UnsupportedKernel { expected: "white-noise" });
    };
    system.require_stable()?;
    let c = if sigma2 == 0.0 {
        StationaryCovariance::zeros(system.dim())
    } else {
        gibbs_covariance(&system.hamiltonian, 2.0 * system.alpha / sigma2)?
    };
    let residual = system.stationarity_residual(&c, sigma2);
    if residual > STATIONARITY_TOL {
        return Err(Error::StationarityCheckFailed { residual, tolerance: STATIONARITY_TOL });
    }
    Ok(c)
}

/// `(π/α)·diag(a(√V)V⁻¹, a(√V))`, the memory-free approximation of the
/// stationary covariance.
pub fn c_v_matrix(h: &QuadraticHamiltonian, alpha: f64, kernel: &Kernel) -> Result<StationaryCovariance> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("damping must be positive, got {alpha}")));
    }
    let n = h.dim();
    let scale = std::f64::consts::PI / alpha;
    let a_q = h.spectral_function(|w| kernel.spectral_density(w) / (w * w));
    let a_p = h.spectral_function(|w| kernel.spectral_density(w));
    let mut c = DMatrix::zeros(2 * n, 2 * n);
    c.view_mut((0, 0), (n, n)).copy_from(&(a_q * scale));
    c.view_mut((n, n), (n, n)).copy_from(&(a_p * scale));
    Ok(StationaryCovariance::new(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn chain2() -> QuadraticHamiltonian {
        QuadraticHamiltonian::new(&DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])).unwrap()
    }

    #[test]
    fn gibbs_examples() {
        let id = QuadraticHamiltonian::new(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(gibbs_covariance(&id, 1.0).unwrap().matrix, DMatrix::identity(4, 4));
        let c = gibbs_covariance(&chain2(), 2.0).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) / 6.0;
        assert!((c.qq_block() - want).amax() < 1e-15);
        assert!((c.pp_block() - DMatrix::identity(2, 2) * 0.5).amax() < 1e-15);
        assert_eq!(c.qp_block().amax(), 0.0);
        assert!(gibbs_covariance(&chain2(), 0.0).is_err());
    }

    #[test]
    fn drift_assembly() {
        let h = QuadraticHamiltonian::new(&DMatrix::from_element(1, 1, 4.0)).unwrap();
        let s = build_driven(&h, 0.3, Kernel::White { sigma2: 1.0 }).unwrap();
        assert_eq!(s.drift, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.3]));
        assert!(s.is_stable() && s.spectral_abscissa < 0.0);
        let s = build_driven(&chain2(), 0.5, Kernel::White { sigma2: 1.0 }).unwrap();
        assert!(s.spectral_abscissa < 0.0);
        let d = QuadraticHamiltonian::new(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))).unwrap();
        let s = build_driven(&d, 0.5, Kernel::White { sigma2: 1.0 }).unwrap();
        assert_eq!(s.l0_dim, 2);
        assert!(s.spectral_abscissa.abs() < 1e-12);
        assert!(matches!(stationary_white(&s), Err(Error::Unstable { .. })));
    }

    #[test]
    fn white_noise_one_particle() {
        let (w2, alpha, sigma2) = (2.5, 0.7, 1.3);
        let h = QuadraticHamiltonian::new(&DMatrix::from_element(1, 1, w2)).unwrap();
        let c = stationary_white(&build_driven(&h, alpha, Kernel::White { sigma2 }).unwrap()).unwrap();
        let t = sigma2 / (2.0 * alpha);
        assert!((c.qq(0, 0) - t / w2).abs() < 1e-15);
        assert!((c.pp(0, 0) - t).abs() < 1e-15);
        let zero = stationary_white(&build_driven(&h, alpha, Kernel::White { sigma2: 0.0 }).unwrap()).unwrap();
        assert_eq!(zero.matrix.amax(), 0.0);
    }

    #[test]
    fn c_v_examples() {
        let h = chain2();
        let (alpha, sigma2) = (0.8, 1.7);
        let white = c_v_matrix(&h, alpha, &Kernel::White { sigma2 }).unwrap();
        let gibbs = gibbs_covariance(&h, 2.0 * alpha / sigma2).unwrap();
        assert!((white.matrix - gibbs.matrix).amax() < 1e-14);
        let d = QuadraticHamiltonian::new(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))).unwrap();
        let k = Kernel::default_gaussian();
        let c = c_v_matrix(&d, 1.0, &k).unwrap();
        let pi = std::f64::consts::PI;
        assert!((c.qq(1, 1) - pi * k.spectral_density(2.0) / 4.0).abs() < 1e-15);
        assert!((c.pp(0, 0) - pi * k.spectral_density(1.0)).abs() < 1e-15);
        assert_eq!(c.pp(0, 1), 0.0);
        assert_eq!(c_v_matrix(&h, 1.0, &Kernel::zero()).unwrap().matrix.amax(), 0.0);
    }
}

//! Dense linear-algebra helpers shared by the dynamics modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A singular value (or overlap, or eigenvalue gap) counts as zero when it is
/// at most this fraction of the relevant scale.
pub const RANK_TOL: f64 = 1e-10;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn ensure_square<T: nalgebra::Scalar>(m: &DMatrix<T>) -> Result<usize> {
    if m.nrows() == 0 {
        return Err(Error::Empty);
    }
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

/// `‖M − Mᵀ‖_F / ‖M‖_F` (zero for the zero matrix).
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

/// `‖M − M*‖_F / ‖M‖_F` (zero for the zero matrix).
pub fn relative_antihermiticity(m: &CMatrix) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

/// Number of singular values above `RANK_TOL` times the largest one.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Eigen-decomposition of a real symmetric matrix with eigenvalues ascending.
///
/// Each eigenvector is signed so that its first entry that is not negligible
/// is positive, which makes the output reproducible across platforms.
pub fn symmetric_eigen_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        if let Some(lead) = col.iter().find(|x| x.abs() > 1e-12) {
            if *lead < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Eigenvector phases are fixed so that the first non-negligible entry of each
/// column is real and positive.
pub fn hermitian_eigen_sorted(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        if let Some(lead) = col.iter().find(|x| x.norm() > 1e-12) {
            let phase = lead.conj() / lead.norm();
            col *= phase;
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Unitary factor of the polar decomposition `X = U P`.
pub fn polar_unitary(x: &CMatrix) -> CMatrix {
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    u * v_t
}

/// `‖X*X − E‖_F`.
pub fn unitarity_defect(x: &CMatrix) -> f64 {
    let n = x.nrows();
    (x.adjoint() * x - CMatrix::identity(n, n)).norm()
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// A Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        UnitRule {
            nodes: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|t| 0.5 * t).collect(),
        }
    }
}

/// `(1/τ)`-free segment integral `∫₀^τ e^{−iωt} dt`, stable for small `ωτ`.
pub fn oscillatory_integral(omega: f64, tau: f64) -> Complex64 {
    let half = 0.5 * omega * tau;
    let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
    Complex64::from_polar(tau * sinc, -half)
}

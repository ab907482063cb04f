#![allow(dead_code)]

use ergodyn_core::phase::QuadraticHamiltonian;
use ergodyn_core::rng::{stream_rng, Rng};
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

/// `GGᵀ/N + shift·E` with standard normal `G`.
pub fn random_spd(n: usize, shift: f64, rng: &mut Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &g * g.transpose() / n as f64 + DMatrix::identity(n, n) * shift
}

pub fn random_hamiltonian(n: usize, seed: u64) -> QuadraticHamiltonian {
    QuadraticHamiltonian::new(&random_spd(n, 0.5, &mut stream_rng(seed, 0))).unwrap()
}

pub fn random_vector(n: usize, rng: &mut Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn chain2() -> QuadraticHamiltonian {
    QuadraticHamiltonian::new(&DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])).unwrap()
}

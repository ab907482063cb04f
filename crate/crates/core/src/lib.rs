//! Numerical toolkit for convergence to equilibrium under minimal randomness.
//!
//! * [`phase`]: quadratic Hamiltonians, exact flows, mixing diagnostics and
//!   microcanonical sampling.
//! * [`flip`]: the velocity-flip process and its time averages.
//! * [`quantum`]: dynamical Lie algebras, random switching between two
//!   Hamiltonians, Haar and Cesàro diagnostics.
//! * [`gibbs`]: linear chains damped and forced through one coordinate, with
//!   exact stationary covariances and stochastic cross-checks.

pub mod clock;
pub mod error;
pub mod flip;
pub mod gibbs;
pub mod linalg;
pub mod matrix_io;
pub mod observable;
pub mod phase;
pub mod quantum;
pub mod rng;

pub use error::{Error, Result};

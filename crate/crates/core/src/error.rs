use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is empty")]
    Empty,

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("energy must be positive, got {0}")]
    NonPositiveEnergy(f64),

    #[error("coupling of the flipped coordinate to mode {mode} vanishes; covering bound undefined")]
    NotMixing { mode: usize },

    #[error("relation search space {size:.3e} exceeds budget {budget:.3e}")]
    SearchSpaceTooLarge { size: f64, budget: f64 },

    #[error("need at least {required} samples, got {found}")]
    TooFewSamples { required: usize, found: usize },

    #[error("spectrum is degenerate (smallest gap {gap:.3e})")]
    DegenerateSpectrum { gap: f64 },

    #[error("driven system is not asymptotically stable (alpha = {alpha}, dim L0 = {l0_dim})")]
    Unstable { alpha: f64, l0_dim: usize },

    #[error("kernel tail does not become negligible before horizon {horizon}")]
    KernelNotIntegrable { horizon: f64 },

    #[error("operation requires a {expected} kernel")]
    UnsupportedKernel { expected: &'static str },

    #[error("graph is not connected")]
    Disconnected,

    #[error("vertex {vertex} outside graph with {size} vertices")]
    VertexOutOfRange { vertex: usize, size: usize },

    #[error("stationarity residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    StationarityCheckFailed { residual: f64, tolerance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

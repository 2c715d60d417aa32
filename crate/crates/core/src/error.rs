use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("sector mismatch: {0}")]
    Sector(String),

    #[error("krylov step {step} did not converge (residual {residual:.3e} after {dim} vectors)")]
    KrylovNoConvergence { step: usize, residual: f64, dim: usize },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("two-qubit gate acts twice on qubit {0}")]
    RepeatedQubit(usize),

    #[error("post-selection discarded all {discarded} shots")]
    FullyFiltered { discarded: u64 },

    #[error("counts are empty")]
    EmptyCounts,

    #[error("duplicate noise scale {0} in extrapolation input")]
    DuplicateScale(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the linear-algebra, identity and decomposition layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("post-selected state is orthogonal to the pre-selected state (|overlap| = {overlap:e})")]
    OrthogonalPostSelection { overlap: f64 },

    #[error("condition <K>^phi = q violated: <K>^phi = {actual}, q = {q}")]
    ConditionViolated { actual: Complex64, q: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("basis does not resolve the identity: {0}")]
    BasisNotComplete(String),

    #[error("qubit index {index} out of range for {n_qubits} qubit(s)")]
    IndexOutOfRange { index: usize, n_qubits: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

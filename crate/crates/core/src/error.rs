use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("classical bit c{index} out of range ({num_bits} bits declared)")]
    BitOutOfRange { index: usize, num_bits: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown gadget `{0}`")]
    UnknownGadget(String),

    #[error("circuit contains non-Clifford instruction `{0}`; run gadget expansion first")]
    NotExpanded(String),

    #[error("invalid gadget definition: {0}")]
    InvalidGadget(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid state vector: {0}")]
    InvalidState(String),

    #[error("system too large: {0}")]
    TooLarge(String),

    #[error("branch enumeration overflow: {0} measurements exceeds cap of {1}")]
    BranchOverflow(usize, usize),

    #[error("non-physical mixture: {0}")]
    NonPhysical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::series::WaveVector;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("obstruction detected at mode {mode}: residue {residue:.3e} in degree {degree}")]
    ObstructionDetected {
        mode: WaveVector,
        degree: usize,
        residue: f64,
    },

    #[error("normal form violates B(N0) structure at degree {degree}: residual {residual:.3e}")]
    A3Violation { degree: usize, residual: f64 },

    #[error("degree budget exceeded: need cap >= {needed}, have {cap}")]
    DegreeBudgetExceeded { needed: usize, cap: usize },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("zero linear form")]
    ZeroLinearForm,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

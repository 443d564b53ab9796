use thiserror::Error;

#[derive(Debug, Error)]
pub enum BrstError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("matrix is not Hermitian (|A - A*| = {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("size out of range: {0}")]
    Size(String),

    #[error("index {index} out of range 0..{len}")]
    Index { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("charge fails to close: |Q^2| = {residual:.3e}")]
    Closure { residual: f64 },

    #[error("operator is not nilpotent: |Q^2| = {residual:.3e}")]
    Nilpotency { residual: f64 },

    #[error("rank decision ambiguous at cutoff {cutoff:.3e}: singular values {values:?}")]
    RankAmbiguity { cutoff: f64, values: Vec<f64> },

    #[error("grading incompatible with charge: {0}")]
    Grading(String),

    #[error("structure theorem violated ({what}): residual {residual:.3e}")]
    StructureTheorem { what: String, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid constraint system: {0}")]
    InvalidSystem(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, BrstError>;

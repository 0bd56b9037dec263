use crate::dyadic::SparseViolation;

/// Errors reported by the toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
    #[error("weight must be positive and finite, found {value} at cell {cell}")]
    Weight { cell: usize, value: f64 },
    #[error("arguments live on different domains")]
    DomainMismatch,
    #[error("expected {expected} values, found {found}")]
    Length { expected: usize, found: usize },
    #[error("cube with extent {extent} cells cannot be subdivided")]
    Subdivision { extent: i64 },
    #[error("cube does not lie inside the domain")]
    OutsideDomain,
    #[error("kernel is singular at the evaluation point")]
    Singular,
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("sparse family rejected: {0}")]
    NotSparse(SparseViolation),
}

pub type Result<T> = core::result::Result<T, Error>;

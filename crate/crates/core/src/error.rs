use thiserror::Error;

/// Errors raised by the matrix kernels, the projection kernel and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("rank deficient at column {column}{}", block.map(|b| format!(" of block {b}")).unwrap_or_default())]
    RankDeficient { column: usize, block: Option<usize> },

    #[error("singular triangular factor: diagonal entry {0} is zero")]
    SingularTriangular(usize),

    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("directions are parallel (|alpha| >= 1)")]
    DegenerateDirections,

    #[error("degenerate denominator b1 - alpha*b2 = 0")]
    DegenerateDenominator,

    #[error("right-hand side is zero; the solution is x = 0")]
    TrivialSolution,

    #[error("A^T b vanishes for a nonzero b; the system is singular")]
    SingularSystem,

    #[error("degenerate step: p lies in the row space of the block")]
    DegenerateStep,

    #[error("modified Gram matrix is numerically singular (condition estimate {condition:.3e})")]
    SingularModifiedGram { condition: f64 },

    #[error("every snapshot column was numerically dependent; nothing to project onto")]
    DegenerateSnapshots,

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

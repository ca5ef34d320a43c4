use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite: pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("non-positive diagonal entry {value:e} at row {row}")]
    NonPositiveDiagonal { row: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("aggregation stagnated at level {level}: {size} unknowns could not be coarsened")]
    Stagnation { level: usize, size: usize },

    #[error("non-positive curvature {0:e} along search direction")]
    NonPositiveCurvature(f64),

    #[error("iteration diverged: {0}")]
    Diverged(String),

    #[error("polynomial is undefined: {0}")]
    UndefinedPolynomial(&'static str),

    #[error("no admissible contraction factor for k = {0}")]
    NoAdmissibleDelta(usize),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("level {0} exceeds the supported maximum of {max}", max = crate::geometry::MAX_LEVEL)]
    LevelTooLarge(usize),

    #[error("level mismatch: expected {expected}, found {found}")]
    LevelMismatch { expected: usize, found: usize },

    #[error("point is not on the diagonal (deviation {deviation:.3e})")]
    NotOnDiagonal { deviation: f64 },

    #[error("grid with {intervals} intervals does not align with breakpoint {breakpoint}")]
    GridMisaligned { intervals: usize, breakpoint: f64 },

    #[error("boundary condition violated at t = {time}: mismatch {mismatch:.3e}")]
    BoundaryMismatch { time: f64, mismatch: f64 },

    #[error("loop is not contractible (winding {winding:?})")]
    NonContractible { winding: Vec<i64> },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian (condition estimate {condition:.3e})")]
    SingularJacobian { condition: f64 },

    #[error("non-finite value encountered: {0}")]
    Overflow(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate at position {0}")]
    NonFinite(usize),

    #[error("vector must have at least one coordinate")]
    EmptyVector,

    #[error("direction is not a unit vector (norm {0})")]
    NotUnit(f64),

    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("index vector must satisfy ‖u‖<1 (got ‖u‖ = {0})")]
    IndexOutOfBall(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("moment condition violated: {condition} is required ({detail})")]
    MomentCondition {
        condition: &'static str,
        detail: String,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("oracle minimizer escaped the search box after {0} expansions")]
    OracleEscaped(usize),

    #[error("insufficient positive curve points: need {needed}, found {found}")]
    InsufficientCurve { needed: usize, found: usize },

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

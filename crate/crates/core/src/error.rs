use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("degenerate frequency: {0}")]
    DegenerateFrequency(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("epsilon {epsilon} too large, must be below {limit}")]
    EpsilonTooLarge { epsilon: f64, limit: f64 },

    #[error("inconsistent configuration: {0}")]
    Inconsistent(String),

    #[error("eigensolver did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("lemma falsified: {0}")]
    LemmaFalsified(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, LabError>;

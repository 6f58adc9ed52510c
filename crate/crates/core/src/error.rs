use thiserror::Error;

use crate::dsl::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error {0}")]
    Parse(#[from] ParseError),

    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),

    #[error("quadrature did not converge: achieved error {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("I + D1Y is singular at jump time {time} (mark {mark})")]
    SingularJumpFactor { time: f64, mark: f64 },

    #[error("expected {expected:.3e} jump events, above the limit of {limit}")]
    EventOverflow { expected: f64, limit: usize },

    #[error("sample variance is zero in dimension {0}")]
    DegenerateVariance(usize),

    #[error("integrand exceeds the declared jump bound: |f| = {found} >= A = {bound}")]
    BoundViolated { found: f64, bound: f64 },

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the beamforming library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("channel set lacks {0}")]
    MissingChannels(&'static str),

    #[error("beamformer of user {user} has zero norm")]
    ZeroBeamformer { user: usize },

    #[error("rate argument must be positive, got {0}")]
    NonpositiveRate(f64),

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("degenerate expansion point: {0}")]
    DegenerateExpansion(String),

    #[error(
        "robust-constraint guard fails for user {user}: log coefficient {log_coef}, scale coefficient {scale_coef}"
    )]
    GuardViolation {
        user: usize,
        log_coef: f64,
        scale_coef: f64,
    },

    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("bracket expansion from {x0} gave up after {steps} steps")]
    NoBracket { x0: f64, steps: u64 },

    #[error("bisection stalled at {x} without meeting the tolerance")]
    BisectionStalled { x: f64 },

    #[error("warm start violates constraint {index} by {violation:e}")]
    InfeasibleStart { index: usize, violation: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

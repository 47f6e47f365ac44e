use thiserror::Error;

/// Errors produced by the simulator core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode count {n} is out of range (need {min} <= n <= {max})")]
    ModeCount { n: usize, min: usize, max: usize },

    #[error("dimension mismatch: expected {expected} modes, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("channel is not trace preserving (max deviation {deviation})")]
    NotTracePreserving { deviation: f64 },

    #[error("invalid bit string: {0}")]
    BitString(&'static str),

    #[error("invalid scheme parameters: {0}")]
    Params(&'static str),

    #[error("note exhausted: {available} unused copies, {required} required")]
    InsufficientCopies { available: usize, required: usize },

    #[error("protocol violation: {0}")]
    ProtocolViolation(&'static str),

    #[error("duplicate serial number")]
    DuplicateSerial,

    #[error("invalid attack strategy: {0}")]
    Strategy(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

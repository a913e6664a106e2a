use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate curve: all values are zero")]
    DegenerateCurve,
    #[error("visibility target {target} unreachable (ideal scan gives {ideal})")]
    Unreachable { target: f64, ideal: f64 },
    #[error("scan minimum sits at the edge of the range (index {0})")]
    BoundaryMinimum(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for configuration / input-parsing failures (as opposed to physics domain errors).
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

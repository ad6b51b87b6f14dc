use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {field}: {reason}")]
    InvalidGrid { field: &'static str, reason: String },

    #[error("grid of {points} points exceeds the size guard of {limit}")]
    SizeGuard { points: usize, limit: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("symbol `{id}` is not finite at a nonzero lattice point")]
    SymbolNotFinite { id: String },

    #[error("symbol `{id}` failed its {property} check (deviation {deviation:e})")]
    SymbolProperty {
        id: String,
        property: &'static str,
        deviation: f64,
    },

    #[error("input has nonzero mean ({mean:e}) but the zero mode is singular")]
    NonZeroMean { mean: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("aliasing guard violated: {fraction:e} of spectral energy lies above N/4")]
    Aliasing { fraction: f64 },

    #[error("support violation: {0}")]
    Support(String),

    #[error("{solver} did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("hypothesis fails at N = {witness}")]
    Hypothesis { witness: i64 },

    #[error("constraint violated: {0}")]
    Constraint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

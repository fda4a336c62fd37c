use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("heat propagator coefficient must be >= 0, got {0}")]
    NegativeCoefficient(f64),

    #[error("mode multiplier is not symmetric under k -> -k at flat index {index}")]
    AsymmetricMultiplier { index: usize },

    #[error("mode table has length {got}, grid expects {expected}")]
    ModeTableLength { got: usize, expected: usize },

    #[error("inverse transform left an imaginary residue of {residue:e} (relative)")]
    ImaginaryResidue { residue: f64 },

    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("temperatures must satisfy 0 < theta < theta_c (theta = {theta}, theta_c = {theta_c})")]
    InvalidTemperatures { theta: f64, theta_c: f64 },

    #[error("invalid scheme parameters: {0}")]
    InvalidScheme(String),

    #[error("|v| = {value} exceeds u_* = {bound}")]
    MaxNormExceeded { value: f64, bound: f64 },

    #[error("Newton stage solve failed for v = {v} after {iterations} iterations (residual {residual:e})")]
    NewtonFailure {
        v: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invariant violated at step {step}: {detail}")]
    Invariant { step: usize, detail: String },

    #[error("ODE oracle left the domain (-1, 1) at t = {t}")]
    OracleDomain { t: f64 },

    #[error("invalid study: {0}")]
    Study(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ (Error::Step { .. } | Error::Invariant { .. }) => e,
            e => Error::Step {
                step,
                source: Box::new(e),
            },
        }
    }

    /// Strips step context to get at the underlying failure.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            e => e,
        }
    }
}

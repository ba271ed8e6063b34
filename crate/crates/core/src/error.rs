use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("position ({x:.3e}, {y:.3e}, {z:.3e}) m is outside the sampling domain")]
    OutOfDomain { x: f64, y: f64, z: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("step {step}: position constraint unsatisfiable (gradient residual {residual:.3e} V/m)")]
    PositionUnsatisfiable { step: usize, residual: f64 },

    #[error("filter discretization is unstable (pole radius {radius:.6})")]
    UnstableFilter { radius: f64 },

    #[error("time step {dt:.3e} s does not resolve the fastest motion (limit {limit:.3e} s)")]
    TimeStep { dt: f64, limit: f64 },

    #[error("ion {ion} left the trap domain at t = {time:.3e} s")]
    IonLost { ion: usize, time: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum NsmError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite: smallest pivot {pivot:e} at column {column}")]
    NotPositiveDefinite { pivot: f64, column: usize },

    #[error("{method} did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("residual check failed: {residual:e} > {bound:e}")]
    ResidualCheck { residual: f64, bound: f64 },

    #[error("adversary {adversary} requires {missing}")]
    MissingContext {
        adversary: &'static str,
        missing: &'static str,
    },

    #[error("corruption probability {q} is not below the threshold {threshold}")]
    AboveThreshold { q: f64, threshold: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, NsmError>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(NsmError::DimensionMismatch { expected, actual })
    }
}

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input domain error: {0}")]
    InputDomain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        /// Residual norms of the iterates, oldest first.
        history: Vec<f64>,
    },

    #[error("conjugation refinement failed, last bracket [{lo:.6e}, {hi:.6e}]")]
    Conjugation { lo: f64, hi: f64 },

    #[error("bracket search failed: {0}")]
    Bracket(String),

    #[error("luxemburg bracket expansion exceeded cap at lambda = {0:.3e}")]
    Overflow(f64),

    #[error("mesh refinement error: {0}")]
    Refinement(String),

    #[error("query {0:?} lies outside the tabulated hull")]
    Extrapolation(Vec<f64>),

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("linear solver failure: {0}")]
    LinearSolve(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by model construction, solvers and the experiment harness.
///
/// Infeasibility is never reported through this type: solvers return
/// infinite-energy sentinels instead, so that search procedures can rank
/// infeasible candidates last without special-casing.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrices or vectors whose dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A scalar parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Inputs for which the requested quantity is undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Malformed or inconsistent configuration (files, scenarios, CLI input).
    #[error("configuration error: {0}")]
    Config(String),
    /// Exhaustive search refused because the candidate count exceeds the cap.
    #[error("enumeration needs {required} allocations but the cap is {cap}")]
    EnumerationCap {
        /// Number of allocations the enumeration would have to price.
        required: u128,
        /// Configured upper limit.
        cap: u128,
    },
    /// A NaN appeared inside an iterative solver.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// File-system failure while reading inputs or writing reports.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    /// CSV serialization failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by decomposition, estimation, and data handling.
#[derive(Debug, Error)]
pub enum PirdError {
    /// Requested source count is outside the supported range.
    #[error("source count {n} outside supported range 1..={max}")]
    SourceCount { n: usize, max: usize },

    /// A per-atom value vector does not cover the whole lattice.
    #[error("expected one value per atom ({expected}), got {got}")]
    IncompleteAtomValues { expected: usize, got: usize },

    /// Invalid argument; `reason` names the violated constraint.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Model fails the stationarity guard.
    #[error("unstable model: companion spectral radius {radius} >= 1")]
    UnstableModel { radius: f64 },

    /// Least-squares regressor matrix is numerically rank deficient.
    #[error("rank-deficient regressors involving channel(s) {channels:?}")]
    RankDeficient { channels: Vec<String> },

    /// Too few samples for the requested fit.
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    /// The VAR characteristic matrix is near-singular at a grid frequency.
    #[error("near-nonstationary model: characteristic matrix singular at omega = {omega}")]
    NearNonstationary { omega: f64 },

    /// A spectral or covariance submatrix lost positive definiteness.
    #[error("degenerate spectrum: {detail}")]
    DegenerateSpectrum { detail: String },

    /// Frequency band outside [0, pi].
    #[error("band [{lo}, {hi}] outside [0, pi]")]
    BandOutOfRange { lo: f64, hi: f64 },

    /// Decomposition consistency residual exceeded its bound.
    #[error("internal consistency residual {residual:.3e} exceeds {bound:.1e}")]
    InternalConsistency { residual: f64, bound: f64 },

    /// Input file parse failure.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A selected column is not present in the input.
    #[error("column {name:?} not found in input")]
    MissingColumn { name: String },

    /// Input has a header but no data rows.
    #[error("input contains no data rows")]
    EmptyData,

    /// Non-finite or sentinel-missing value in the input.
    #[error("missing or non-finite value at line {line}, column {column:?}")]
    NonFinite { line: usize, column: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, PirdError>;

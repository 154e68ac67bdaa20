//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by model construction, integration and fitting.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at offset {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The model violates an invariant (independence, bracket generation,
    /// contact condition, normalization).
    #[error("model rejected: {0}")]
    ModelRejected(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("unknown built-in model `{0}`")]
    UnknownModel(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("matrix singular at t = {t}: {what}")]
    Singular { t: f64, what: String },

    #[error("numerical rank indeterminate: singular values {sigma_kept:e} and {sigma_dropped:e} straddle the tolerance band")]
    RankIndeterminate { sigma_kept: f64, sigma_dropped: f64 },

    #[error("geodesic is not ample: growth vector {0:?} does not reach the state dimension")]
    NotAmple(Vec<usize>),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("point excluded from the sampling region: {0}")]
    Excluded(String),

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

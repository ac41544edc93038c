//! Crate-wide error type.

use std::path::PathBuf;

use crate::mrio::IdentityFailure;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: String,
        expected: String,
        found: String,
    },

    #[error("invalid value at {location}: {message}")]
    InvalidValue { location: String, message: String },

    #[error(
        "accounting identities violated: {} residual(s) beyond tolerance {tolerance:e}, first at {}",
        failures.len(),
        failures.first().map(|f| f.to_string()).unwrap_or_default()
    )]
    IdentityViolation {
        tolerance: f64,
        failures: Vec<IdentityFailure>,
    },

    #[error("economy is not productive: spectral radius estimate {spectral_radius} >= 1")]
    NonProductive { spectral_radius: f64 },

    #[error("singular or near-singular system: condition estimate {condition:.3e}, residual {residual:.3e}")]
    Singular { condition: f64, residual: f64 },

    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// Last iterate, for inspection.
        last: Vec<f64>,
    },

    #[error("unknown sector '{0}'")]
    UnknownSector(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("common sample too small: {n} sector(s) with positive finite values on all measures (need at least 3)")]
    CommonSampleTooSmall { n: usize },

    #[error("sector alignment mismatch: {0}")]
    Alignment(String),

    #[error("missing manifest: {}", path.display())]
    MissingManifest { path: PathBuf },

    #[error("malformed manifest: {0}")]
    Manifest(String),

    #[error("checksum mismatch for {file}: manifest says {expected}, file hashes to {actual}")]
    Checksum {
        file: String,
        expected: String,
        actual: String,
    },

    #[error("malformed bundle file {file}: {message}")]
    MalformedFile { file: String, message: String },

    #[error(
        "table synthesis exhausted its rejection budget after {attempts} attempts (seed {seed})"
    )]
    RejectionBudget { attempts: usize, seed: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input, used by
    /// callers that map errors to exit codes.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonProductive { .. }
                | Error::Singular { .. }
                | Error::NonConvergence { .. }
                | Error::DegenerateFit(_)
                | Error::CommonSampleTooSmall { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Manifest-driven experiment runner over the spectral laboratory: builds
//! operators from a text manifest, executes one experiment (or a named
//! preset bundle), and writes deterministic CSV reports plus a verdict
//! summary.

pub mod manifest;
pub mod presets;
pub mod runner;

use std::fmt;

/// Failure classes mapped to process exit codes: manifest errors exit 2,
/// guard violations exit 3, anything else exits 1. A failed certification is
/// a result, not an error.
#[derive(Debug)]
pub enum RunError {
    Manifest(String),
    Guard(String),
    Internal(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Manifest(m) => write!(f, "manifest error: {m}"),
            RunError::Guard(m) => write!(f, "guard violation: {m}"),
            RunError::Internal(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<toeplitz_lab::Error> for RunError {
    fn from(e: toeplitz_lab::Error) -> Self {
        match e {
            toeplitz_lab::Error::LightConeViolation { .. } | toeplitz_lab::Error::EmptyBand(_) => {
                RunError::Guard(e.to_string())
            }
            other => RunError::Internal(other.to_string()),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Manifest(_) => 2,
            RunError::Guard(_) => 3,
            RunError::Internal(_) => 1,
        }
    }
}

/// 17-significant-digit float for byte-faithful CSV round-trips.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

use thiserror::Error;

use crate::ops_core::Rep;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("representation mismatch: expected {expected:?}, found {found:?}")]
    RepMismatch { expected: Rep, found: Rep },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite samples produced by {0}")]
    NonFinite(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("resolution error: {what}: unresolved spectral weight {weight:.3e} exceeds {tol:.3e}")]
    Resolution { what: String, weight: f64, tol: f64 },

    #[error("dense cap exceeded: n = {n} > cap {cap}")]
    DenseCap { n: usize, cap: usize },

    #[error("singular input: {0}")]
    Singular(String),

    #[error("non-positive eigenvalue {eig:.3e} below -{tol:.1e}")]
    NotPositive { eig: f64, tol: f64 },

    #[error("subspace not standard: {0}")]
    NotStandard(String),

    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    #[error("invalid control {control}: {reason}")]
    InvalidControl { control: String, reason: String },

    #[error("support violation: {0}")]
    Support(String),

    #[error("truncation budget exceeded: {0}")]
    Truncation(String),

    #[error("mode basis too small: leakage {leakage:.3e} exceeds {bound:.3e}")]
    Leakage { leakage: f64, bound: f64 },

    #[error("resampling error {err:.3e} above bound {bound:.3e}")]
    Resampling { err: f64, bound: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Resolution { .. }
            | Error::Domain(_)
            | Error::NonFinite(_)
            | Error::Support(_)
            | Error::Resampling { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

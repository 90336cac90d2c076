// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input `{name}`: {message}")]
    InvalidInput { name: &'static str, message: String },

    #[error("truncation dimension {0} is too small (need at least 2)")]
    DimensionTooSmall(usize),

    #[error("Fock index {index} out of range for dimension {dim}")]
    OutOfRange { index: usize, dim: usize },

    #[error("{0} overflows f64; use the log-domain variant")]
    Overflow(String),

    #[error("{what} did not converge within {terms} terms")]
    NonConvergence { what: &'static str, terms: usize },

    #[error(
        "truncation too small: tail mass {tail:.3e} at D={dim} exceeds {tol:.3e}; \
         minimal adequate D is {minimal_dim}"
    )]
    TruncationTooSmall {
        dim: usize,
        tail: f64,
        tol: f64,
        minimal_dim: usize,
    },

    #[error("invalid coupling route: {0}")]
    InvalidRoute(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigendecomposition failed: reconstruction residual {residual:.3e}")]
    EigenFailure { residual: f64 },

    #[error("config `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("numerical check `{check}` failed: {value:.3e} exceeds {limit:.3e}")]
    Numerical {
        check: String,
        value: f64,
        limit: f64,
    },

    #[error("malformed matrix dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse failure categories, mapped onto CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Numerical,
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Numerical => 3,
            ErrorCategory::Io => 4,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidInput { .. }
            | Error::DimensionTooSmall(_)
            | Error::OutOfRange { .. }
            | Error::InvalidRoute(_)
            | Error::Config { .. }
            | Error::TruncationTooSmall { .. } => ErrorCategory::Config,
            Error::Overflow(_)
            | Error::NonConvergence { .. }
            | Error::DimensionMismatch { .. }
            | Error::EigenFailure { .. }
            | Error::Numerical { .. } => ErrorCategory::Numerical,
            Error::Io(_) | Error::Json(_) | Error::Format(_) => ErrorCategory::Io,
        }
    }

    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidInput {
            name,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

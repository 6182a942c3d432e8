use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single field-addressed validation failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Error)]
pub enum KisanError {
    #[error("validation failed: {}", join_fields(.0))]
    Validation(Vec<FieldError>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("arity mismatch: expected {expected} features, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("{0}")]
    Data(String),

    #[error("unknown {kind} '{value}' (known: {})", .known.join(", "))]
    UnknownCategory {
        kind: &'static str,
        value: String,
        known: Vec<String>,
    },

    #[error("OOB undefined: {0}")]
    OobUndefined(&'static str),

    #[error("unsupported version {0}")]
    UnsupportedVersion(u64),

    #[error("checksum mismatch: expected {expected}, computed {computed}")]
    ChecksumMismatch { expected: String, computed: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn join_fields(fields: &[FieldError]) -> String {
    fields.iter().map(|f| f.message.as_str()).collect::<Vec<_>>().join("; ")
}

impl KisanError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        KisanError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Field-level errors carried by this error, if it is a validation failure.
    pub fn field_errors(&self) -> Option<&[FieldError]> {
        match self {
            KisanError::Validation(fields) => Some(fields),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, KisanError>;

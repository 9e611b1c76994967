use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("degenerate kernel: tau_m == tau_s ({0}) makes the dual-exponential filter identically zero")]
    DegenerateKernel(f64),

    #[error("unstable filter: pole modulus {modulus} is not inside the unit circle")]
    UnstableFilter { modulus: f64 },

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("value {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {what} at byte offset {offset}: {reason}")]
    Parse { what: String, offset: u64, reason: String },

    #[error("csv error in {path}: {reason}")]
    Csv { path: PathBuf, reason: String },

    #[error("unsupported checkpoint version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

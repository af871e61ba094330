use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("measurement outcome has zero probability")]
    ZeroProbability,

    #[error("format `{format}` is not supported for {report}")]
    UnsupportedFormat { format: String, report: String },

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! invalid_arg {
    ($($arg:tt)*) => { $crate::error::Error::InvalidArgument(format!($($arg)*)) };
}

macro_rules! shape_err {
    ($($arg:tt)*) => { $crate::error::Error::Shape(format!($($arg)*)) };
}

macro_rules! invalid_state {
    ($($arg:tt)*) => { $crate::error::Error::InvalidState(format!($($arg)*)) };
}

pub(crate) use {invalid_arg, invalid_state, shape_err};

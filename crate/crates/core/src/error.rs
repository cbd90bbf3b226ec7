use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("truncation order {given} is too small, need at least {required}")]
    Truncation { given: usize, required: usize },

    #[error("value {value} outside the available range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("singular problem: {0}")]
    Singular(String),

    #[error("fit did not converge after {iterations} iterations: {detail}")]
    FitNonConvergence { iterations: usize, detail: String },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed rows at lines {lines:?}")]
    MalformedRows { lines: Vec<usize> },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Parse { .. }
                | Error::MalformedRows { .. }
                | Error::Config(_)
        )
    }
}

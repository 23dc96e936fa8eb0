use thiserror::Error;

/// Errors raised by the estimators, distributions and test procedures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("unsupported design: {0}")]
    UnsupportedDesign(String),
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The data (or the design it implies) cannot be analysed.
    Data,
    /// A numerical routine failed to converge or decompose.
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Numeric(_) => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

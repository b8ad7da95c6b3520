use std::fmt;

/// Errors produced by the analytical and numerical paths.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition.
    Domain(String),
    /// A numerical procedure failed to reach its accuracy target; carries diagnostics.
    Numerical(String),
    /// A semi-infinite integral was detected to grow without bound.
    Diverges,
    /// The requested combination is outside the method's range of validity.
    Unsupported(String),
    /// Cooperative cancellation was requested through `QuadOptions`.
    Cancelled,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
            Error::Diverges => write!(f, "integral diverges"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::Cancelled => write!(f, "cancelled"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

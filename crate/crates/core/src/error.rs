use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// The point lies outside the region where the metric is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A computation produced a non-finite or singular result.
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

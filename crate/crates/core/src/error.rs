use thiserror::Error;

/// Errors produced by the sampling, enumeration, and counting routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A subset was malformed for the density it was passed to (wrong length,
    /// duplicate elements, or elements outside the ground set).
    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("density has empty support: {0}")]
    EmptySupport(String),

    #[error("state is not in the support of the density")]
    NotInSupport,

    #[error("enumeration needs {required} subsets, cap is {cap}")]
    CapExceeded { required: u128, cap: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample budget exceeded: {required} samples required, budget is {budget}")]
    SampleBudget { required: u128, budget: u128 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_param(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

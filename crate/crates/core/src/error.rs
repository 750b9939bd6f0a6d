use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("certification failed for clients {clients:?}: {reason}")]
    Certification { clients: Vec<usize>, reason: String },

    #[error("cluster alignment unsupported: {0}")]
    AlignmentUnsupported(String),

    #[error("aggregation failed: {0}")]
    Aggregation(String),

    #[error("invalid privacy budget: {0}")]
    InvalidBudget(String),

    #[error("secure aggregation aborted: {0}")]
    ProtocolAbort(String),

    #[error("metric undefined: {0}")]
    Undefined(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;

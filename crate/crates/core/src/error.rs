use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The realized feedback has zero probability under the learner's current
    /// distribution, so learner and environment are out of sync.
    #[error("inconsistent feedback: {0}")]
    InconsistentFeedback(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid feedback graph: {0}")]
    InvalidGraph(String),

    #[error("size limit exceeded: {size} > {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("degenerate regression history: {0}")]
    FitDegenerate(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::Error::$variant(alloc::format!($($arg)*)))
    };
}

pub(crate) use bail;

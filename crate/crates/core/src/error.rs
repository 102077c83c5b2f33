use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("destination {dst} unreachable from {src}")]
    UnreachableDestination { src: usize, dst: usize },
    #[error("invalid routing: {0}")]
    InvalidRouting(String),
    #[error("unknown category: {0}")]
    UnknownCategory(String),
    #[error("degenerate target at index {index}: MAPE needs nonzero targets")]
    DegenerateTarget { index: usize },
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(&'static str),
    #[error("numeric overflow: non-finite value produced by {0}")]
    NumericOverflow(&'static str),
    #[error("training diverged at step {step}")]
    TrainingDivergence { step: u64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Shorthand for building an [`Error::InvalidArgument`] from format args.
#[macro_export]
macro_rules! invalid_arg {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}

use alloc::string::String;

/// Errors produced by the core engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller broke an operation's contract (wrong lengths, labels out of range, ...).
    #[error("contract violation: {0}")]
    Contract(String),
    /// Invalid construction parameters.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Input data that cannot be processed (empty sets, windows too short, ...).
    #[error("invalid input: {0}")]
    Input(String),
    /// An operation was called in the wrong state, e.g. backward with a
    /// trace from a different network.
    #[error("state error: {0}")]
    State(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;

use thiserror::Error;

/// The error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Two inputs that must have equal length did not.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// An argument was out of its documented domain.
    #[error("invalid argument: {0}")]
    Usage(String),

    /// A run would exceed its configured size cap (enumerated pairs, simulated pairs).
    #[error("resource budget exceeded: {needed} requested, cap is {cap}")]
    Budget { needed: usize, cap: usize },

    /// Malformed input data (bit files, config documents).
    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Process exit code for this error: 2 usage, 3 resource budget, 4 input format.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::LengthMismatch { .. } | Error::Usage(_) => 2,
            Error::Budget { .. } => 3,
            Error::Format(_) | Error::Json(_) => 4,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_same_len(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

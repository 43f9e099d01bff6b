use std::path::PathBuf;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 2;
    pub const IO: u8 = 3;
    pub const NUMERIC: u8 = 4;
    pub const VERIFICATION: u8 = 5;
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Dataset { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Checkpoint(#[from] crate::checkpoint::CheckpointError),
    #[error(transparent)]
    Core(#[from] breaker_core::Error),
    #[error("gradient check failed for {0}")]
    Verification(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        use crate::checkpoint::CheckpointError as C;
        match self {
            Error::Io { .. } => exit::IO,
            Error::Checkpoint(C::Io { .. }) => exit::IO,
            Error::Checkpoint(_) => exit::CONFIG,
            Error::Dataset { .. } | Error::Config(_) => exit::CONFIG,
            Error::Core(
                breaker_core::Error::NonFiniteLoss { .. } | breaker_core::Error::NonFiniteGradient(_),
            ) => exit::NUMERIC,
            Error::Core(_) => exit::CONFIG,
            Error::Verification(_) => exit::VERIFICATION,
        }
    }
}

use std::io;
use std::path::PathBuf;

use ordlab_core::generators::container::ContainerError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(
        "repeat {repeat} (seed {seed}): collection is not jointly realizable, \
         residual {residual:e} exceeds tolerance {tolerance:e}"
    )]
    NotRealizable {
        repeat: usize,
        seed: u64,
        residual: f64,
        tolerance: f64,
    },

    #[error(transparent)]
    Core(#[from] ordlab_core::Error),

    #[error("{path}: {source}")]
    Container {
        path: PathBuf,
        #[source]
        source: ContainerError,
    },

    #[error("{0} bound check(s) failed")]
    BoundViolation(usize),
}

impl HarnessError {
    pub fn usage(msg: impl Into<String>) -> Self {
        HarnessError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 usage, 3 bound violation, 4 I/O, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            HarnessError::BoundViolation(_) => 3,
            HarnessError::Io { .. } => 4,
            HarnessError::Container { source, .. } => match source {
                ContainerError::Io(_) => 4,
                _ => 1,
            },
            HarnessError::NotRealizable { .. } | HarnessError::Core(_) => 1,
        }
    }
}

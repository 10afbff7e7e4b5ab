use std::path::PathBuf;

use crate::config::ConfigError;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Usage(String),

    #[error("{module}: {source}")]
    Compute {
        module: &'static str,
        source: resonator_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Compute { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Tag core errors with the module that raised them.
pub(crate) trait InModule<T> {
    fn in_module(self, module: &'static str) -> CliResult<T>;
}

impl<T> InModule<T> for resonator_core::Result<T> {
    fn in_module(self, module: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Compute { module, source })
    }
}

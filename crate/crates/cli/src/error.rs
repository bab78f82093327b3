use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] carnot_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("trace {path}: {message}")]
    Trace { path: PathBuf, message: String },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<CliError>,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        match self {
            e @ Self::Stage { .. } => e,
            e => Self::Stage {
                stage: stage.into(),
                source: Box::new(e),
            },
        }
    }
}

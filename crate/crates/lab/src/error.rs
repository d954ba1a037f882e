use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// A config value failed validation; `field` is the dotted key path.
    #[error("{field}: {reason}")]
    Config { field: String, reason: String },
    #[error("config syntax: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Core(#[from] rmsmd_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}, line {line}: {reason}")]
    Parse {
        path: String,
        line: u64,
        reason: String,
    },
    #[error("unknown preset {0:?} (expected one of fig1f, fig2c, fig3c, fig3d, fig4c, fig4d, all)")]
    UnknownPreset(String),
    #[error("nothing to plot: the sweep has no rows")]
    EmptySweep,
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl LabError {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        LabError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 1 for anything that failed
    /// while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. }
            | LabError::Toml(_)
            | LabError::Parse { .. }
            | LabError::UnknownPreset(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

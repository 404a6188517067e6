use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] hyperlock_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown override `{key}` for {kind}")]
    UnknownOverride { key: String, kind: String },
    #[error("override `{key}`: cannot parse `{value}`")]
    BadOverride { key: String, value: String },
    #[error("no admissible configuration after {attempts} attempts")]
    ExhaustedAttempts { attempts: usize },
    #[error("{0}")]
    Usage(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

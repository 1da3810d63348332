use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller violated an operation precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at step {step}: {detail}")]
    Training { step: u64, detail: String },

    /// Configuration failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),

    /// An artifact on disk is missing, malformed, or does not match its
    /// producing configuration.
    #[error("artifact error at {path}: {detail}")]
    Artifact { path: PathBuf, detail: String },

    /// A pipeline stage failed; wraps the underlying error with the stage name.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn artifact(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Artifact {
            path: path.into(),
            detail: detail.into(),
        }
    }

    /// Tag an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

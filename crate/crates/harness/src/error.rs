use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver failure in {context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: pricelab_core::Error,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn config(e: impl std::fmt::Display) -> Self {
        HarnessError::Config(e.to_string())
    }

    pub fn solver(context: impl Into<String>, source: pricelab_core::Error) -> Self {
        HarnessError::Solver {
            context: context.into(),
            source,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for solver
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Json(_) => 2,
            HarnessError::Solver { .. } => 3,
            HarnessError::Io { .. } => 1,
        }
    }
}

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation; exit code 2.
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0} mismatched file(s)")]
    Verify(usize),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Core(#[from] trajdiff_core::Error),
    #[error(transparent)]
    Dit(#[from] trajdiff_dit::Error),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        CliError::Domain(msg.into())
    }
}

pub(crate) trait PathContext<T> {
    fn at(self, path: &std::path::Path) -> Result<T>;
}

impl<T> PathContext<T> for std::io::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T> {
        self.map_err(|source| CliError::File {
            path: path.display().to_string(),
            source,
        })
    }
}

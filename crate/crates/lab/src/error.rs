use renormlab_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// Itemized configuration problems.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error("{0}")]
    Io(String),
}

impl LabError {
    pub fn context(context: impl Into<String>, source: CoreError) -> Self {
        LabError::Core { context: context.into(), source }
    }

    /// Process exit code: 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

/// Attaches context to core results.
pub trait Context<T> {
    fn ctx(self, what: &str) -> Result<T, LabError>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn ctx(self, what: &str) -> Result<T, LabError> {
        self.map_err(|e| LabError::context(what, e))
    }
}

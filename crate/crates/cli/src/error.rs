use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at {path}: {message}")]
    ConfigInvalid { path: String, message: String },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: hermlab_core::Error,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(path: String, message: String) -> Self {
        CliError::ConfigInvalid { path, message }
    }

    pub fn core(context: impl Into<String>, source: hermlab_core::Error) -> Self {
        CliError::Core { context: context.into(), source }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

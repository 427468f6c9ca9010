use std::path::PathBuf;

/// Crate-wide error type.  Every variant carries enough context to print a
/// single actionable line; `code` gives a stable machine-readable tag for
/// scripting against the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("shape mismatch: {context}: {a:?} vs {b:?}")]
    ShapeMismatch {
        context: &'static str,
        a: (usize, usize),
        b: (usize, usize),
    },

    #[error("invalid kernel: {0}")]
    Kernel(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid color filter array: {0}")]
    Cfa(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("solver: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable short tag used as the error prefix in CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Shape(_) | Error::ShapeMismatch { .. } => "shape",
            Error::Kernel(_) => "kernel",
            Error::Parameter(_) => "parameter",
            Error::Cfa(_) => "cfa",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::Config(_) => "config",
            Error::Solver(_) => "solver",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

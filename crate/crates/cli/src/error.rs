use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("data format error in {path}: {reason}")]
    Data { path: PathBuf, reason: String },

    #[error(transparent)]
    Core(#[from] tpca_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn data(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        CliError::Data {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// 2 config, 3 data format, 4 numerical consistency.
    pub fn exit_code(&self) -> u8 {
        use tpca_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Data { .. } => 3,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) => 2,
                E::Numerical(_) | E::SvdFailure { .. } | E::UndefinedKappa => 4,
                E::ShapeMismatch { .. }
                | E::DimensionMismatch { .. }
                | E::Format { .. }
                | E::Io { .. }
                | E::DegenerateRange(_)
                | E::Empty(_) => 3,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

use thiserror::Error;

/// Failures surfaced by the front end, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numeric(mfcache::Error),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::MissingArtifact(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<mfcache::Error> for CliError {
    fn from(err: mfcache::Error) -> Self {
        use mfcache::Error as E;
        match err {
            E::InvalidParameter { .. } | E::IndexOutOfRange { .. } => CliError::Config(err.to_string()),
            E::GridFormat(msg) => CliError::MissingArtifact(format!("unreadable grid dump: {msg}")),
            E::Io(io) => CliError::Io(io),
            other => CliError::Numeric(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

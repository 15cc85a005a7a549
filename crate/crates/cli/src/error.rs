use thiserror::Error;

/// Driver errors, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Backend(hhg_core::Error),

    #[error("cache integrity: {0}")]
    Cache(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("validation failed: {0} check(s) failed")]
    Validation(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Validation(_) => 2,
            Self::Backend(_) => 3,
            Self::Cache(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

impl From<hhg_core::Error> for CliError {
    fn from(e: hhg_core::Error) -> Self {
        match e {
            hhg_core::Error::Cache(m) => Self::Cache(m),
            hhg_core::Error::Io(e) => Self::Io(e),
            e => Self::Backend(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

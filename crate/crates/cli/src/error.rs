use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Capacity(String),

    #[error("{0}")]
    Runtime(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 when the particle
    /// cap is hit, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<bbm_core::Error> for CliError {
    fn from(e: bbm_core::Error) -> Self {
        use bbm_core::Error as E;
        match e {
            E::InvalidArgument(_) | E::Window(_) | E::Unsupported(_) => CliError::Config(e.to_string()),
            E::Capacity { .. } => CliError::Capacity(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

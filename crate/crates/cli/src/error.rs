use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(#[from] impulse_core::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Treats a core validation error as a problem with the scenario.
    pub fn from_invalid(e: impulse_core::Error) -> Self {
        match e {
            impulse_core::Error::InvalidParameter { name, .. } => CliError::config(name, e.to_string()),
            impulse_core::Error::InvalidSimulation(ref m) => CliError::config("simulate", m.clone()),
            other => CliError::Numerical(other),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

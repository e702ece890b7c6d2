use std::fmt;

use phaseseed::Error;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Every violation found, one per entry.
    Config(Vec<String>),
    Blowup(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Blowup(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(list) => {
                write!(f, "configuration error")?;
                for v in list {
                    write!(f, "\n  {v}")?;
                }
                Ok(())
            }
            CliError::Blowup(m) => write!(f, "integration failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::IntegrationBlowup { .. } | Error::NonFinite { .. } | Error::SteadyState { .. } => {
                CliError::Blowup(e.to_string())
            }
            other => CliError::Config(vec![other.to_string()]),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

use std::fmt;

use fabci::FabError;

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable input (2).
    Usage(String),
    /// Numerical non-convergence (3).
    Numerical(String),
    /// Not enough usable data for the method (4).
    Inadequate(String),
    /// Output could not be written (1).
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Inadequate(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) | CliError::Inadequate(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<FabError> for CliError {
    fn from(e: FabError) -> Self {
        let msg = e.to_string();
        match e {
            FabError::InsufficientData(_) => CliError::Inadequate(msg),
            _ if e.is_numerical() => CliError::Numerical(msg),
            _ => CliError::Usage(msg),
        }
    }
}

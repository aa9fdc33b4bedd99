use std::fmt;

/// Failures mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid configuration (exit 2).
    Config(String),
    /// Integration or linear-algebra failure (exit 3).
    Numerical(String),
    /// The exact V-system channel is unavailable (exit 4).
    DegenerateExact(String),
    /// Output could not be written (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::DegenerateExact(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::DegenerateExact(m) => write!(f, "exact channel unavailable: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

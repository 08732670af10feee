use ness_core::NessError;
use std::fmt;

/// Failure classes, one per exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable or invalid config, unwritable output: exit 2.
    Usage(String),
    /// The model or an analysis fails a domain requirement: exit 1.
    Domain(String),
    /// Band edge, pole or quadrature failure: exit 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(m) => write!(f, "domain error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<NessError> for CliError {
    fn from(e: NessError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Domain(e.to_string())
        }
    }
}

//! CLI error categories mapped to process exit codes.

use std::fmt;

/// Exit codes: 1 I/O, 2 input validation, 3 numerical failure, 4 negative
/// check result (machine-usable from `check-autoparallel`).
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Validation(String),
    Numerical(String),
    CheckNegative,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::CheckNegative => 4,
        }
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(msg) => write!(f, "I/O error: {msg}"),
            CliError::Validation(msg) => write!(f, "invalid input: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::CheckNegative => write!(f, "check returned negative"),
        }
    }
}

impl From<kernelfill::Error> for CliError {
    fn from(err: kernelfill::Error) -> Self {
        use kernelfill::Error as E;
        match &err {
            E::InvalidInput(_) | E::NotPositiveDefinite(_) | E::DegenerateSample(_) => {
                CliError::Validation(err.to_string())
            }
            E::SingularMatrix { .. }
            | E::SingularProjection(_)
            | E::OptimizationFailed { .. }
            | E::DegenerateDirection { .. }
            | E::DivergedNumerically(_) => CliError::Numerical(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

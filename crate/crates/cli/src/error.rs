use std::fmt;

use qsthermo::QsError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(QsError),
    Io(String),
    PartialSweep { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
            CliError::PartialSweep { .. } => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::PartialSweep { failed, total } => {
                write!(f, "{failed} of {total} sweep cells failed")
            }
        }
    }
}

impl From<QsError> for CliError {
    fn from(e: QsError) -> Self {
        match e {
            QsError::InvalidModel(_)
            | QsError::OffBisector { .. }
            | QsError::InvalidInitialCondition(_)
            | QsError::DimensionMismatch { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

use thiserror::Error;

/// Failures surfaced to the user, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Coverage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 2,
            Self::Numerical(_) => 3,
            Self::Coverage(_) => 4,
        }
    }
}

impl From<qcvar::Error> for CliError {
    fn from(e: qcvar::Error) -> Self {
        use qcvar::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidInput(_) | E::Dimension(_) | E::Domain(_) | E::Io(_) | E::TableFormat(_) => Self::Input(msg),
            E::TableCoverage(_) => Self::Coverage(msg),
            _ => Self::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

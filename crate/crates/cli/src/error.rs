use isochron_core::Error;

/// Failures mapped onto exit codes 1 (input) and 2 (numerical).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical failure in {op}: {source}")]
    Numerical {
        op: String,
        #[source]
        source: Error,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn input(e: Error) -> CliError {
        CliError::Input(e.to_string())
    }

    pub fn from_core(op: impl Into<String>, e: Error) -> CliError {
        let op = op.into();
        if e.is_numerical() {
            CliError::Numerical { op, source: e }
        } else {
            CliError::Input(format!("{op}: {e}"))
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 1,
            CliError::Numerical { .. } => 2,
        }
    }
}

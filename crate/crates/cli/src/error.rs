use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("{0} check(s) exceeded their bound")]
    BoundViolation(usize),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::BoundViolation(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<aqds_core::Error> for CliError {
    fn from(e: aqds_core::Error) -> Self {
        use aqds_core::Error::*;
        match e {
            InvalidInput(_) | LengthMismatch { .. } => CliError::Usage(e.to_string()),
            Config(_) | KeyOracle(_) | NoSignal | DistanceInfeasible { .. } => CliError::Infeasible(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

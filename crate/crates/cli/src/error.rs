use std::fmt;

use causal_kit::dag::DagError;
use causal_kit::data::DataError;
use causal_kit::sem::SemError;
use causal_kit::EstimationError;

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_ESTIMATION: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

/// A failed run: process exit code, machine-readable code and message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub exit: i32,
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(exit: i32, code: &str, message: impl Into<String>) -> Self {
        CliError { exit, code: code.to_string(), message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::new(EXIT_USAGE, "USAGE", message)
    }

    pub fn parse(message: impl Into<String>) -> Self {
        CliError::new(EXIT_PARSE, "PARSE", message)
    }

    /// Errors raised while reading a DAG file.
    pub fn dag_file(e: DagError) -> Self {
        CliError::parse(e.to_string())
    }

    /// Errors raised by a query on an already parsed DAG.
    pub fn dag_query(e: DagError) -> Self {
        let code = match e {
            DagError::UnknownNode(_) => "UNKNOWN_NODE",
            _ => "QUERY",
        };
        CliError::new(EXIT_ESTIMATION, code, e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::UnknownColumn(_) => CliError::new(EXIT_USAGE, "UNKNOWN_COLUMN", e.to_string()),
            DataError::MissingRole(_) => CliError::usage(e.to_string()),
            DataError::NonBinaryTreatment { .. } => CliError::new(EXIT_ESTIMATION, "NON_BINARY_TREATMENT", e.to_string()),
            DataError::Io(_) => CliError::new(EXIT_PARSE, "IO", e.to_string()),
            _ => CliError::parse(e.to_string()),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::Data(d) => d.into(),
            EstimationError::InvalidArgument(_) => CliError::new(EXIT_USAGE, e.code(), e.to_string()),
            _ => CliError::new(EXIT_ESTIMATION, e.code(), e.to_string()),
        }
    }
}

impl From<SemError> for CliError {
    fn from(e: SemError) -> Self {
        let code = match &e {
            SemError::UnknownScenario(_) => "UNKNOWN_SCENARIO",
            SemError::UnknownParameter(_) => "UNKNOWN_PARAMETER",
            SemError::InvalidParameter { .. } => "INVALID_PARAMETER",
            SemError::Argument(_) => "INVALID_ARGUMENT",
            SemError::Data(_) => return CliError::parse(e.to_string()),
            _ => return CliError::new(EXIT_ESTIMATION, "SIMULATION", e.to_string()),
        };
        CliError::new(EXIT_USAGE, code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(EXIT_PARSE, "IO", e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

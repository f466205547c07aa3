//! Error taxonomy mapped to process exit codes: usage 1, data 2,
//! internal 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("io error: {e}"))
    }
}

impl From<nalbn::io::IoError> for CliError {
    fn from(e: nalbn::io::IoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<nalbn::data::DataError> for CliError {
    fn from(e: nalbn::data::DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<nalbn::model::FitError> for CliError {
    fn from(e: nalbn::model::FitError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<nalbn::graph::GraphError> for CliError {
    fn from(e: nalbn::graph::GraphError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<nalbn::search::SearchError> for CliError {
    fn from(e: nalbn::search::SearchError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<nalbn::sem::SemError> for CliError {
    fn from(e: nalbn::sem::SemError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(format!("json error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(format!("csv error: {e}"))
    }
}

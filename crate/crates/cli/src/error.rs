use std::fmt;

use evolex_bench::BenchError;
use evolex_core::Error;

/// A failure that ends a command, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters. Exit status 2.
    Usage(String),
    /// Unreadable or unusable input data. Exit status 3.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

/// Whether an engine error is about the request rather than the data.
pub fn is_request_error(err: &Error) -> bool {
    matches!(
        err.root(),
        Error::InvalidParameter(_) | Error::UnknownAttribute(_) | Error::UnknownMetric(_)
    )
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        if is_request_error(&err) {
            CliError::Usage(err.to_string())
        } else {
            CliError::Data(err.to_string())
        }
    }
}

impl From<BenchError> for CliError {
    fn from(err: BenchError) -> Self {
        match err {
            BenchError::Core(e) => e.into(),
            e @ (BenchError::InvalidSpec(_)
            | BenchError::InvalidParameter(_)
            | BenchError::UnknownSegmenter(_)) => CliError::Usage(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

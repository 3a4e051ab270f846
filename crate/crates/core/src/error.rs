use std::fmt;

/// Errors produced by the explanation engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("row {row}: cannot parse time value {value:?} in column {column:?}")]
    TimeParse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: non-numeric value {value:?} in measure column {column:?}")]
    MeasureParse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series grids do not match")]
    GridMismatch,

    #[error("time window excludes every timestamp")]
    EmptyWindow,

    #[error("AVG is undefined at timestamp {timestamp}: no rows")]
    AvgZeroCount { timestamp: String },

    #[error("explanation is not part of the cube")]
    MissingExplanation,

    #[error("infeasible segmentation: {0}")]
    Infeasible(String),

    #[error("unknown variance metric {0:?}")]
    UnknownMetric(String),

    #[error("derived column {name:?}: {message}")]
    DerivedColumn { name: String, message: String },

    #[error("{phase} failed: {source}")]
    Phase {
        phase: Phase,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Strip phase tags and return the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Phase { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Pipeline phase an error originated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Ingest,
    Cube,
    Precompute,
    Cascade,
    Segmentation,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Ingest => "ingest",
            Phase::Cube => "cube materialization",
            Phase::Precompute => "score precomputation",
            Phase::Cascade => "cascading analysts",
            Phase::Segmentation => "segmentation",
        })
    }
}

pub(crate) trait PhaseExt<T> {
    fn phase(self, phase: Phase) -> Result<T>;
}

impl<T> PhaseExt<T> for Result<T> {
    fn phase(self, phase: Phase) -> Result<T> {
        self.map_err(|e| match e {
            tagged @ Error::Phase { .. } => tagged,
            other => Error::Phase {
                phase,
                source: Box::new(other),
            },
        })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

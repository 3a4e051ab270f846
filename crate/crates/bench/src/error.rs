use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("could not place cuts after {0} attempts")]
    CutPlacement(usize),
    #[error("signal-to-noise ratio is undefined for a constant series")]
    ConstantSeries,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("schemes disagree on K: candidate {candidate}, truth {truth}")]
    KMismatch { candidate: usize, truth: usize },
    #[error("unknown segmenter {0:?}")]
    UnknownSegmenter(String),
    #[error(transparent)]
    Core(#[from] evolex_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

//! Synthetic ground truth, a bottom-up baseline and accuracy experiments.

pub mod accuracy;
pub mod baseline;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod segmenter;
pub mod synth;

pub use accuracy::distance_percent;
pub use baseline::{bottom_up_segment, fit_residual};
pub use error::{BenchError, Result};
pub use experiment::{
    effectiveness_experiment, metric_rank_experiment, run_bench, BenchConfig, BenchReport,
    EffectivenessReport, RankReport, ALL_METRICS,
};
pub use segmenter::{BottomUp, EngineSegmenter, Segmenter, SegmenterRegistry};
pub use synth::{add_noise, generate, generate_synthetic, GroundTruth, SyntheticDataset, SyntheticSpec};

use evolex_core::pipeline::{segment, Engine, SegmentOptions};
use evolex_core::variance::builtin_metric;
use evolex_core::{ElbowRule, KChoice, SegmentationScheme};

use crate::baseline::bottom_up_segment;
use crate::error::{BenchError, Result};
use crate::synth::SyntheticDataset;

/// A method that cuts a synthetic dataset into exactly `k` segments.
pub trait Segmenter: Send + Sync {
    fn id(&self) -> &str;
    fn segment(&self, data: &SyntheticDataset, k: usize) -> Result<SegmentationScheme>;
}

/// The explanation-aware engine with a chosen variance metric.
#[derive(Debug, Clone)]
pub struct EngineSegmenter {
    pub id: String,
    pub metric: String,
    pub m: usize,
    pub guess_verify: bool,
    pub sketching: bool,
}

impl EngineSegmenter {
    pub fn new(metric: &str) -> Result<EngineSegmenter> {
        let canonical = builtin_metric(metric)?.id().to_string();
        Ok(EngineSegmenter {
            id: canonical.to_lowercase(),
            metric: canonical,
            m: evolex_core::cascade::DEFAULT_M,
            guess_verify: true,
            sketching: true,
        })
    }
}

impl Segmenter for EngineSegmenter {
    fn id(&self) -> &str {
        &self.id
    }

    fn segment(&self, data: &SyntheticDataset, k: usize) -> Result<SegmentationScheme> {
        let cube = data.cube()?;
        let mut engine = Engine::new(&cube, self.m, self.guess_verify, &self.metric)?;
        let opts = SegmentOptions {
            k: KChoice::Fixed(k),
            k_max: k,
            sketching: self.sketching,
            elbow: ElbowRule::Kneedle,
        };
        Ok(segment(&mut engine, &opts)?.scheme)
    }
}

/// Bottom-up merging on the aggregated series.
#[derive(Debug, Clone, Copy, Default)]
pub struct BottomUp;

impl Segmenter for BottomUp {
    fn id(&self) -> &str {
        "bottomup"
    }

    fn segment(&self, data: &SyntheticDataset, k: usize) -> Result<SegmentationScheme> {
        bottom_up_segment(&data.aggregate(), k)
    }
}

pub struct SegmenterRegistry {
    entries: Vec<Box<dyn Segmenter>>,
}

impl SegmenterRegistry {
    pub fn empty() -> SegmenterRegistry {
        SegmenterRegistry { entries: Vec::new() }
    }

    /// `tse` and `bottomup`.
    pub fn builtin() -> SegmenterRegistry {
        let mut r = SegmenterRegistry::empty();
        r.register(Box::new(EngineSegmenter::new("tse").expect("builtin metric")));
        r.register(Box::new(BottomUp));
        r
    }

    /// Replaces an entry with the same id.
    pub fn register(&mut self, s: Box<dyn Segmenter>) {
        self.entries.retain(|e| e.id() != s.id());
        self.entries.push(s);
    }

    pub fn get(&self, id: &str) -> Result<&dyn Segmenter> {
        self.entries
            .iter()
            .find(|e| e.id().eq_ignore_ascii_case(id))
            .map(|b| b.as_ref())
            .ok_or_else(|| BenchError::UnknownSegmenter(id.to_string()))
    }

    /// Like `get`, but an unregistered variance metric id registers the
    /// engine running that metric.
    pub fn resolve(&mut self, id: &str) -> Result<&dyn Segmenter> {
        if self.get(id).is_err() {
            let engine = EngineSegmenter::new(id).map_err(|_| BenchError::UnknownSegmenter(id.to_string()))?;
            self.register(Box::new(engine));
        }
        self.get(id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id()).collect()
    }
}

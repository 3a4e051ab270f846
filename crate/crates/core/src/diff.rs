//! Diff scores: how much an explanation's slice moves the KPI between two
//! endpoints of a segment.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::{AggFunction, SeriesCube};
use crate::error::{Error, Result};
use crate::explanation::Explanation;

/// A segment `[start, end]` of grid positions, 0-based, `start < end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "[usize; 2]", try_from = "[usize; 2]")]
pub struct SegmentRef {
    pub start: usize,
    pub end: usize,
}

impl SegmentRef {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidParameter(format!(
                "segment [{start}, {end}] must have start < end"
            )));
        }
        Ok(SegmentRef { start, end })
    }

    /// Unchecked constructor for internal loops that already guarantee `start < end`.
    #[inline]
    pub(crate) fn of(start: usize, end: usize) -> Self {
        debug_assert!(start < end);
        SegmentRef { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_unit(&self) -> bool {
        self.len() == 1
    }

    /// The unit objects `[x, x+1]` inside this segment.
    pub fn objects(&self) -> impl Iterator<Item = SegmentRef> {
        (self.start..self.end).map(|x| SegmentRef::of(x, x + 1))
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.start >= self.end || self.end >= n {
            return Err(Error::InvalidParameter(format!(
                "segment [{}, {}] is not valid on a grid of {n} points",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

impl From<SegmentRef> for [usize; 2] {
    fn from(s: SegmentRef) -> Self {
        [s.start, s.end]
    }
}

impl TryFrom<[usize; 2]> for SegmentRef {
    type Error = Error;

    fn try_from([start, end]: [usize; 2]) -> Result<Self> {
        SegmentRef::new(start, end)
    }
}

/// The change effect τ. A zero contribution counts as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Effect {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl Effect {
    #[inline]
    pub fn of(signed: f64) -> Effect {
        if signed >= 0.0 {
            Effect::Positive
        } else {
            Effect::Negative
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Effect::Positive => 1,
            Effect::Negative => -1,
        }
    }

    pub fn flip(self) -> Effect {
        match self {
            Effect::Positive => Effect::Negative,
            Effect::Negative => Effect::Positive,
        }
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Effect::Positive => "+",
            Effect::Negative => "-",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredExplanation {
    pub explanation: Explanation,
    pub gamma: f64,
    pub tau: Effect,
}

/// A difference metric between the KPI delta with and without an explanation's slice.
///
/// Scores are signed: `|score|` is γ and its sign is τ.
pub trait DiffMetric: Send + Sync {
    fn id(&self) -> &'static str;

    /// Signed score of every explanation in `cube` on `seg`, written into `out`.
    fn signed_scores(&self, cube: &SeriesCube, seg: SegmentRef, out: &mut Vec<f64>);

    fn signed_score(&self, cube: &SeriesCube, e: usize, seg: SegmentRef) -> f64;
}

/// `γ = |Δ − Δ̄|` where Δ̄ is the delta after removing the slice.
#[derive(Debug, Default, Clone, Copy)]
pub struct AbsoluteChange;

impl DiffMetric for AbsoluteChange {
    fn id(&self) -> &'static str {
        "absolute-change"
    }

    fn signed_scores(&self, cube: &SeriesCube, seg: SegmentRef, out: &mut Vec<f64>) {
        out.clear();
        let (si, ci) = cube.parts_row(seg.start);
        let (sj, cj) = cube.parts_row(seg.end);
        match (cube.agg().function, ci, cj) {
            (AggFunction::Avg, Some(ci), Some(cj)) => {
                let agg = cube.agg();
                let (osi, oci) = cube.overall_parts(seg.start);
                let (osj, ocj) = cube.overall_parts(seg.end);
                let delta = agg.value(osj, ocj) - agg.value(osi, oci);
                out.extend((0..si.len()).map(|e| {
                    let rest = agg.value(osj - sj[e], ocj - cj[e]) - agg.value(osi - si[e], oci - ci[e]);
                    delta - rest
                }));
            }
            // Δ − Δ̄ telescopes to the slice's own delta
            _ => out.extend(si.iter().zip(sj).map(|(a, b)| b - a)),
        }
    }

    fn signed_score(&self, cube: &SeriesCube, e: usize, seg: SegmentRef) -> f64 {
        let (si, ci) = cube.parts(e, seg.start);
        let (sj, cj) = cube.parts(e, seg.end);
        match cube.agg().function {
            AggFunction::Avg => {
                let agg = cube.agg();
                let (osi, oci) = cube.overall_parts(seg.start);
                let (osj, ocj) = cube.overall_parts(seg.end);
                let delta = agg.value(osj, ocj) - agg.value(osi, oci);
                delta - (agg.value(osj - sj, ocj - cj) - agg.value(osi - si, oci - ci))
            }
            _ => sj - si,
        }
    }
}

/// Look up a difference metric by id.
pub fn diff_metric(id: &str) -> Result<Box<dyn DiffMetric>> {
    match id {
        "absolute-change" => Ok(Box::new(AbsoluteChange)),
        other => Err(Error::InvalidParameter(format!(
            "unknown difference metric {other:?}"
        ))),
    }
}

/// γ(E) and τ(E) of one explanation on one segment.
pub fn gamma_tau(cube: &SeriesCube, e: &Explanation, seg: SegmentRef) -> Result<ScoredExplanation> {
    let idx = cube.index_of(e).ok_or(Error::MissingExplanation)?;
    seg.check(cube.len())?;
    let s = AbsoluteChange.signed_score(cube, idx, seg);
    Ok(ScoredExplanation {
        explanation: e.clone(),
        gamma: s.abs(),
        tau: Effect::of(s),
    })
}

/// Signed scores for a family of segments, keyed by index pair.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    segments: Vec<SegmentRef>,
    position: HashMap<SegmentRef, usize>,
    signed: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[SegmentRef] {
        &self.segments
    }

    /// Signed scores of every explanation on `seg`, in cube order.
    pub fn signed(&self, seg: SegmentRef) -> Option<&[f64]> {
        self.position.get(&seg).map(|&p| self.signed[p].as_slice())
    }

    pub fn scored(&self, cube: &SeriesCube, seg: SegmentRef) -> Option<Vec<ScoredExplanation>> {
        self.signed(seg).map(|row| {
            row.iter()
                .zip(cube.explanations())
                .map(|(&s, e)| ScoredExplanation {
                    explanation: e.clone(),
                    gamma: s.abs(),
                    tau: Effect::of(s),
                })
                .collect()
        })
    }

    /// Debug dump: one record per (segment, explanation).
    pub fn to_json(&self, cube: &SeriesCube) -> Result<String> {
        #[derive(Serialize)]
        struct Entry {
            segment: [usize; 2],
            explanation: String,
            gamma: f64,
            tau: Effect,
        }
        let mut out = Vec::new();
        for (seg, row) in self.segments.iter().zip(&self.signed) {
            for (e, &s) in row.iter().enumerate() {
                out.push(Entry {
                    segment: [seg.start, seg.end],
                    explanation: cube.explanations()[e].display(cube.explain_by()).to_string(),
                    gamma: s.abs(),
                    tau: Effect::of(s),
                });
            }
        }
        Ok(serde_json::to_string(&out)?)
    }
}

/// Every segment `[i, j]` of an `n`-point grid.
pub fn all_segments(n: usize) -> Vec<SegmentRef> {
    bounded_segments(n, n)
}

/// Segments of length at most `max_len`.
pub fn bounded_segments(n: usize, max_len: usize) -> Vec<SegmentRef> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n.min(i + max_len + 1) {
            out.push(SegmentRef::of(i, j));
        }
    }
    out
}

/// Segments whose endpoints are both in `cuts` (sorted ascending).
pub fn delimited_segments(cuts: &[usize]) -> Vec<SegmentRef> {
    let mut out = Vec::new();
    for (a, &i) in cuts.iter().enumerate() {
        for &j in &cuts[a + 1..] {
            out.push(SegmentRef::of(i, j));
        }
    }
    out
}

pub fn precompute_scores(cube: &SeriesCube, segments: &[SegmentRef]) -> Result<ScoreTable> {
    for s in segments {
        s.check(cube.len())?;
    }
    let mut unique: Vec<SegmentRef> = segments.to_vec();
    unique.sort_unstable();
    unique.dedup();
    let signed: Vec<Vec<f64>> = unique
        .par_iter()
        .map(|&seg| {
            let mut row = Vec::with_capacity(cube.explanation_count());
            AbsoluteChange.signed_scores(cube, seg, &mut row);
            row
        })
        .collect();
    let position = unique.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    Ok(ScoreTable {
        segments: unique,
        position,
        signed,
    })
}

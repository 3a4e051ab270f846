//! End-to-end evolving explanations: cube, per-segment top lists, variance
//! table, segmentation, and the final per-segment explanations.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{Cascade, SegmentTop, DEFAULT_M, GUESS_FACTOR};
use crate::cube::{filter_explanations, materialize_cube, AggFunction, AggSpec, Series, SeriesCube};
use crate::diff::{
    all_segments, bounded_segments, delimited_segments, AbsoluteChange, DiffMetric, Effect,
    SegmentRef,
};
use crate::error::{Error, Phase, PhaseExt, Result};
use crate::explanation::{enumerate_explanations, DEFAULT_MAX_ORDER};
use crate::relation::{Relation, TimeValue};
use crate::segment::{
    k_segmentation_dp, select_optimal_k, sketch_select, CurvePoint, ElbowRule, SegmentationScheme,
    SketchParams, DEFAULT_K_MAX,
};
use crate::variance::{builtin_metric, DistanceContext, VarianceTable, DEFAULT_METRIC};

pub const DEFAULT_FILTER_RATIO: f64 = 0.001;
pub const RESULT_FORMAT_VERSION: u32 = 1;

/// Requested number of segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KChoice {
    #[default]
    Auto,
    Fixed(usize),
}

impl Serialize for KChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KChoice::Auto => s.serialize_str("auto"),
            KChoice::Fixed(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for KChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(k) => Ok(KChoice::Fixed(k)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for KChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(KChoice::Auto);
        }
        s.parse()
            .map(KChoice::Fixed)
            .map_err(|_| format!("expected \"auto\" or a segment count, got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainOptions {
    pub filter_ratio: f64,
    pub guess_verify: bool,
    pub sketching: bool,
    pub variance_metric: String,
    pub elbow: ElbowRule,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions {
            filter_ratio: DEFAULT_FILTER_RATIO,
            guess_verify: true,
            sketching: true,
            variance_metric: DEFAULT_METRIC.to_string(),
            elbow: ElbowRule::Kneedle,
        }
    }
}

/// Parameters of one explain run. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainRequest {
    /// Must match the relation's time attribute when set.
    pub time_attr: Option<String>,
    pub measure: Option<String>,
    pub agg: AggFunction,
    pub explain_by: Vec<String>,
    pub m: usize,
    pub beta_max: usize,
    pub k: KChoice,
    pub k_max: usize,
    pub smooth_window: usize,
    pub time_range: Option<[TimeValue; 2]>,
    pub opts: ExplainOptions,
}

impl Default for ExplainRequest {
    fn default() -> Self {
        ExplainRequest {
            time_attr: None,
            measure: None,
            agg: AggFunction::Sum,
            explain_by: Vec::new(),
            m: DEFAULT_M,
            beta_max: DEFAULT_MAX_ORDER,
            k: KChoice::Auto,
            k_max: DEFAULT_K_MAX,
            smooth_window: 1,
            time_range: None,
            opts: ExplainOptions::default(),
        }
    }
}

impl ExplainRequest {
    pub fn agg_spec(&self) -> AggSpec {
        AggSpec {
            measure: match self.agg {
                AggFunction::Count => None,
                _ => self.measure.clone(),
            },
            function: self.agg,
        }
    }

    /// Reject parameter combinations that no dataset could satisfy.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if self.beta_max == 0 {
            return bad("beta_max must be at least 1".into());
        }
        if self.k_max == 0 {
            return bad("k_max must be at least 1".into());
        }
        if self.k == KChoice::Fixed(0) {
            return bad("k must be at least 1".into());
        }
        if self.smooth_window == 0 {
            return bad("smooth_window must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.opts.filter_ratio) {
            return bad(format!(
                "filter_ratio must be in [0, 1), got {}",
                self.opts.filter_ratio
            ));
        }
        if self.explain_by.is_empty() {
            return bad("explain_by must name at least one attribute".into());
        }
        if self.agg != AggFunction::Count && self.measure.is_none() {
            return bad(format!("{} requires a measure", self.agg));
        }
        if let Some([a, b]) = &self.time_range {
            if a > b {
                return bad("time_range start is after its end".into());
            }
        }
        builtin_metric(&self.opts.variance_metric)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub precompute: f64,
    pub ca: f64,
    pub segmentation: f64,
    pub total: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateOut {
    pub attr: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationOut {
    pub predicates: Vec<PredicateOut>,
    pub label: String,
    pub gamma: f64,
    pub tau: Effect,
    pub effect_sign: i8,
    /// The explanation's aggregated values from `start` to `end` inclusive.
    pub series: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentOut {
    pub start: TimeValue,
    pub end: TimeValue,
    pub start_index: usize,
    pub end_index: usize,
    pub total_score: f64,
    pub explanations: Vec<ExplanationOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub n: usize,
    pub explanations: usize,
    pub explanations_after_filter: usize,
    pub segments_scored: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sketch_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KSelection {
    Auto,
    Fixed,
}

/// Result document of an explain run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolvingExplanations {
    pub version: u32,
    pub k: usize,
    pub k_selection: KSelection,
    /// Interior cut timestamps.
    pub cuts: Vec<TimeValue>,
    /// All `K + 1` boundary positions on the grid, endpoints included.
    pub cut_indices: Vec<usize>,
    pub curve: Vec<CurvePoint>,
    pub objective: f64,
    pub metric: String,
    pub overall: Series,
    pub segments: Vec<SegmentOut>,
    pub stats: RunStats,
    pub timings_ms: Timings,
}

impl EvolvingExplanations {
    pub fn scheme(&self) -> SegmentationScheme {
        SegmentationScheme {
            cuts: self.cut_indices.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// The document with timings zeroed, for comparing runs.
    pub fn without_timings(&self) -> EvolvingExplanations {
        EvolvingExplanations {
            timings_ms: Timings::default(),
            ..self.clone()
        }
    }
}

/// Engine state for one cube: top lists and variances over a growing segment family.
pub struct Engine<'a> {
    cube: &'a SeriesCube,
    cascade: Cascade,
    ctx: DistanceContext<'a>,
    var: VarianceTable,
    metric: Box<dyn crate::variance::VarianceMetric>,
    pub precompute: Duration,
    pub ca: Duration,
    pub segmentation: Duration,
    pub segments_scored: usize,
}

impl<'a> Engine<'a> {
    pub fn new(cube: &'a SeriesCube, m: usize, guess_verify: bool, metric: &str) -> Result<Engine<'a>> {
        let cascade = Cascade::new(
            cube.explanations(),
            cube.explain_by().len(),
            m,
            guess_verify.then_some(GUESS_FACTOR * m),
        )?;
        Ok(Engine {
            cube,
            cascade,
            ctx: DistanceContext::new(cube),
            var: VarianceTable::new(cube.len()),
            metric: builtin_metric(metric)?,
            precompute: Duration::ZERO,
            ca: Duration::ZERO,
            segmentation: Duration::ZERO,
            segments_scored: 0,
        })
    }

    pub fn context(&self) -> &DistanceContext<'a> {
        &self.ctx
    }

    pub fn variance(&self, i: usize, j: usize) -> f64 {
        self.var.get(i, j)
    }

    /// Compute top lists for every segment of `family` not seen yet.
    pub fn score(&mut self, family: &[SegmentRef]) {
        let todo: Vec<SegmentRef> = self.ctx.missing(family).collect();
        let eps = self.cube.explanation_count().max(1);
        let chunk = (1 << 22) / eps;
        for part in todo.chunks(chunk.max(64)) {
            let t = Instant::now();
            let scores: Vec<Vec<f64>> = part
                .par_iter()
                .map(|&seg| {
                    let mut row = Vec::with_capacity(eps);
                    AbsoluteChange.signed_scores(self.cube, seg, &mut row);
                    row
                })
                .collect();
            self.precompute += t.elapsed();
            let t = Instant::now();
            let tops: Vec<SegmentTop> = scores.par_iter().map(|s| self.cascade.top(s)).collect();
            self.ca += t.elapsed();
            for (seg, top) in part.iter().zip(tops) {
                self.ctx.insert(*seg, top);
            }
        }
        self.segments_scored += todo.len();
    }

    /// Score `family` and fill its variances.
    pub fn prepare(&mut self, family: &[SegmentRef]) {
        self.score(family);
        let t = Instant::now();
        self.var.fill(family, self.metric.as_ref(), &self.ctx);
        self.segmentation += t.elapsed();
    }

    pub fn top(&self, seg: SegmentRef) -> &SegmentTop {
        &self.ctx.top(seg).items
    }
}

/// Outcome of segmenting one cube.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub scheme: SegmentationScheme,
    pub curve: Vec<CurvePoint>,
    pub k: usize,
    pub objective: f64,
    pub sketch: Option<Vec<usize>>,
}

/// Segmentation settings independent of how the cube was built.
#[derive(Debug, Clone)]
pub struct SegmentOptions {
    pub k: KChoice,
    pub k_max: usize,
    pub sketching: bool,
    pub elbow: ElbowRule,
}

/// Run the segmentation stage on an engine. Top lists are computed as needed.
pub fn segment(engine: &mut Engine<'_>, opts: &SegmentOptions) -> Result<Segmentation> {
    let n = engine.cube.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "at least two timestamps are needed to explain an evolution".into(),
        ));
    }
    if let KChoice::Fixed(k) = opts.k {
        if k > n - 1 {
            return Err(Error::Infeasible(format!(
                "K = {k} exceeds the {} unit intervals of a {n}-point series",
                n - 1
            )));
        }
    }
    let params = SketchParams::for_len(n);
    let fixed_fits = match opts.k {
        KChoice::Fixed(k) => k <= params.s,
        KChoice::Auto => true,
    };
    let sketch = if opts.sketching && !params.is_degenerate(n) && fixed_fits {
        let phase1 = bounded_segments(n, params.l);
        engine.prepare(&phase1);
        let t = Instant::now();
        let cuts = sketch_select(n, params, |i, j| engine.variance(i, j))?;
        engine.segmentation += t.elapsed();
        engine.prepare(&delimited_segments(&cuts));
        Some(cuts)
    } else {
        engine.prepare(&all_segments(n));
        None
    };

    let t = Instant::now();
    let positions = sketch.as_ref().map_or(n, Vec::len);
    let reach = opts.k_max.min(positions - 1);
    let dp_k = match opts.k {
        KChoice::Auto => reach,
        KChoice::Fixed(k) => k.max(reach),
    };
    let sol = k_segmentation_dp(
        n,
        dp_k,
        |i, j| engine.variance(i, j),
        sketch.as_deref(),
        None,
    )?;
    let curve = sol.curve();
    let k = match opts.k {
        KChoice::Auto => select_optimal_k(&curve, opts.k_max, opts.elbow)?,
        KChoice::Fixed(k) => k,
    };
    let scheme = sol.scheme(k).ok_or_else(|| {
        Error::Infeasible(format!("no scheme with {k} segments on the candidate cuts"))
    })?;
    let objective = sol.total(k).expect("scheme exists");
    engine.segmentation += t.elapsed();
    Ok(Segmentation {
        scheme,
        curve: curve.points,
        k,
        objective,
        sketch,
    })
}

/// Build the cube a request describes: enumerate, materialize, smooth, filter.
pub fn build_cube(relation: &Relation, request: &ExplainRequest) -> Result<(SeriesCube, usize)> {
    let catalog = enumerate_explanations(relation, &request.explain_by, request.beta_max)
        .phase(Phase::Cube)?;
    let window = request.time_range.map(|[a, b]| a..=b);
    let cube = materialize_cube(relation, &request.agg_spec(), &catalog, window.as_ref())
        .phase(Phase::Cube)?;
    let before = cube.explanation_count();
    let cube = if request.smooth_window > 1 {
        cube.smoothed(request.smooth_window).phase(Phase::Cube)?
    } else {
        cube
    };
    let cube = if request.opts.filter_ratio > 0.0 {
        filter_explanations(&cube, request.opts.filter_ratio).phase(Phase::Cube)?
    } else {
        cube
    };
    Ok((cube, before))
}

/// Run the full pipeline on an ingested relation.
pub fn explain_evolving(relation: &Relation, request: &ExplainRequest) -> Result<EvolvingExplanations> {
    let start = Instant::now();
    request.validate()?;
    if let Some(t) = &request.time_attr {
        if t != relation.time_attr() {
            return Err(Error::InvalidParameter(format!(
                "time attribute {t:?} does not match the dataset's {:?}",
                relation.time_attr()
            )));
        }
    }
    let (cube, enumerated) = build_cube(relation, request)?;
    let cube_time = start.elapsed();

    let mut engine = Engine::new(
        &cube,
        request.m,
        request.opts.guess_verify,
        &request.opts.variance_metric,
    )
    .phase(Phase::Cascade)?;
    let seg = segment(
        &mut engine,
        &SegmentOptions {
            k: request.k,
            k_max: request.k_max,
            sketching: request.opts.sketching,
            elbow: request.opts.elbow,
        },
    )
    .phase(Phase::Segmentation)?;

    let segments = seg
        .scheme
        .segments()
        .map(|(i, j)| segment_output(&cube, SegmentRef::of(i, j), engine.top(SegmentRef::of(i, j))))
        .collect();
    let grid = cube.grid();
    let out = EvolvingExplanations {
        version: RESULT_FORMAT_VERSION,
        k: seg.k,
        k_selection: match request.k {
            KChoice::Auto => KSelection::Auto,
            KChoice::Fixed(_) => KSelection::Fixed,
        },
        cuts: seg.scheme.interior().iter().map(|&c| grid[c]).collect(),
        cut_indices: seg.scheme.cuts.clone(),
        curve: seg.curve,
        objective: seg.objective,
        metric: engine.metric.id().to_string(),
        overall: cube.overall(),
        segments,
        stats: RunStats {
            n: cube.len(),
            explanations: enumerated,
            explanations_after_filter: cube.explanation_count(),
            segments_scored: engine.segments_scored,
            sketch_size: seg.sketch.as_ref().map(Vec::len),
        },
        timings_ms: Timings {
            // cube materialization counts as precomputation
            precompute: ms(engine.precompute + cube_time),
            ca: ms(engine.ca),
            segmentation: ms(engine.segmentation),
            total: ms(start.elapsed()),
        },
    };
    Ok(out)
}

fn segment_output(cube: &SeriesCube, seg: SegmentRef, top: &SegmentTop) -> SegmentOut {
    let dict = cube.explain_by();
    let explanations: Vec<ExplanationOut> = top
        .iter()
        .map(|&(e, signed)| {
            let ex = &cube.explanations()[e as usize];
            let tau = Effect::of(signed);
            ExplanationOut {
                predicates: ex
                    .predicates()
                    .iter()
                    .map(|p| PredicateOut {
                        attr: dict.attribute(p.attr).to_string(),
                        value: dict.value(p.attr, p.value).to_string(),
                    })
                    .collect(),
                label: ex.display(dict).to_string(),
                gamma: signed.abs(),
                tau,
                effect_sign: tau.sign(),
                series: (seg.start..=seg.end).map(|t| cube.value(e as usize, t)).collect(),
            }
        })
        .collect();
    SegmentOut {
        start: cube.grid()[seg.start],
        end: cube.grid()[seg.end],
        start_index: seg.start,
        end_index: seg.end,
        total_score: explanations.iter().map(|e| e.gamma).sum(),
        explanations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_choice_json() {
        assert_eq!(serde_json::from_str::<KChoice>("\"auto\"").unwrap(), KChoice::Auto);
        assert_eq!(serde_json::from_str::<KChoice>("4").unwrap(), KChoice::Fixed(4));
        assert_eq!(serde_json::from_str::<KChoice>("\"5\"").unwrap(), KChoice::Fixed(5));
        assert!(serde_json::from_str::<KChoice>("\"many\"").is_err());
        assert_eq!(serde_json::to_string(&KChoice::Fixed(3)).unwrap(), "3");
    }

    #[test]
    fn request_defaults() {
        let r: ExplainRequest =
            serde_json::from_str(r#"{"measure":"v","explain_by":["cat"]}"#).unwrap();
        assert_eq!(r.m, 3);
        assert_eq!(r.beta_max, 3);
        assert_eq!(r.k_max, 20);
        assert_eq!(r.opts.filter_ratio, 0.001);
        assert!(r.opts.guess_verify && r.opts.sketching);
        assert_eq!(r.opts.variance_metric, "tse");
        r.validate().unwrap();
        assert!(serde_json::from_str::<ExplainRequest>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn request_validation() {
        let ok = ExplainRequest {
            measure: Some("v".into()),
            explain_by: vec!["cat".into()],
            ..Default::default()
        };
        ok.validate().unwrap();
        for bad in [
            ExplainRequest { m: 0, ..ok.clone() },
            ExplainRequest { k: KChoice::Fixed(0), ..ok.clone() },
            ExplainRequest { explain_by: vec![], ..ok.clone() },
            ExplainRequest { measure: None, ..ok.clone() },
            ExplainRequest {
                opts: ExplainOptions { variance_metric: "x".into(), ..Default::default() },
                ..ok.clone()
            },
            ExplainRequest {
                opts: ExplainOptions { filter_ratio: 1.5, ..Default::default() },
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        let count = ExplainRequest { agg: AggFunction::Count, measure: None, ..ok };
        count.validate().unwrap();
    }
}

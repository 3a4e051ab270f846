//! Explanation-aware distance between segments and the within-segment variance
//! metrics built on it.
//!
//! A segment's unit objects are its adjacent point pairs `[x, x+1]`; its centroid
//! is the segment itself. Two segments are close when each one's top list,
//! re-scored on the other, ranks nearly as well as the other's own list.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::cascade::{SegmentTop, TopExplanations};
use crate::cube::SeriesCube;
use crate::diff::{AbsoluteChange, DiffMetric, Effect, SegmentRef};
use crate::error::{Error, Result};

/// Rank discount `1 / log2(r + 1)` for 1-based rank `r`.
#[inline]
fn discount(rank0: usize) -> f64 {
    1.0 / ((rank0 + 2) as f64).log2()
}

/// NDCG from rectified relevances in source-rank order and the target's ideal gains.
///
/// An ideal of zero means the target has nothing to explain: a source that also
/// explains nothing matches perfectly, anything else does not. The ratio is
/// clamped to 1 because a source list can out-score the target's own list once
/// rank discounts apply.
pub fn ndcg_score(rectified: impl IntoIterator<Item = f64>, ideal: impl IntoIterator<Item = f64>) -> f64 {
    let dcg: f64 = rectified
        .into_iter()
        .enumerate()
        .map(|(r, g)| g * discount(r))
        .sum();
    let idcg: f64 = ideal.into_iter().enumerate().map(|(r, g)| g * discount(r)).sum();
    ratio(dcg, idcg)
}

#[inline]
fn ratio(dcg: f64, idcg: f64) -> f64 {
    if idcg <= 0.0 {
        return if dcg <= 0.0 { 1.0 } else { 0.0 };
    }
    (dcg / idcg).min(1.0)
}

/// How well `source_top` (scored on its own segment) explains `target`, whose own
/// list is `target_top`.
pub fn ndcg(
    cube: &SeriesCube,
    target: SegmentRef,
    source_top: &TopExplanations,
    target_top: &TopExplanations,
) -> Result<f64> {
    if target.end >= cube.len() {
        return Err(Error::InvalidParameter("target segment outside the grid".into()));
    }
    let mut rect = Vec::with_capacity(source_top.ranked.len());
    for s in &source_top.ranked {
        let e = cube.index_of(&s.explanation).ok_or(Error::MissingExplanation)?;
        let on_target = AbsoluteChange.signed_score(cube, e, target);
        rect.push(if Effect::of(on_target) == s.tau {
            on_target.abs()
        } else {
            0.0
        });
    }
    Ok(ndcg_score(rect, target_top.ranked.iter().map(|s| s.gamma)))
}

/// A segment's top list in compact form with its ideal DCG.
#[derive(Debug, Clone, Default)]
pub struct TopList {
    pub items: SegmentTop,
    pub idcg: f64,
}

impl TopList {
    pub fn new(items: SegmentTop) -> TopList {
        let idcg = items
            .iter()
            .enumerate()
            .map(|(r, &(_, s))| s.abs() * discount(r))
            .sum();
        TopList { items, idcg }
    }
}

/// Top lists for a family of segments plus the cube to re-score them against.
pub struct DistanceContext<'a> {
    cube: &'a SeriesCube,
    n: usize,
    slot: Vec<u32>,
    tops: Vec<TopList>,
    objects: OnceLock<Vec<f64>>,
}

const NO_SLOT: u32 = u32::MAX;

impl<'a> DistanceContext<'a> {
    pub fn new(cube: &'a SeriesCube) -> DistanceContext<'a> {
        let n = cube.len();
        DistanceContext {
            cube,
            n,
            slot: vec![NO_SLOT; n * n],
            tops: Vec::new(),
            objects: OnceLock::new(),
        }
    }

    pub fn cube(&self) -> &'a SeriesCube {
        self.cube
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, seg: SegmentRef, items: SegmentTop) {
        let k = seg.start * self.n + seg.end;
        let list = TopList::new(items);
        if self.slot[k] == NO_SLOT {
            self.slot[k] = self.tops.len() as u32;
            self.tops.push(list);
        } else {
            self.tops[self.slot[k] as usize] = list;
        }
        if seg.is_unit() {
            self.objects = OnceLock::new();
        }
    }

    pub fn contains(&self, seg: SegmentRef) -> bool {
        self.slot[seg.start * self.n + seg.end] != NO_SLOT
    }

    /// Segments whose top list is still missing.
    pub fn missing<'s>(&'s self, family: &'s [SegmentRef]) -> impl Iterator<Item = SegmentRef> + 's {
        family.iter().copied().filter(|s| !self.contains(*s))
    }

    pub fn top(&self, seg: SegmentRef) -> &TopList {
        let k = self.slot[seg.start * self.n + seg.end];
        assert!(k != NO_SLOT, "top list of [{}, {}] not computed", seg.start, seg.end);
        &self.tops[k as usize]
    }

    /// NDCG of `source`'s top list on `target`.
    pub fn ndcg(&self, target: SegmentRef, source: SegmentRef) -> f64 {
        if target == source {
            return 1.0;
        }
        let src = self.top(source);
        let dcg: f64 = src
            .items
            .iter()
            .enumerate()
            .map(|(r, &(e, s_src))| {
                let s_tgt = AbsoluteChange.signed_score(self.cube, e as usize, target);
                if Effect::of(s_tgt) == Effect::of(s_src) {
                    s_tgt.abs() * discount(r)
                } else {
                    0.0
                }
            })
            .sum();
        ratio(dcg, self.top(target).idcg)
    }

    /// `1 − (NDCG(a, top b) + NDCG(b, top a)) / 2`; symmetric with `d(P, P) = 0`.
    pub fn distance(&self, a: SegmentRef, b: SegmentRef) -> f64 {
        if a == b {
            return 0.0;
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        1.0 - (self.ndcg(a, b) + self.ndcg(b, a)) / 2.0
    }

    /// Distances between every pair of unit objects, `n × n`, row `x` for `[x, x+1]`.
    fn object_distances(&self) -> &[f64] {
        self.objects.get_or_init(|| {
            let n = self.n;
            let rows: Vec<Vec<f64>> = (0..n.saturating_sub(1))
                .into_par_iter()
                .map(|x| {
                    let mut row = vec![0.0; n];
                    for (y, d) in row.iter_mut().enumerate().take(n - 1).skip(x + 1) {
                        *d = self.distance(SegmentRef::of(x, x + 1), SegmentRef::of(y, y + 1));
                    }
                    row
                })
                .collect();
            let mut out = vec![0.0; n * n];
            for (x, row) in rows.into_iter().enumerate() {
                for y in x + 1..n {
                    out[x * n + y] = row[y];
                    out[y * n + x] = row[y];
                }
            }
            out
        })
    }
}

/// A within-segment variance measure.
pub trait VarianceMetric: Send + Sync {
    fn id(&self) -> &'static str;

    /// Variance of `seg`, treating it as both the partition and its centroid.
    fn variance(&self, seg: SegmentRef, ctx: &DistanceContext<'_>) -> f64;
}

#[inline]
fn power(d: f64, squared: bool) -> f64 {
    if squared {
        d * d
    } else {
        d
    }
}

/// Mean distance between each unit object and the centroid.
pub struct Tse {
    pub squared: bool,
}

/// Mean `1 − NDCG(centroid, top(object))`: how well each object's list explains the segment.
pub struct Dist1 {
    pub squared: bool,
}

/// Mean `1 − NDCG(object, top(centroid))`: how well the segment's list explains each object.
pub struct Dist2 {
    pub squared: bool,
}

/// Mean distance over all unordered object pairs.
pub struct AllPair {
    pub squared: bool,
}

fn mean_over_objects(seg: SegmentRef, f: impl Fn(SegmentRef) -> f64) -> f64 {
    if seg.is_unit() {
        return 0.0;
    }
    seg.objects().map(f).sum::<f64>() / seg.len() as f64
}

impl VarianceMetric for Tse {
    fn id(&self) -> &'static str {
        if self.squared {
            "Stse"
        } else {
            "tse"
        }
    }

    fn variance(&self, seg: SegmentRef, ctx: &DistanceContext<'_>) -> f64 {
        mean_over_objects(seg, |o| power(ctx.distance(o, seg), self.squared))
    }
}

impl VarianceMetric for Dist1 {
    fn id(&self) -> &'static str {
        if self.squared {
            "Sdist1"
        } else {
            "dist1"
        }
    }

    fn variance(&self, seg: SegmentRef, ctx: &DistanceContext<'_>) -> f64 {
        mean_over_objects(seg, |o| power(1.0 - ctx.ndcg(seg, o), self.squared))
    }
}

impl VarianceMetric for Dist2 {
    fn id(&self) -> &'static str {
        if self.squared {
            "Sdist2"
        } else {
            "dist2"
        }
    }

    fn variance(&self, seg: SegmentRef, ctx: &DistanceContext<'_>) -> f64 {
        mean_over_objects(seg, |o| power(1.0 - ctx.ndcg(o, seg), self.squared))
    }
}

impl VarianceMetric for AllPair {
    fn id(&self) -> &'static str {
        if self.squared {
            "Sallpair"
        } else {
            "allpair"
        }
    }

    fn variance(&self, seg: SegmentRef, ctx: &DistanceContext<'_>) -> f64 {
        let len = seg.len();
        if len < 2 {
            return 0.0;
        }
        let d = ctx.object_distances();
        let n = ctx.n();
        let mut total = 0.0;
        for x in seg.start..seg.end {
            for y in x + 1..seg.end {
                total += power(d[x * n + y], self.squared);
            }
        }
        total / (len * (len - 1) / 2) as f64
    }
}

pub const DEFAULT_METRIC: &str = "tse";

/// Variance metrics selectable by id.
pub struct MetricRegistry {
    metrics: BTreeMap<String, Box<dyn VarianceMetric>>,
    order: Vec<String>,
}

impl MetricRegistry {
    pub fn empty() -> MetricRegistry {
        MetricRegistry {
            metrics: BTreeMap::new(),
            order: Vec::new(),
        }
    }

    /// The eight built-in metrics.
    pub fn builtin() -> MetricRegistry {
        let mut r = MetricRegistry::empty();
        for squared in [false, true] {
            r.register(Box::new(Tse { squared }));
            r.register(Box::new(Dist1 { squared }));
            r.register(Box::new(Dist2 { squared }));
            r.register(Box::new(AllPair { squared }));
        }
        r
    }

    pub fn register(&mut self, metric: Box<dyn VarianceMetric>) {
        let id = metric.id().to_string();
        if self.metrics.insert(id.clone(), metric).is_none() {
            self.order.push(id);
        }
    }

    /// Look up by id; ids match case-insensitively.
    pub fn get(&self, id: &str) -> Result<&dyn VarianceMetric> {
        if let Some(m) = self.metrics.get(id) {
            return Ok(m.as_ref());
        }
        self.metrics
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(id))
            .map(|(_, m)| m.as_ref())
            .ok_or_else(|| Error::UnknownMetric(id.to_string()))
    }

    /// Ids in registration order.
    pub fn ids(&self) -> &[String] {
        &self.order
    }
}

pub fn builtin_metric(id: &str) -> Result<Box<dyn VarianceMetric>> {
    let squared = id.len() > 1 && id.starts_with(['S', 's']) && !id.eq_ignore_ascii_case("s");
    let base = if squared { &id[1..] } else { id };
    let metric: Box<dyn VarianceMetric> = match base.to_ascii_lowercase().as_str() {
        "tse" => Box::new(Tse { squared }),
        "dist1" => Box::new(Dist1 { squared }),
        "dist2" => Box::new(Dist2 { squared }),
        "allpair" => Box::new(AllPair { squared }),
        _ => return Err(Error::UnknownMetric(id.to_string())),
    };
    Ok(metric)
}

/// Variances on a dense `n × n` grid; entries outside the computed family are NaN.
#[derive(Debug, Clone)]
pub struct VarianceTable {
    n: usize,
    values: Vec<f64>,
}

impl VarianceTable {
    pub fn new(n: usize) -> VarianceTable {
        VarianceTable {
            n,
            values: vec![f64::NAN; n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> VarianceTable {
        let mut t = VarianceTable::new(n);
        for i in 0..n {
            for j in i + 1..n {
                t.values[i * n + j] = f(i, j);
            }
        }
        t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn set(&mut self, seg: SegmentRef, v: f64) {
        self.values[seg.start * self.n + seg.end] = v;
    }

    pub fn is_set(&self, seg: SegmentRef) -> bool {
        !self.values[seg.start * self.n + seg.end].is_nan()
    }

    /// Fill in the variance of every segment in `family`, in parallel.
    pub fn fill(&mut self, family: &[SegmentRef], metric: &dyn VarianceMetric, ctx: &DistanceContext<'_>) {
        let todo: Vec<SegmentRef> = family.iter().copied().filter(|s| !self.is_set(*s)).collect();
        let vals: Vec<f64> = todo.par_iter().map(|&s| metric.variance(s, ctx)).collect();
        for (s, v) in todo.into_iter().zip(vals) {
            self.set(s, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_ndcg() {
        // target list [4, 2]; source re-scored on target: E2 keeps its effect, E3 flips
        let v = ndcg_score([2.0, 0.0], [4.0, 2.0]);
        let idcg = 4.0 + 2.0 / 3f64.log2();
        assert!((idcg - 5.2619).abs() < 1e-4);
        assert!((v - 2.0 / idcg).abs() < 1e-12);
        assert!((v - 0.3801).abs() < 1e-4);
    }

    #[test]
    fn degenerate_ideal() {
        assert_eq!(ndcg_score([0.0], [0.0]), 1.0);
        assert_eq!(ndcg_score(std::iter::empty(), std::iter::empty()), 1.0);
        assert_eq!(ndcg_score([1.0], std::iter::empty()), 0.0);
        assert_eq!(ndcg_score([0.0, 0.0], [3.0]), 0.0);
        // a discounted source can beat the ideal ordering
        assert_eq!(ndcg_score([5.0, 0.9], [3.0, 3.0]), 1.0);
    }

    #[test]
    fn registry() {
        let r = MetricRegistry::builtin();
        assert_eq!(r.ids().len(), 8);
        assert_eq!(r.get("tse").unwrap().id(), "tse");
        assert_eq!(r.get("sallpair").unwrap().id(), "Sallpair");
        assert!(matches!(r.get("nope"), Err(Error::UnknownMetric(_))));
        for id in r.ids() {
            assert_eq!(builtin_metric(id).unwrap().id(), id);
        }
        assert!(builtin_metric("S").is_err());
    }
}

//! The series cube: the overall aggregated series plus one series per candidate
//! explanation, all on the same timestamp grid.
//!
//! Values are kept as decomposed parts (a sum, plus a row count for AVG) in a
//! time-major layout so that scoring every explanation on one segment reads two
//! contiguous rows.

use std::collections::HashMap;
use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explanation::{ExplainBy, Explanation, ExplanationCatalog};
use crate::relation::{AttributeKind, Relation, TimeValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFunction {
    Sum,
    Count,
    Avg,
}

impl fmt::Display for AggFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggFunction::Sum => "sum",
            AggFunction::Count => "count",
            AggFunction::Avg => "avg",
        })
    }
}

impl std::str::FromStr for AggFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(AggFunction::Sum),
            "count" => Ok(AggFunction::Count),
            "avg" | "mean" => Ok(AggFunction::Avg),
            other => Err(Error::InvalidParameter(format!(
                "unknown aggregate {other:?} (expected sum, count or avg)"
            ))),
        }
    }
}

/// `f(M)`: the aggregate function and the measure it reads. COUNT needs no measure.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AggSpec {
    pub measure: Option<String>,
    pub function: AggFunction,
}

impl AggSpec {
    pub fn sum(measure: &str) -> Self {
        AggSpec {
            measure: Some(measure.to_string()),
            function: AggFunction::Sum,
        }
    }

    pub fn count() -> Self {
        AggSpec {
            measure: None,
            function: AggFunction::Count,
        }
    }

    pub fn avg(measure: &str) -> Self {
        AggSpec {
            measure: Some(measure.to_string()),
            function: AggFunction::Avg,
        }
    }

    /// Combine decomposed parts into the aggregate value. An empty AVG group is 0.
    #[inline]
    pub fn value(&self, sum: f64, count: f64) -> f64 {
        match self.function {
            AggFunction::Sum | AggFunction::Count => sum,
            AggFunction::Avg => {
                if count == 0.0 {
                    0.0
                } else {
                    sum / count
                }
            }
        }
    }
}

/// An aggregated time series on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub timestamps: Vec<TimeValue>,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(timestamps: Vec<TimeValue>, values: Vec<f64>) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::GridMismatch);
        }
        if timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "timestamps must be strictly increasing".into(),
            ));
        }
        Ok(Series { timestamps, values })
    }

    /// Series on an integer grid `0..values.len()`.
    pub fn indexed(values: Vec<f64>) -> Self {
        Series {
            timestamps: (0..values.len() as i64).map(TimeValue::Int).collect(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Pointwise `overall ⊖ part`: the series of `R − σ_E R`.
///
/// Only SUM and COUNT can be complemented from values alone; AVG needs the
/// decomposed parts, see [`SeriesCube::complement`].
pub fn complement_series(overall: &Series, part: &Series, agg: &AggSpec) -> Result<Series> {
    if overall.timestamps != part.timestamps {
        return Err(Error::GridMismatch);
    }
    match agg.function {
        AggFunction::Sum | AggFunction::Count => Ok(Series {
            timestamps: overall.timestamps.clone(),
            values: overall
                .values
                .iter()
                .zip(&part.values)
                .map(|(o, p)| o - p)
                .collect(),
        }),
        AggFunction::Avg => Err(Error::InvalidParameter(
            "AVG complements need sum and count parts; use SeriesCube::complement".into(),
        )),
    }
}

/// Centered moving average; the window shrinks at the boundaries.
pub fn smooth(series: &Series, window: usize) -> Result<Series> {
    Ok(Series {
        timestamps: series.timestamps.clone(),
        values: smooth_values(&series.values, window)?,
    })
}

pub(crate) fn smooth_values(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidParameter("smoothing window must be ≥ 1".into()));
    }
    if window > values.len() {
        return Err(Error::InvalidParameter(format!(
            "smoothing window {window} exceeds series length {}",
            values.len()
        )));
    }
    if window == 1 {
        return Ok(values.to_vec());
    }
    let left = (window - 1) / 2;
    let right = window - 1 - left;
    let n = values.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, v) in values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right).min(n - 1);
            // exact for constant input: average the raw values when the window is small
            if hi - lo < 64 {
                values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
            } else {
                (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1) as f64
            }
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct SeriesCube {
    grid: Vec<TimeValue>,
    agg: AggSpec,
    explain_by: ExplainBy,
    explanations: Vec<Explanation>,
    index: HashMap<Explanation, usize>,
    overall_sum: Vec<f64>,
    overall_count: Option<Vec<f64>>,
    /// time-major: `sums[t * ε + e]`
    sums: Vec<f64>,
    counts: Option<Vec<f64>>,
}

impl SeriesCube {
    fn assemble(
        grid: Vec<TimeValue>,
        agg: AggSpec,
        explain_by: ExplainBy,
        explanations: Vec<Explanation>,
        overall_sum: Vec<f64>,
        overall_count: Option<Vec<f64>>,
        sums: Vec<f64>,
        counts: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = grid.len();
        let eps = explanations.len();
        if overall_sum.len() != n
            || sums.len() != n * eps
            || overall_count.as_ref().is_some_and(|c| c.len() != n)
            || counts.as_ref().is_some_and(|c| c.len() != n * eps)
        {
            return Err(Error::GridMismatch);
        }
        if (agg.function == AggFunction::Avg) != overall_count.is_some()
            || overall_count.is_some() != counts.is_some()
        {
            return Err(Error::InvalidParameter(
                "count parts must be present exactly for AVG".into(),
            ));
        }
        if let Some(c) = &overall_count {
            if let Some(t) = c.iter().position(|&v| v == 0.0) {
                return Err(Error::AvgZeroCount {
                    timestamp: grid[t].to_string(),
                });
            }
        }
        let index = explanations
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Ok(SeriesCube {
            grid,
            agg,
            explain_by,
            explanations,
            index,
            overall_sum,
            overall_count,
            sums,
            counts,
        })
    }

    pub fn grid(&self) -> &[TimeValue] {
        &self.grid
    }

    /// Number of timestamps, `n`.
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn agg(&self) -> &AggSpec {
        &self.agg
    }

    pub fn explain_by(&self) -> &ExplainBy {
        &self.explain_by
    }

    pub fn explanations(&self) -> &[Explanation] {
        &self.explanations
    }

    /// Number of candidate explanations, `ε`.
    pub fn explanation_count(&self) -> usize {
        self.explanations.len()
    }

    pub fn index_of(&self, e: &Explanation) -> Option<usize> {
        self.index.get(e).copied()
    }

    #[inline]
    pub(crate) fn overall_parts(&self, t: usize) -> (f64, f64) {
        (
            self.overall_sum[t],
            self.overall_count.as_ref().map_or(0.0, |c| c[t]),
        )
    }

    /// Sum row and optional count row of every explanation at timestamp `t`.
    #[inline]
    pub(crate) fn parts_row(&self, t: usize) -> (&[f64], Option<&[f64]>) {
        let eps = self.explanations.len();
        (
            &self.sums[t * eps..(t + 1) * eps],
            self.counts.as_ref().map(|c| &c[t * eps..(t + 1) * eps]),
        )
    }

    #[inline]
    pub(crate) fn parts(&self, e: usize, t: usize) -> (f64, f64) {
        let k = t * self.explanations.len() + e;
        (self.sums[k], self.counts.as_ref().map_or(0.0, |c| c[k]))
    }

    pub fn overall_value(&self, t: usize) -> f64 {
        let (s, c) = self.overall_parts(t);
        self.agg.value(s, c)
    }

    pub fn value(&self, e: usize, t: usize) -> f64 {
        let (s, c) = self.parts(e, t);
        self.agg.value(s, c)
    }

    pub fn overall(&self) -> Series {
        Series {
            timestamps: self.grid.clone(),
            values: (0..self.len()).map(|t| self.overall_value(t)).collect(),
        }
    }

    pub fn series(&self, e: usize) -> Series {
        Series {
            timestamps: self.grid.clone(),
            values: (0..self.len()).map(|t| self.value(e, t)).collect(),
        }
    }

    /// Series of `R − σ_E R`, combining decomposed parts.
    pub fn complement(&self, e: usize) -> Series {
        Series {
            timestamps: self.grid.clone(),
            values: (0..self.len())
                .map(|t| {
                    let (os, oc) = self.overall_parts(t);
                    let (s, c) = self.parts(e, t);
                    self.agg.value(os - s, oc - c)
                })
                .collect(),
        }
    }

    /// Apply a centered moving average to every decomposed part.
    pub fn smoothed(&self, window: usize) -> Result<SeriesCube> {
        if window == 1 {
            return Ok(self.clone());
        }
        let n = self.len();
        let eps = self.explanation_count();
        let smooth_major = |data: &[f64]| -> Result<Vec<f64>> {
            let mut out = vec![0.0; data.len()];
            let mut column = vec![0.0; n];
            for e in 0..eps {
                for t in 0..n {
                    column[t] = data[t * eps + e];
                }
                for (t, v) in smooth_values(&column, window)?.into_iter().enumerate() {
                    out[t * eps + e] = v;
                }
            }
            Ok(out)
        };
        SeriesCube::assemble(
            self.grid.clone(),
            self.agg.clone(),
            self.explain_by.clone(),
            self.explanations.clone(),
            smooth_values(&self.overall_sum, window)?,
            self.overall_count
                .as_ref()
                .map(|c| smooth_values(c, window))
                .transpose()?,
            smooth_major(&self.sums)?,
            self.counts.as_ref().map(|c| smooth_major(c)).transpose()?,
        )
    }

    /// Keep only the explanations at `keep` (indices into the current list).
    pub fn select(&self, keep: &[usize]) -> SeriesCube {
        let n = self.len();
        let eps = self.explanation_count();
        let gather = |data: &[f64]| -> Vec<f64> {
            let mut out = Vec::with_capacity(n * keep.len());
            for t in 0..n {
                out.extend(keep.iter().map(|&e| data[t * eps + e]));
            }
            out
        };
        SeriesCube::assemble(
            self.grid.clone(),
            self.agg.clone(),
            self.explain_by.clone(),
            keep.iter().map(|&e| self.explanations[e].clone()).collect(),
            self.overall_sum.clone(),
            self.overall_count.clone(),
            gather(&self.sums),
            self.counts.as_ref().map(|c| gather(c)),
        )
        .expect("subset of a valid cube is valid")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<SeriesCube> {
        let doc: CubeDocument = serde_json::from_str(text)?;
        SeriesCube::from_document(doc)
    }

    pub fn to_document(&self) -> CubeDocument {
        CubeDocument {
            version: CUBE_FORMAT_VERSION,
            agg: self.agg.clone(),
            grid: self.grid.clone(),
            explain_by: self.explain_by.clone(),
            overall_sum: self.overall_sum.clone(),
            overall_count: self.overall_count.clone(),
            explanations: (0..self.explanation_count())
                .map(|e| CubeEntry {
                    predicates: self.explanations[e]
                        .predicates()
                        .iter()
                        .map(|p| (p.attr, p.value))
                        .collect(),
                    sum: (0..self.len()).map(|t| self.parts(e, t).0).collect(),
                    count: self
                        .counts
                        .as_ref()
                        .map(|_| (0..self.len()).map(|t| self.parts(e, t).1).collect()),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: CubeDocument) -> Result<SeriesCube> {
        if doc.version != CUBE_FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported cube format version {}",
                doc.version
            )));
        }
        let n = doc.grid.len();
        let eps = doc.explanations.len();
        let avg = doc.agg.function == AggFunction::Avg;
        let mut sums = vec![0.0; n * eps];
        let mut counts = avg.then(|| vec![0.0; n * eps]);
        let mut explanations = Vec::with_capacity(eps);
        for (e, entry) in doc.explanations.into_iter().enumerate() {
            if entry.sum.len() != n || entry.count.as_ref().is_some_and(|c| c.len() != n) {
                return Err(Error::GridMismatch);
            }
            for (t, v) in entry.sum.iter().enumerate() {
                sums[t * eps + e] = *v;
            }
            if let Some(counts) = counts.as_mut() {
                let c = entry.count.ok_or(Error::GridMismatch)?;
                for (t, v) in c.iter().enumerate() {
                    counts[t * eps + e] = *v;
                }
            }
            let ex = Explanation::new(
                entry
                    .predicates
                    .into_iter()
                    .map(|(attr, value)| crate::explanation::Predicate { attr, value })
                    .collect(),
            )?;
            for p in ex.predicates() {
                if p.attr as usize >= doc.explain_by.len()
                    || p.value as usize >= doc.explain_by.values(p.attr).len()
                {
                    return Err(Error::InvalidParameter(
                        "cube predicate outside its dictionary".into(),
                    ));
                }
            }
            explanations.push(ex);
        }
        SeriesCube::assemble(
            doc.grid,
            doc.agg,
            doc.explain_by,
            explanations,
            doc.overall_sum,
            doc.overall_count,
            sums,
            counts,
        )
    }
}

pub const CUBE_FORMAT_VERSION: u32 = 1;

/// Serialized cube. Explanations are stored as `[attr, value]` code pairs into
/// `explain_by`; value arrays follow `grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeDocument {
    pub version: u32,
    pub agg: AggSpec,
    pub grid: Vec<TimeValue>,
    pub explain_by: ExplainBy,
    pub overall_sum: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_count: Option<Vec<f64>>,
    pub explanations: Vec<CubeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeEntry {
    pub predicates: Vec<(u16, u32)>,
    pub sum: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<Vec<f64>>,
}

/// Run the group-by-time aggregate for the whole relation and for every
/// explanation in `catalog`. Groups without rows are filled with 0.
pub fn materialize_cube(
    relation: &Relation,
    agg: &AggSpec,
    catalog: &ExplanationCatalog,
    window: Option<&RangeInclusive<TimeValue>>,
) -> Result<SeriesCube> {
    if catalog.row_codes.first().map_or(0, Vec::len) != relation.row_count() {
        return Err(Error::InvalidParameter(
            "explanation catalog was built from a different relation".into(),
        ));
    }
    let measure: Option<&[f64]> = match (agg.function, &agg.measure) {
        (AggFunction::Count, _) => None,
        (_, None) => {
            return Err(Error::InvalidParameter(format!(
                "{} requires a measure",
                agg.function
            )))
        }
        (_, Some(name)) => {
            let (idx, attr) = relation.attribute(name)?;
            if attr.kind == AttributeKind::Time {
                return Err(Error::InvalidParameter(format!(
                    "time attribute {name:?} cannot be aggregated"
                )));
            }
            Some(relation.column_at(idx).numeric().ok_or_else(|| {
                Error::InvalidParameter(format!("measure {name:?} is not numeric"))
            })?)
        }
    };

    let times = relation.times();
    let in_window = |t: &TimeValue| window.is_none_or(|w| w.contains(t));
    let grid: Vec<TimeValue> = relation
        .distinct_times()
        .into_iter()
        .filter(|t| in_window(t))
        .collect();
    if grid.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let slot: HashMap<TimeValue, usize> = grid.iter().enumerate().map(|(i, t)| (*t, i)).collect();

    let n = grid.len();
    let eps = catalog.len();
    let avg = agg.function == AggFunction::Avg;
    let mut overall_sum = vec![0.0; n];
    let mut overall_count = avg.then(|| vec![0.0; n]);
    let mut sums = vec![0.0; n * eps];
    let mut counts = avg.then(|| vec![0.0; n * eps]);

    for (r, t) in times.iter().enumerate() {
        let Some(&t) = slot.get(t) else { continue };
        let v = measure.map_or(1.0, |m| m[r]);
        overall_sum[t] += v;
        if let Some(c) = overall_count.as_mut() {
            c[t] += 1.0;
        }
        let row = t * eps;
        for block in &catalog.blocks {
            let mut idx = 0usize;
            for (&a, &radix) in block.attrs.iter().zip(&block.radices) {
                idx = idx * radix + catalog.row_codes[a as usize][r] as usize;
            }
            let k = row + block.offset + idx;
            sums[k] += v;
            if let Some(c) = counts.as_mut() {
                c[k] += 1.0;
            }
        }
    }

    SeriesCube::assemble(
        grid,
        agg.clone(),
        catalog.explain_by.clone(),
        catalog.explanations().to_vec(),
        overall_sum,
        overall_count,
        sums,
        counts,
    )
}

/// Drop low-support explanations: `E` goes iff `|E[t]| < ratio·|overall[t]|` at every `t`.
///
/// For AVG, support is measured on row counts rather than averages.
pub fn filter_explanations(cube: &SeriesCube, ratio: f64) -> Result<SeriesCube> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::InvalidParameter(format!(
            "filter ratio must be in [0, 1), got {ratio}"
        )));
    }
    let n = cube.len();
    let eps = cube.explanation_count();
    let mut keep = vec![false; eps];
    for t in 0..n {
        let (sums, counts) = cube.parts_row(t);
        let (os, oc) = cube.overall_parts(t);
        let (row, total) = match counts {
            Some(c) => (c, oc),
            None => (sums, os),
        };
        let bound = ratio * total.abs();
        for (k, v) in keep.iter_mut().zip(row) {
            if !*k && v.abs() >= bound {
                *k = true;
            }
        }
    }
    let keep: Vec<usize> = (0..eps).filter(|&e| keep[e]).collect();
    Ok(cube.select(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explanation::enumerate_explanations;
    use crate::relation::load_csv;

    pub(crate) fn tiny() -> (Relation, ExplanationCatalog) {
        let rel = load_csv(
            "t,cat,v\n1,a,10\n1,b,5\n2,a,30\n2,b,6\n".as_bytes(),
            "t",
            &HashMap::new(),
        )
        .unwrap();
        let cat = enumerate_explanations(&rel, &["cat".to_string()], 3).unwrap();
        (rel, cat)
    }

    #[test]
    fn sum_cube_by_hand() {
        let (rel, cat) = tiny();
        let cube = materialize_cube(&rel, &AggSpec::sum("v"), &cat, None).unwrap();
        assert_eq!(cube.overall().values, vec![15.0, 36.0]);
        let a = cube.explain_by().resolve(&[("cat", "a")]).unwrap();
        let b = cube.explain_by().resolve(&[("cat", "b")]).unwrap();
        assert_eq!(cube.series(cube.index_of(&a).unwrap()).values, vec![10.0, 30.0]);
        assert_eq!(cube.series(cube.index_of(&b).unwrap()).values, vec![5.0, 6.0]);
    }

    #[test]
    fn count_cube() {
        let (rel, cat) = tiny();
        let cube = materialize_cube(&rel, &AggSpec::count(), &cat, None).unwrap();
        assert_eq!(cube.overall().values, vec![2.0, 2.0]);
    }

    #[test]
    fn avg_cube_and_complement() {
        let (rel, cat) = tiny();
        let cube = materialize_cube(&rel, &AggSpec::avg("v"), &cat, None).unwrap();
        assert_eq!(cube.overall().values, vec![7.5, 18.0]);
        assert_eq!(cube.series(0).values, vec![10.0, 30.0]);
        // removing cat=a leaves only cat=b rows
        assert_eq!(cube.complement(0).values, vec![5.0, 6.0]);
    }

    #[test]
    fn missing_groups_fill_zero() {
        let rel = load_csv(
            "t,cat,v\n1,a,10\n2,a,30\n3,b,6\n".as_bytes(),
            "t",
            &HashMap::new(),
        )
        .unwrap();
        let cat = enumerate_explanations(&rel, &["cat".to_string()], 1).unwrap();
        let cube = materialize_cube(&rel, &AggSpec::sum("v"), &cat, None).unwrap();
        assert_eq!(cube.series(1).values, vec![0.0, 0.0, 6.0]);
        // a combination that never occurs is all zero too
        let rel2 = load_csv(
            "t,x,y,v\n1,p,q,1\n2,r,s,1\n".as_bytes(),
            "t",
            &HashMap::new(),
        )
        .unwrap();
        let cat2 = enumerate_explanations(&rel2, &["x".into(), "y".into()], 2).unwrap();
        let cube2 = materialize_cube(&rel2, &AggSpec::count(), &cat2, None).unwrap();
        let never = cube2.explain_by().resolve(&[("x", "p"), ("y", "s")]).unwrap();
        assert_eq!(cube2.series(cube2.index_of(&never).unwrap()).values, vec![0.0, 0.0]);
    }

    #[test]
    fn window_and_errors() {
        let (rel, cat) = tiny();
        let w = TimeValue::Int(2)..=TimeValue::Int(2);
        let cube = materialize_cube(&rel, &AggSpec::sum("v"), &cat, Some(&w)).unwrap();
        assert_eq!(cube.overall().values, vec![36.0]);
        let w = TimeValue::Int(5)..=TimeValue::Int(6);
        assert!(matches!(
            materialize_cube(&rel, &AggSpec::sum("v"), &cat, Some(&w)),
            Err(Error::EmptyWindow)
        ));
        assert!(matches!(
            materialize_cube(&rel, &AggSpec::sum("nope"), &cat, None),
            Err(Error::UnknownAttribute(_))
        ));
        assert!(materialize_cube(&rel, &AggSpec::sum("cat"), &cat, None).is_err());
    }

    #[test]
    fn complement_by_hand() {
        let overall = Series::indexed(vec![15.0, 36.0]);
        let part = Series::indexed(vec![10.0, 30.0]);
        let agg = AggSpec::sum("v");
        assert_eq!(
            complement_series(&overall, &part, &agg).unwrap().values,
            vec![5.0, 6.0]
        );
        assert_eq!(
            complement_series(&overall, &overall, &agg).unwrap().values,
            vec![0.0, 0.0]
        );
        let zero = Series::indexed(vec![0.0, 0.0]);
        assert_eq!(complement_series(&overall, &zero, &agg).unwrap(), overall);
        let short = Series::indexed(vec![1.0]);
        assert!(matches!(
            complement_series(&overall, &short, &agg),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn smoothing() {
        let s = Series::indexed(vec![1.0, 2.0, 3.0]);
        assert_eq!(smooth(&s, 1).unwrap(), s);
        let s = Series::indexed(vec![0.0, 3.0, 0.0]);
        assert_eq!(smooth(&s, 3).unwrap().values, vec![1.5, 1.0, 1.5]);
        let c = Series::indexed(vec![4.2; 7]);
        for w in 1..=7 {
            assert_eq!(smooth(&c, w).unwrap().values, c.values);
        }
        assert!(smooth(&s, 4).is_err());
        assert!(smooth(&s, 0).is_err());
    }

    #[test]
    fn filter_rule() {
        let rel = load_csv(
            "t,cat,v\n1,a,1000\n1,b,1\n2,a,1000\n2,b,0\n3,a,1000\n3,b,2\n".as_bytes(),
            "t",
            &HashMap::new(),
        )
        .unwrap();
        let cat = enumerate_explanations(&rel, &["cat".to_string()], 1).unwrap();
        let cube = materialize_cube(&rel, &AggSpec::sum("v"), &cat, None).unwrap();
        assert_eq!(filter_explanations(&cube, 0.0).unwrap().explanation_count(), 2);
        // b is below 1% everywhere
        let f = filter_explanations(&cube, 0.01).unwrap();
        assert_eq!(f.explanation_count(), 1);
        assert_eq!(f.overall(), cube.overall());
        // one timestamp at or above the bound keeps it: 2 >= 0.002 * 1002
        assert_eq!(filter_explanations(&cube, 0.001).unwrap().explanation_count(), 2);
        assert!(filter_explanations(&cube, 1.0).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (rel, cat) = tiny();
        for agg in [AggSpec::sum("v"), AggSpec::avg("v"), AggSpec::count()] {
            let cube = materialize_cube(&rel, &agg, &cat, None).unwrap();
            let text = cube.to_json().unwrap();
            let back = SeriesCube::from_json(&text).unwrap();
            assert_eq!(back.to_document(), cube.to_document());
            assert_eq!(back.to_json().unwrap(), text);
        }
    }
}

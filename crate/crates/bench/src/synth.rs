//! Ground-truthed synthetic datasets.
//!
//! Every category follows a piecewise-linear series whose adjacent pieces
//! alternate between rising and falling. The aggregate's true cuts are the
//! union of the category cuts, which keeps each of them necessary.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use evolex_core::cube::{CubeDocument, CubeEntry};
use evolex_core::{AggSpec, ExplainBy, Relation, SegmentationScheme, SeriesCube, TimeValue};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const TIME_ATTR: &str = "T";
pub const MEASURE: &str = "sales";
pub const CATEGORY: &str = "category";

/// Shortest distance between two truth cuts, or a cut and an endpoint.
pub const MIN_SEGMENT: usize = 6;
pub const MAX_CUTS_PER_CATEGORY: usize = 3;
/// Per-piece slope magnitudes are drawn from this range (rows per step).
pub const SLOPE_RANGE: std::ops::RangeInclusive<i64> = 1..=5;
/// The lowest point of each clean category series lands in this range.
pub const FLOOR_RANGE: std::ops::RangeInclusive<i64> = 20..=60;
const MAX_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n: usize,
    pub categories: usize,
    /// `None` disables noise.
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub datasets_per_level: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n: 100,
            categories: 3,
            snr_db: None,
            seed: 0,
            datasets_per_level: 20,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(BenchError::InvalidSpec(format!("n = {} is below 10", self.n)));
        }
        if self.categories < 2 {
            return Err(BenchError::InvalidSpec(format!(
                "{} categories, need at least 2",
                self.categories
            )));
        }
        if let Some(s) = self.snr_db {
            if !s.is_finite() {
                return Err(BenchError::InvalidSpec(format!("snr_db {s} is not finite")));
            }
        }
        Ok(())
    }

    fn min_segment(&self) -> usize {
        MIN_SEGMENT.min((self.n - 1) / 4).max(2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Interior cut positions, sorted.
    pub cuts: Vec<usize>,
    pub per_category_cuts: Vec<Vec<usize>>,
    pub k: usize,
}

impl GroundTruth {
    pub fn from_category_cuts(per_category_cuts: Vec<Vec<usize>>) -> GroundTruth {
        let mut cuts: Vec<usize> = per_category_cuts.iter().flatten().copied().collect();
        cuts.sort_unstable();
        cuts.dedup();
        GroundTruth {
            k: cuts.len() + 1,
            cuts,
            per_category_cuts,
        }
    }

    pub fn scheme(&self, n: usize) -> Result<SegmentationScheme> {
        Ok(SegmentationScheme::from_interior(&self.cuts, n)?)
    }
}

/// Sidecar written next to an exported dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub cuts: Vec<usize>,
    pub per_category_cuts: BTreeMap<String, Vec<usize>>,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub spec: SyntheticSpec,
    pub names: Vec<String>,
    /// Noise-free category series.
    pub clean: Vec<Vec<f64>>,
    /// Non-negative integer counts after noise; these become rows.
    pub counts: Vec<Vec<f64>>,
    pub truth: GroundTruth,
}

/// Mix a stream id into a seed so that derived streams are independent.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Add i.i.d. Gaussian noise so that `10·log10(var(series) / σ²) = snr_db`.
///
/// `+∞` returns the series unchanged.
pub fn add_noise(series: &[f64], snr_db: f64, seed: u64) -> Result<Vec<f64>> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(BenchError::InvalidParameter(format!("snr_db {snr_db}")));
    }
    if snr_db == f64::INFINITY {
        return Ok(series.to_vec());
    }
    let power = signal_power(series);
    if power == 0.0 {
        return Err(BenchError::ConstantSeries);
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(series.iter().map(|v| v + normal.sample(&mut rng)).collect())
}

/// Mean squared deviation from the mean.
pub fn signal_power(series: &[f64]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / series.len() as f64
}

fn category_names(k: usize) -> Vec<String> {
    let width = k.to_string().len();
    (1..=k).map(|i| format!("a{i:0width$}")).collect()
}

/// Draw every category's cuts so that the union keeps `min_seg` spacing.
fn draw_cuts(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    let n = spec.n;
    let gap = spec.min_segment();
    'attempt: for _ in 0..MAX_ATTEMPTS {
        let mut union: Vec<usize> = Vec::new();
        let mut per = Vec::with_capacity(spec.categories);
        for _ in 0..spec.categories {
            let want = rng.random_range(1..=MAX_CUTS_PER_CATEGORY);
            let mut mine = Vec::with_capacity(want);
            for _ in 0..want {
                let free: Vec<usize> = (gap..=n - 1 - gap)
                    .filter(|p| union.iter().all(|u| u.abs_diff(*p) >= gap))
                    .collect();
                if free.is_empty() {
                    continue 'attempt;
                }
                let p = free[rng.random_range(0..free.len())];
                union.push(p);
                mine.push(p);
            }
            mine.sort_unstable();
            per.push(mine);
        }
        return Ok(per);
    }
    Err(BenchError::CutPlacement(MAX_ATTEMPTS))
}

/// Piecewise-linear integer series with alternating directions.
fn piecewise(n: usize, cuts: &[usize], rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<i64>) {
    let mut dir: i64 = if rng.random_bool(0.5) { 1 } else { -1 };
    let mut bounds = vec![0];
    bounds.extend_from_slice(cuts);
    bounds.push(n - 1);
    let mut slopes = Vec::with_capacity(bounds.len() - 1);
    let mut values = vec![0i64; n];
    for w in bounds.windows(2) {
        let slope = dir * rng.random_range(SLOPE_RANGE);
        for t in w[0] + 1..=w[1] {
            values[t] = values[t - 1] + slope;
        }
        slopes.push(slope);
        dir = -dir;
    }
    let floor = rng.random_range(FLOOR_RANGE);
    let lowest = *values.iter().min().expect("n > 0");
    let series = values.iter().map(|v| (v - lowest + floor) as f64).collect();
    (series, slopes)
}

/// Slope of category `c` over truth segment `(a, b)`; every truth segment lies inside one piece.
fn slope_on(cuts: &[usize], slopes: &[i64], a: usize) -> i64 {
    slopes[cuts.iter().filter(|&&c| c <= a).count()]
}

fn assert_minimal(truth: &GroundTruth, slopes: &[Vec<i64>], n: usize) {
    let mut bounds = vec![0];
    bounds.extend_from_slice(&truth.cuts);
    bounds.push(n - 1);
    for w in bounds.windows(3) {
        let differs = truth
            .per_category_cuts
            .iter()
            .zip(slopes)
            .any(|(cuts, s)| slope_on(cuts, s, w[0]).signum() != slope_on(cuts, s, w[1]).signum());
        assert!(differs, "truth cut {} is not necessary", w[1]);
    }
}

/// Generate one dataset. The clean component depends only on `spec.seed`;
/// the noise additionally depends on `spec.snr_db`.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let per = draw_cuts(spec, &mut rng)?;
    let mut clean = Vec::with_capacity(spec.categories);
    let mut slopes = Vec::with_capacity(spec.categories);
    for cuts in &per {
        let (s, sl) = piecewise(spec.n, cuts, &mut rng);
        clean.push(s);
        slopes.push(sl);
    }
    let truth = GroundTruth::from_category_cuts(per);
    assert_minimal(&truth, &slopes, spec.n);

    let mut counts = Vec::with_capacity(spec.categories);
    for (c, series) in clean.iter().enumerate() {
        let noisy = match spec.snr_db {
            Some(snr) => {
                let seed = derive_seed(derive_seed(spec.seed, snr.to_bits()), c as u64);
                add_noise(series, snr, seed)?
            }
            None => series.clone(),
        };
        counts.push(noisy.into_iter().map(|v| v.round().max(0.0)).collect());
    }
    Ok(SyntheticDataset {
        spec: spec.clone(),
        names: category_names(spec.categories),
        clean,
        counts,
        truth,
    })
}

/// Generate the relation and its ground truth.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Relation, GroundTruth)> {
    let data = generate(spec)?;
    Ok((data.relation()?, data.truth))
}

impl SyntheticDataset {
    pub fn n(&self) -> usize {
        self.spec.n
    }

    /// Total count per timestamp.
    pub fn aggregate(&self) -> Vec<f64> {
        (0..self.n())
            .map(|t| self.counts.iter().map(|c| c[t]).sum())
            .collect()
    }

    /// One row per counted sale, so that COUNT grouped by time and category
    /// reproduces `counts`.
    pub fn relation(&self) -> Result<Relation> {
        let total: usize = self.counts.iter().flatten().map(|&v| v as usize).sum();
        let mut times = Vec::with_capacity(total);
        let mut cats = Vec::with_capacity(total);
        for t in 0..self.n() {
            for (c, series) in self.counts.iter().enumerate() {
                for _ in 0..series[t] as usize {
                    times.push(TimeValue::Int(t as i64));
                    cats.push(self.names[c].clone());
                }
            }
        }
        let sales = vec!["1".to_string(); times.len()];
        Ok(Relation::from_columns(
            TIME_ATTR,
            times,
            vec![(MEASURE.into(), sales), (CATEGORY.into(), cats)],
            &HashMap::new(),
        )?)
    }

    /// The COUNT cube over `category`, built straight from the counts.
    pub fn cube(&self) -> Result<SeriesCube> {
        let doc = CubeDocument {
            version: 1,
            agg: AggSpec::count(),
            grid: (0..self.n() as i64).map(TimeValue::Int).collect(),
            explain_by: ExplainBy::new(vec![CATEGORY.into()], vec![self.names.clone()]),
            overall_sum: self.aggregate(),
            overall_count: None,
            explanations: self
                .counts
                .iter()
                .enumerate()
                .map(|(c, series)| CubeEntry {
                    predicates: vec![(0, c as u32)],
                    sum: series.clone(),
                    count: None,
                })
                .collect(),
        };
        Ok(SeriesCube::from_document(doc)?)
    }

    pub fn sidecar(&self) -> TruthSidecar {
        TruthSidecar {
            cuts: self.truth.cuts.clone(),
            per_category_cuts: self
                .names
                .iter()
                .cloned()
                .zip(self.truth.per_category_cuts.iter().cloned())
                .collect(),
            snr_db: self.spec.snr_db,
            seed: self.spec.seed,
        }
    }

    /// Write `T,sales,category` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([TIME_ATTR, MEASURE, CATEGORY])?;
        for t in 0..self.n() {
            let ts = t.to_string();
            for (c, series) in self.counts.iter().enumerate() {
                for _ in 0..series[t] as usize {
                    w.write_record([ts.as_str(), "1", self.names[c].as_str()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_of_category_cuts() {
        let t = GroundTruth::from_category_cuts(vec![vec![52, 76], vec![70, 90], vec![31]]);
        assert_eq!(t.cuts, vec![31, 52, 70, 76, 90]);
        assert_eq!(t.k, 6);
        assert_eq!(t.scheme(100).unwrap().cuts, vec![0, 31, 52, 70, 76, 90, 99]);
    }

    #[test]
    fn names_sort_like_their_index() {
        let names = category_names(12);
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert_eq!(names[0], "a01");
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(5, 9), derive_seed(5, 9));
    }
}

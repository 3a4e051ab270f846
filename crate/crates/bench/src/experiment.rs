//! Effectiveness and metric-ranking experiments over synthetic datasets.

use std::collections::BTreeMap;
use std::io::Write;

use evolex_core::diff::all_segments;
use evolex_core::pipeline::Engine;
use evolex_core::variance::{builtin_metric, VarianceTable};
use evolex_core::SegmentationScheme;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accuracy::distance_percent;
use crate::error::Result;
use crate::segmenter::{Segmenter, SegmenterRegistry};
use crate::synth::{derive_seed, generate, SyntheticDataset, SyntheticSpec};

pub const ALL_METRICS: [&str; 8] = ["tse", "dist1", "dist2", "allpair", "Stse", "Sdist1", "Sdist2", "Sallpair"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub n: usize,
    pub categories: usize,
    pub snr_levels: Vec<f64>,
    pub datasets_per_level: usize,
    pub seed: u64,
    pub methods: Vec<String>,
    pub metrics: Vec<String>,
    pub samples: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n: 100,
            categories: 3,
            snr_levels: vec![20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0],
            datasets_per_level: 20,
            seed: 0,
            methods: vec!["tse".into(), "bottomup".into()],
            metrics: ALL_METRICS.iter().map(|s| s.to_string()).collect(),
            samples: 10_000,
        }
    }
}

impl BenchConfig {
    /// Dataset `i` keeps its clean component across levels; only the noise changes.
    pub fn datasets(&self, snr_db: Option<f64>) -> Result<Vec<SyntheticDataset>> {
        (0..self.datasets_per_level)
            .into_par_iter()
            .map(|i| {
                generate(&SyntheticSpec {
                    n: self.n,
                    categories: self.categories,
                    snr_db,
                    seed: derive_seed(self.seed, i as u64),
                    datasets_per_level: self.datasets_per_level,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessCase {
    pub snr_db: Option<f64>,
    pub dataset: usize,
    pub method: String,
    pub k: usize,
    pub distance_percent: f64,
    pub cuts: Vec<usize>,
    pub truth: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessRow {
    pub snr_db: Option<f64>,
    pub method: String,
    pub mean_distance_percent: f64,
    pub datasets: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EffectivenessReport {
    pub rows: Vec<EffectivenessRow>,
    pub cases: Vec<EffectivenessCase>,
}

impl EffectivenessReport {
    pub fn mean(&self, snr_db: Option<f64>, method: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.snr_db == snr_db && r.method == method)
            .map(|r| r.mean_distance_percent)
    }
}

/// Segment every dataset at its true `K` with each method.
pub fn effectiveness_experiment(datasets: &[SyntheticDataset], methods: &[&dyn Segmenter]) -> Result<EffectivenessReport> {
    let cases: Vec<EffectivenessCase> = datasets
        .par_iter()
        .enumerate()
        .map(|(i, d)| -> Result<Vec<EffectivenessCase>> {
            let truth = d.truth.scheme(d.n())?;
            methods
                .iter()
                .map(|m| {
                    let got = m.segment(d, d.truth.k)?;
                    Ok(EffectivenessCase {
                        snr_db: d.spec.snr_db,
                        dataset: i,
                        method: m.id().to_string(),
                        k: d.truth.k,
                        distance_percent: distance_percent(&got, &truth, d.n())?,
                        cuts: got.interior().to_vec(),
                        truth: d.truth.cuts.clone(),
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut groups: BTreeMap<(Level, String), Vec<f64>> = BTreeMap::new();
    for c in &cases {
        groups
            .entry((Level(c.snr_db), c.method.clone()))
            .or_default()
            .push(c.distance_percent);
    }
    let rows = groups
        .into_iter()
        .map(|((level, method), v)| EffectivenessRow {
            snr_db: level.0,
            method,
            mean_distance_percent: v.iter().sum::<f64>() / v.len() as f64,
            datasets: v.len(),
        })
        .collect();
    Ok(EffectivenessReport { rows, cases })
}

/// Orders SNR levels with the noiseless level last.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Level(Option<f64>);

impl Eq for Level {}

impl Ord for Level {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let key = |l: &Level| l.0.unwrap_or(f64::INFINITY);
        key(self).total_cmp(&key(other))
    }
}

impl PartialOrd for Level {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// `1 + |{w : w < v}|`, so ties share the best rank.
pub fn competition_ranks<T: PartialOrd>(values: &[T]) -> Vec<usize> {
    values
        .iter()
        .map(|v| 1 + values.iter().filter(|w| *w < v).count())
        .collect()
}

/// `samples` uniform draws of `k − 1` interior cuts out of `n − 2`.
pub fn sample_schemes(n: usize, k: usize, samples: usize, seed: u64) -> Vec<SegmentationScheme> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let mut cuts: Vec<usize> = sample(&mut rng, n - 2, k - 1).into_iter().map(|c| c + 1).collect();
            cuts.sort_unstable();
            SegmentationScheme::from_interior(&cuts, n).expect("sampled cuts are interior")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCase {
    pub snr_db: Option<f64>,
    pub dataset: usize,
    pub metric: String,
    /// Position of the truth among the sampled schemes, 1 = no sample beats it.
    pub gt_rank: usize,
    /// Position of this metric among all metrics on this dataset.
    pub metric_rank: usize,
    pub truth_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub snr_db: Option<f64>,
    pub metric: String,
    pub mean_rank: f64,
    pub mean_gt_rank: f64,
    pub datasets: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankReport {
    pub samples: usize,
    pub rows: Vec<RankRow>,
    pub cases: Vec<RankCase>,
}

impl RankReport {
    pub fn row(&self, snr_db: Option<f64>, metric: &str) -> Option<&RankRow> {
        self.rows
            .iter()
            .find(|r| r.snr_db == snr_db && r.metric.eq_ignore_ascii_case(metric))
    }
}

/// Rank the truth's objective among random schemes under every metric, then
/// rank the metrics per dataset by how well they placed the truth.
pub fn metric_rank_experiment(
    datasets: &[SyntheticDataset],
    metrics: &[String],
    samples: usize,
    seed: u64,
) -> Result<RankReport> {
    let resolved = metrics
        .iter()
        .map(|m| builtin_metric(m))
        .collect::<evolex_core::Result<Vec<_>>>()?;
    let cases: Vec<RankCase> = datasets
        .par_iter()
        .enumerate()
        .map(|(i, d)| -> Result<Vec<RankCase>> {
            let n = d.n();
            let cube = d.cube()?;
            let mut engine = Engine::new(&cube, evolex_core::cascade::DEFAULT_M, true, "tse")?;
            let segs = all_segments(n);
            engine.score(&segs);
            let truth = d.truth.scheme(n)?;
            let level_seed = d.spec.snr_db.map_or(u64::MAX, f64::to_bits);
            let draws = sample_schemes(n, d.truth.k, samples, derive_seed(derive_seed(seed, d.spec.seed), level_seed));
            let mut gt = Vec::with_capacity(resolved.len());
            let mut objectives = Vec::with_capacity(resolved.len());
            for metric in &resolved {
                let mut table = VarianceTable::new(n);
                table.fill(&segs, metric.as_ref(), engine.context());
                let var = |a: usize, b: usize| table.get(a, b);
                let target = truth.objective(var);
                let beaten = draws.iter().filter(|s| s.objective(var) < target).count();
                gt.push(1 + beaten);
                objectives.push(target);
            }
            let ranks = competition_ranks(&gt);
            Ok(resolved
                .iter()
                .enumerate()
                .map(|(m, metric)| RankCase {
                    snr_db: d.spec.snr_db,
                    dataset: i,
                    metric: metric.id().to_string(),
                    gt_rank: gt[m],
                    metric_rank: ranks[m],
                    truth_objective: objectives[m],
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let order: Vec<String> = resolved.iter().map(|m| m.id().to_string()).collect();
    let mut groups: BTreeMap<Level, BTreeMap<usize, (f64, f64, usize)>> = BTreeMap::new();
    for c in &cases {
        let slot = order.iter().position(|m| *m == c.metric).expect("known metric");
        let e = groups.entry(Level(c.snr_db)).or_default().entry(slot).or_default();
        e.0 += c.metric_rank as f64;
        e.1 += c.gt_rank as f64;
        e.2 += 1;
    }
    let rows = groups
        .into_iter()
        .flat_map(|(level, per)| {
            let order = &order;
            per.into_iter().map(move |(slot, (r, g, k))| RankRow {
                snr_db: level.0,
                metric: order[slot].clone(),
                mean_rank: r / k as f64,
                mean_gt_rank: g / k as f64,
                datasets: k,
            })
        })
        .collect();
    Ok(RankReport { samples, rows, cases })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub effectiveness: EffectivenessReport,
    pub ranking: RankReport,
}

/// Run both experiments over every configured SNR level.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    let mut registry = SegmenterRegistry::builtin();
    for m in &config.methods {
        registry.resolve(m)?;
    }
    let methods: Vec<&dyn Segmenter> = config
        .methods
        .iter()
        .map(|m| registry.get(m))
        .collect::<Result<_>>()?;
    let mut effectiveness = EffectivenessReport::default();
    let mut ranking = RankReport {
        samples: config.samples,
        ..Default::default()
    };
    for &snr in &config.snr_levels {
        let data = config.datasets(Some(snr))?;
        if !methods.is_empty() {
            let e = effectiveness_experiment(&data, &methods)?;
            effectiveness.rows.extend(e.rows);
            effectiveness.cases.extend(e.cases);
        }
        if !config.metrics.is_empty() && config.samples > 0 {
            let r = metric_rank_experiment(&data, &config.metrics, config.samples, config.seed)?;
            ranking.rows.extend(r.rows);
            ranking.cases.extend(r.cases);
        }
    }
    Ok(BenchReport {
        config: config.clone(),
        effectiveness,
        ranking,
    })
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Summary CSV keyed by `(snr_db, method)`.
pub fn write_effectiveness_csv<W: Write>(report: &EffectivenessReport, out: W) -> Result<()> {
    write_rows(out, &report.rows)
}

/// Summary CSV keyed by `(snr_db, metric)`.
pub fn write_ranking_csv<W: Write>(report: &RankReport, out: W) -> Result<()> {
    write_rows(out, &report.rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn competition_ranking() {
        assert_eq!(competition_ranks(&[3, 1, 1, 7]), vec![3, 1, 1, 4]);
        assert_eq!(competition_ranks(&[2, 2, 2]), vec![1, 1, 1]);
    }

    #[test]
    fn sampled_schemes_are_valid_and_seeded() {
        let a = sample_schemes(20, 4, 50, 3);
        assert_eq!(a, sample_schemes(20, 4, 50, 3));
        for s in &a {
            assert_eq!(s.k(), 4);
        }
        assert!(sample_schemes(20, 1, 5, 0).iter().all(|s| s.cuts == vec![0, 19]));
    }

    #[test]
    fn levels_sort_noiseless_last() {
        let mut v = vec![Level(None), Level(Some(40.0)), Level(Some(20.0))];
        v.sort();
        assert_eq!(v, vec![Level(Some(20.0)), Level(Some(40.0)), Level(None)]);
    }
}

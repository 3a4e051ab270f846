//! Larger seeded workloads shaped like common real-world queries, for latency checks.

use std::collections::HashMap;

use evolex_core::{AggFunction, ExplainRequest, Relation, TimeValue};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::error::Result;

/// A relation plus the request that explains it.
pub struct Workload {
    pub relation: Relation,
    pub request: ExplainRequest,
}

/// Daily case counts over 345 days for 60 regions, each a mix of waves.
pub fn wave_workload(seed: u64) -> Result<Workload> {
    const DAYS: usize = 345;
    const REGIONS: usize = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::with_capacity(DAYS * REGIONS);
    let mut region = Vec::with_capacity(DAYS * REGIONS);
    let mut cases = Vec::with_capacity(DAYS * REGIONS);
    let waves: Vec<Vec<(f64, f64, f64)>> = (0..REGIONS)
        .map(|_| {
            (0..rng.random_range(1..=3))
                .map(|_| {
                    (
                        rng.random_range(0.0..DAYS as f64),
                        rng.random_range(10.0..60.0),
                        rng.random_range(50.0..5000.0),
                    )
                })
                .collect()
        })
        .collect();
    for t in 0..DAYS {
        for (r, w) in waves.iter().enumerate() {
            let v: f64 = w
                .iter()
                .map(|(c, width, h)| h * (-((t as f64 - c) / width).powi(2)).exp())
                .sum();
            times.push(TimeValue::Int(t as i64));
            region.push(format!("r{r:02}"));
            cases.push((v * rng.random_range(0.9..1.1)).round().to_string());
        }
    }
    let relation = Relation::from_columns(
        "day",
        times,
        vec![("region".into(), region), ("cases".into(), cases)],
        &HashMap::new(),
    )?;
    Ok(Workload {
        relation,
        request: ExplainRequest {
            measure: Some("cases".into()),
            agg: AggFunction::Sum,
            explain_by: vec!["region".into()],
            ..Default::default()
        },
    })
}

/// Weekly sales over 128 weeks by volume, pack and vendor: about 2000
/// explanations up to order three, most of which survive filtering.
pub fn retail_workload(seed: u64) -> Result<Workload> {
    const WEEKS: usize = 128;
    const CARDS: [usize; 3] = [8, 9, 22];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = LogNormal::new(0.0, 0.4).expect("valid parameters");
    // each volume follows its own trend with a few turning points
    let trends: Vec<Vec<f64>> = (0..CARDS[0])
        .map(|_| {
            let mut level: f64 = rng.random_range(50.0..150.0);
            let mut slope: f64 = rng.random_range(-1.0..1.0);
            (0..WEEKS)
                .map(|_| {
                    if rng.random_bool(0.05) {
                        slope = -slope + rng.random_range(-0.5..0.5);
                    }
                    level = (level + slope).max(5.0);
                    level
                })
                .collect()
        })
        .collect();
    let pack_w: Vec<f64> = (0..CARDS[1]).map(|_| rng.random_range(0.5..1.5)).collect();
    let vendor_w: Vec<f64> = (0..CARDS[2]).map(|_| rng.random_range(0.5..1.5)).collect();
    let rows = WEEKS * CARDS.iter().product::<usize>();
    let mut times = Vec::with_capacity(rows);
    let mut cols: [Vec<String>; 4] = Default::default();
    for t in 0..WEEKS {
        for v in 0..CARDS[0] {
            for p in 0..CARDS[1] {
                for c in 0..CARDS[2] {
                    let sold = trends[v][t] * pack_w[p] * vendor_w[c] * jitter.sample(&mut rng);
                    times.push(TimeValue::Int(t as i64));
                    cols[0].push(format!("{}", 250 * (v + 1)));
                    cols[1].push(format!("{}", p + 1));
                    cols[2].push(format!("v{c:02}"));
                    cols[3].push(format!("{:.0}", sold));
                }
            }
        }
    }
    let [volume, pack, vendor, bottles] = cols;
    let relation = Relation::from_columns(
        "week",
        times,
        vec![
            ("volume".into(), volume),
            ("pack".into(), pack),
            ("vendor".into(), vendor),
            ("bottles".into(), bottles),
        ],
        &HashMap::new(),
    )?;
    Ok(Workload {
        relation,
        request: ExplainRequest {
            measure: Some("bottles".into()),
            agg: AggFunction::Sum,
            explain_by: vec!["volume".into(), "pack".into(), "vendor".into()],
            ..Default::default()
        },
    })
}

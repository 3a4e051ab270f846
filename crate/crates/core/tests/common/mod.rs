#![allow(dead_code)]

use std::collections::HashMap;

use evolex_core::{Relation, TimeValue};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One row per (timestamp, category) carrying that category's value.
pub fn sum_relation(series: &[(&str, Vec<f64>)]) -> Relation {
    let n = series[0].1.len();
    let mut times = Vec::new();
    let mut cat = Vec::new();
    let mut v = Vec::new();
    for t in 0..n {
        for (name, values) in series {
            times.push(TimeValue::Int(t as i64));
            cat.push(name.to_string());
            v.push(values[t].to_string());
        }
    }
    Relation::from_columns(
        "t",
        times,
        vec![("cat".into(), cat), ("v".into(), v)],
        &HashMap::new(),
    )
    .unwrap()
}

/// Piecewise-linear series with the given breakpoints and alternating slopes.
pub fn piecewise(n: usize, cuts: &[usize], slope: f64, base: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut v = base;
    let mut dir = 1.0;
    for t in 0..n {
        out.push(v);
        if cuts.contains(&(t + 1)) {
            dir = -dir;
        }
        v += dir * slope;
    }
    out
}

/// Three categories with different change points plus mild noise.
pub fn trend_fixture(n: usize, seed: u64) -> Relation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = |mut s: Vec<f64>| {
        for x in s.iter_mut() {
            *x = (*x + rng.random_range(-0.5..0.5)).round();
        }
        s
    };
    let a = noisy(piecewise(n, &[n / 3, 2 * n / 3], 4.0, 400.0));
    let b = noisy(piecewise(n, &[n / 2], 2.0, 300.0));
    let c = noisy(piecewise(n, &[n / 4, 3 * n / 4], 3.0, 500.0));
    sum_relation(&[("a", a), ("b", b), ("c", c)])
}

/// Two explain-by attributes (region, product) over a small grid.
pub fn two_attr_fixture(n: usize, seed: u64) -> Relation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::new();
    let mut region = Vec::new();
    let mut product = Vec::new();
    let mut v = Vec::new();
    for t in 0..n {
        for (ri, r) in ["north", "south", "east"].iter().enumerate() {
            for (pi, p) in ["p1", "p2"].iter().enumerate() {
                let phase = if t < n / 2 { 1.0 } else { -1.0 };
                let slope = (ri as f64 + 1.0) * if pi == 0 { phase } else { -phase };
                times.push(TimeValue::Int(t as i64));
                region.push(r.to_string());
                product.push(p.to_string());
                v.push((200.0 + slope * t as f64 + rng.random_range(-1.0..1.0)).round().to_string());
            }
        }
    }
    Relation::from_columns(
        "t",
        times,
        vec![
            ("region".into(), region),
            ("product".into(), product),
            ("v".into(), v),
        ],
        &HashMap::new(),
    )
    .unwrap()
}

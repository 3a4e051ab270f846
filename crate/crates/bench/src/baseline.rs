//! Bottom-up piecewise-linear segmentation.
//!
//! Scheme segment `i` owns the points `(c_i, c_{i+1}]`, and the first one owns
//! point 0 too, so the fitted pieces partition the series and merging never
//! lowers the total residual.

use evolex_core::SegmentationScheme;

use crate::error::{BenchError, Result};

struct Prefix {
    y: Vec<f64>,
    yy: Vec<f64>,
    xy: Vec<f64>,
}

impl Prefix {
    fn new(series: &[f64]) -> Prefix {
        let mean = series.iter().sum::<f64>() / series.len().max(1) as f64;
        let mut p = Prefix {
            y: vec![0.0],
            yy: vec![0.0],
            xy: vec![0.0],
        };
        for (x, v) in series.iter().enumerate() {
            let v = v - mean;
            p.y.push(p.y[x] + v);
            p.yy.push(p.yy[x] + v * v);
            p.xy.push(p.xy[x] + x as f64 * v);
        }
        p
    }

    /// Least-squares line residual over points `a..=b`.
    fn residual(&self, a: usize, b: usize) -> f64 {
        let m = (b - a + 1) as f64;
        if m <= 2.0 {
            return 0.0;
        }
        let (lo, hi) = (a as f64, b as f64);
        let sx = (lo + hi) * m / 2.0;
        let sxx = (hi * (hi + 1.0) * (2.0 * hi + 1.0) - (lo - 1.0) * lo * (2.0 * lo - 1.0)) / 6.0;
        let sy = self.y[b + 1] - self.y[a];
        let syy = self.yy[b + 1] - self.yy[a];
        let sxy = self.xy[b + 1] - self.xy[a];
        let cxx = sxx - sx * sx / m;
        let cxy = sxy - sx * sy / m;
        let cyy = syy - sy * sy / m;
        (cyy - cxy * cxy / cxx).max(0.0)
    }
}

/// Point range `(first, last)` that scheme segment `(a, b)` owns.
fn owned(a: usize, b: usize) -> (usize, usize) {
    (if a == 0 { 0 } else { a + 1 }, b)
}

/// Total least-squares residual of fitting one line per segment.
pub fn fit_residual(series: &[f64], scheme: &SegmentationScheme) -> f64 {
    let p = Prefix::new(series);
    scheme
        .segments()
        .map(|(a, b)| {
            let (f, l) = owned(a, b);
            p.residual(f, l)
        })
        .sum()
}

/// Merge adjacent segments, cheapest first, until `k` remain.
///
/// Costs within a relative `1e-9` of each other count as ties and go to the
/// leftmost pair.
pub fn bottom_up_segment(series: &[f64], k: usize) -> Result<SegmentationScheme> {
    let n = series.len();
    if n < 2 || k == 0 || k > n - 1 {
        return Err(BenchError::InvalidParameter(format!(
            "K = {k} is outside 1..={} for a {n}-point series",
            n.saturating_sub(1)
        )));
    }
    let p = Prefix::new(series);
    let tol = 1e-9 * (1.0 + p.yy[n]);
    let mut cuts: Vec<usize> = (0..n).collect();
    let cost = |cuts: &[usize], i: usize| {
        let (f, m) = owned(cuts[i], cuts[i + 1]);
        let (_, l) = owned(cuts[i + 1], cuts[i + 2]);
        p.residual(f, l) - p.residual(f, m) - p.residual(m + 1, l)
    };
    let mut costs: Vec<f64> = (0..n - 2).map(|i| cost(&cuts, i)).collect();
    while cuts.len() - 1 > k {
        let mut best = 0;
        for (i, &c) in costs.iter().enumerate().skip(1) {
            if c < costs[best] - tol {
                best = i;
            }
        }
        cuts.remove(best + 1);
        costs.remove(best);
        if best > 0 {
            costs[best - 1] = cost(&cuts, best - 1);
        }
        if best < costs.len() {
            costs[best] = cost(&cuts, best);
        }
    }
    Ok(SegmentationScheme::new(cuts, n)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_of_a_line_is_zero() {
        let s: Vec<f64> = (0..20).map(|x| 3.0 * x as f64 - 7.0).collect();
        let p = Prefix::new(&s);
        assert!(p.residual(0, 19) < 1e-9);
        assert!(p.residual(4, 11) < 1e-9);
    }

    #[test]
    fn residual_matches_direct_fit() {
        let s = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let p = Prefix::new(&s);
        let (xs, ys): (Vec<f64>, Vec<f64>) = (1..=4).map(|i| (i as f64, s[i])).unzip();
        let mx = xs.iter().sum::<f64>() / 4.0;
        let my = ys.iter().sum::<f64>() / 4.0;
        let b = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        let r: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - b * (x - mx)).powi(2)).sum();
        assert!((p.residual(1, 4) - r).abs() < 1e-9);
    }

    #[test]
    fn recovers_exact_pieces() {
        // rise to 30, fall to 55, rise again
        let mut s = vec![0.0; 80];
        for t in 1..80 {
            let slope = if t <= 30 { 2.0 } else if t <= 55 { -3.0 } else { 1.0 };
            s[t] = s[t - 1] + slope;
        }
        let scheme = bottom_up_segment(&s, 3).unwrap();
        assert_eq!(scheme.cuts, vec![0, 30, 55, 79]);
        assert!(fit_residual(&s, &scheme) < 1e-6);
    }

    #[test]
    fn extremes() {
        let s = [1.0, 5.0, 2.0, 2.0, 9.0];
        assert_eq!(bottom_up_segment(&s, 4).unwrap().cuts, vec![0, 1, 2, 3, 4]);
        assert_eq!(bottom_up_segment(&s, 1).unwrap().cuts, vec![0, 4]);
        assert!(bottom_up_segment(&s, 5).is_err());
        assert!(bottom_up_segment(&s, 0).is_err());
    }
}

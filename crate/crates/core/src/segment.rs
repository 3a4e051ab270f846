//! K-Segmentation by dynamic programming, elbow selection of K, and sketching.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the number of segments.
pub const DEFAULT_K_MAX: usize = 20;

/// Segment boundaries `c_0 = 0 < c_1 < … < c_K = n − 1` (0-based grid positions).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentationScheme {
    pub cuts: Vec<usize>,
}

impl SegmentationScheme {
    pub fn new(cuts: Vec<usize>, n: usize) -> Result<Self> {
        if cuts.len() < 2
            || cuts[0] != 0
            || *cuts.last().unwrap() + 1 != n
            || cuts.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidParameter(format!(
                "cuts {cuts:?} do not form a scheme on {n} points"
            )));
        }
        Ok(SegmentationScheme { cuts })
    }

    /// The scheme with the given interior cuts.
    pub fn from_interior(interior: &[usize], n: usize) -> Result<Self> {
        let mut cuts = Vec::with_capacity(interior.len() + 2);
        cuts.push(0);
        cuts.extend_from_slice(interior);
        cuts.push(n.saturating_sub(1));
        Self::new(cuts, n)
    }

    pub fn k(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn interior(&self) -> &[usize] {
        &self.cuts[1..self.cuts.len() - 1]
    }

    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cuts.windows(2).map(|w| (w[0], w[1]))
    }

    /// `Σ_k |P_k| · Var(P_k)`.
    pub fn objective(&self, var: impl Fn(usize, usize) -> f64) -> f64 {
        self.segments().map(|(i, j)| (j - i) as f64 * var(i, j)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub variance: f64,
}

/// Optimal total variance for each feasible K.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KVarianceCurve {
    pub points: Vec<CurvePoint>,
}

impl KVarianceCurve {
    pub fn from_values(values: &[(usize, f64)]) -> Self {
        KVarianceCurve {
            points: values
                .iter()
                .map(|&(k, variance)| CurvePoint { k, variance })
                .collect(),
        }
    }

    pub fn variance_at(&self, k: usize) -> Option<f64> {
        self.points.iter().find(|p| p.k == k).map(|p| p.variance)
    }

    pub fn is_non_increasing(&self, tol: f64) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].variance <= w[0].variance + tol)
    }
}

/// DP tables for every K up to the requested maximum.
#[derive(Debug, Clone)]
pub struct DpSolution {
    positions: Vec<usize>,
    /// `cost[k][b]`: best total for `k` segments ending at `positions[b]`.
    cost: Vec<Vec<f64>>,
    back: Vec<Vec<u32>>,
}

impl DpSolution {
    /// Finite `D(n, k)` for `k = 1..=K`.
    pub fn curve(&self) -> KVarianceCurve {
        let last = self.positions.len() - 1;
        KVarianceCurve {
            points: (1..self.cost.len())
                .filter(|&k| self.cost[k][last].is_finite())
                .map(|k| CurvePoint {
                    k,
                    variance: self.cost[k][last],
                })
                .collect(),
        }
    }

    pub fn max_k(&self) -> usize {
        self.cost.len() - 1
    }

    pub fn total(&self, k: usize) -> Option<f64> {
        let v = *self.cost.get(k)?.last()?;
        v.is_finite().then_some(v)
    }

    pub fn scheme(&self, k: usize) -> Option<SegmentationScheme> {
        self.total(k)?;
        let mut b = self.positions.len() - 1;
        let mut cuts = vec![self.positions[b]];
        for kk in (1..=k).rev() {
            b = self.back[kk][b] as usize;
            cuts.push(self.positions[b]);
        }
        cuts.reverse();
        debug_assert_eq!(cuts[0], 0);
        Some(SegmentationScheme { cuts })
    }
}

/// Minimize `Σ_k |P_k| · Var(P_k)` over schemes with up to `k_max` segments.
///
/// Cuts are restricted to `candidates` when given (must contain `0` and `n − 1`)
/// and segment lengths to `max_len`. Ties go to the smallest last cut.
/// Fails if no scheme with exactly `k_max` segments exists.
pub fn k_segmentation_dp(
    n: usize,
    k_max: usize,
    var: impl Fn(usize, usize) -> f64,
    candidates: Option<&[usize]>,
    max_len: Option<usize>,
) -> Result<DpSolution> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "segmentation needs at least two points".into(),
        ));
    }
    if k_max == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    let positions: Vec<usize> = match candidates {
        Some(c) => {
            if c.first() != Some(&0)
                || c.last() != Some(&(n - 1))
                || c.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(Error::InvalidParameter(
                    "candidate cuts must be ascending and include both endpoints".into(),
                ));
            }
            c.to_vec()
        }
        None => (0..n).collect(),
    };
    let max_len = max_len.unwrap_or(n);
    if max_len == 0 {
        return Err(Error::InvalidParameter("max segment length must be ≥ 1".into()));
    }
    if k_max > positions.len() - 1 {
        return Err(Error::Infeasible(format!(
            "K = {k_max} exceeds the {} available unit intervals",
            positions.len() - 1
        )));
    }
    if k_max * max_len < n - 1 {
        return Err(Error::Infeasible(format!(
            "{k_max} segments of length ≤ {max_len} cannot cover {n} points"
        )));
    }

    let p = positions.len();
    let mut cost = vec![vec![f64::INFINITY; p]; k_max + 1];
    let mut back = vec![vec![u32::MAX; p]; k_max + 1];
    cost[0][0] = 0.0;
    // weighted[b][a - lows[b]] = |P| · Var(P) for P = [positions[a], positions[b]]
    let lows: Vec<usize> = (0..p)
        .map(|b| positions.partition_point(|&x| x + max_len < positions[b]))
        .collect();
    let weighted: Vec<Vec<f64>> = (0..p)
        .map(|b| {
            (lows[b]..b)
                .map(|a| {
                    let len = positions[b] - positions[a];
                    len as f64 * var(positions[a], positions[b])
                })
                .collect()
        })
        .collect();
    for k in 1..=k_max {
        let (prev, cur) = cost.split_at_mut(k);
        let prev = &prev[k - 1];
        let cur = &mut cur[0];
        for b in k..p {
            let mut best = f64::INFINITY;
            let mut arg = u32::MAX;
            for (off, w) in weighted[b].iter().enumerate() {
                let a = lows[b] + off;
                let c = prev[a] + w;
                if c < best {
                    best = c;
                    arg = a as u32;
                }
            }
            cur[b] = best;
            back[k][b] = arg;
        }
    }
    if !cost[k_max][p - 1].is_finite() {
        return Err(Error::Infeasible(format!(
            "no scheme with {k_max} segments satisfies the cut constraints"
        )));
    }
    Ok(DpSolution {
        positions,
        cost,
        back,
    })
}

/// How the knee of a K-variance curve is located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElbowRule {
    /// `argmax (1 − norm_var) − norm_K`.
    #[default]
    Kneedle,
    /// `argmax norm_var − norm_K`, the formula read literally.
    Literal,
}

/// Pick K at the knee of the curve, considering `K ≤ k_max`. Ties go to the smaller K.
pub fn select_optimal_k(curve: &KVarianceCurve, k_max: usize, rule: ElbowRule) -> Result<usize> {
    let pts: Vec<CurvePoint> = curve.points.iter().copied().filter(|p| p.k <= k_max).collect();
    if pts.is_empty() {
        return Err(Error::InvalidParameter("empty K-variance curve".into()));
    }
    let (k_lo, k_hi) = (pts[0].k as f64, pts[pts.len() - 1].k as f64);
    let v_min = pts.iter().map(|p| p.variance).fold(f64::INFINITY, f64::min);
    let v_max = pts.iter().map(|p| p.variance).fold(f64::NEG_INFINITY, f64::max);
    if v_max - v_min <= 1e-12 * v_max.abs().max(1.0) || k_hi == k_lo {
        return Ok(pts[0].k);
    }
    let mut best_k = pts[0].k;
    let mut best = f64::NEG_INFINITY;
    for p in &pts {
        let nk = (p.k as f64 - k_lo) / (k_hi - k_lo);
        let nv = (p.variance - v_min) / (v_max - v_min);
        let score = match rule {
            ElbowRule::Kneedle => (1.0 - nv) - nk,
            ElbowRule::Literal => nv - nk,
        };
        if score > best + 1e-12 {
            best = score;
            best_k = p.k;
        }
    }
    Ok(best_k)
}

/// Sketch sizes: segments of at most `l` points, `s` of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchParams {
    pub l: usize,
    pub s: usize,
}

impl SketchParams {
    /// `L = min(⌈0.05 n⌉, 20)` and `S = ⌈3n / L⌉`.
    pub fn for_len(n: usize) -> SketchParams {
        let l = n.div_ceil(20).clamp(1, 20);
        SketchParams {
            l,
            s: (3 * n).div_ceil(l),
        }
    }

    /// Too short to sketch: every index would be a cut anyway.
    pub fn is_degenerate(&self, n: usize) -> bool {
        n <= self.s + 1
    }
}

/// Phase-I cut positions: the optimal `S`-segment scheme with lengths at most `L`.
pub fn sketch_select(
    n: usize,
    params: SketchParams,
    var: impl Fn(usize, usize) -> f64,
) -> Result<Vec<usize>> {
    if params.is_degenerate(n) {
        return Ok((0..n).collect());
    }
    let sol = k_segmentation_dp(n, params.s, var, None, Some(params.l))?;
    Ok(sol
        .scheme(params.s)
        .expect("feasibility checked by the DP")
        .cuts)
}

use evolex_core::SegmentationScheme;

use crate::error::{BenchError, Result};

/// Matched cut displacement as a percentage of `K·n`.
///
/// Both schemes must have the same `K`; interior cuts are paired by rank,
/// which is the optimal monotone matching for sorted sequences.
pub fn distance_percent(candidate: &SegmentationScheme, truth: &SegmentationScheme, n: usize) -> Result<f64> {
    if candidate.k() != truth.k() {
        return Err(BenchError::KMismatch {
            candidate: candidate.k(),
            truth: truth.k(),
        });
    }
    if n == 0 {
        return Err(BenchError::InvalidParameter("n must be positive".into()));
    }
    let moved: usize = candidate
        .interior()
        .iter()
        .zip(truth.interior())
        .map(|(a, b)| a.abs_diff(*b))
        .sum();
    Ok(100.0 * moved as f64 / (truth.k() * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(cuts: &[usize], n: usize) -> SegmentationScheme {
        SegmentationScheme::from_interior(cuts, n).unwrap()
    }

    #[test]
    fn one_step_off() {
        let truth = s(&[31, 52, 70, 76, 90], 100);
        let cand = s(&[30, 52, 70, 76, 90], 100);
        let d = distance_percent(&cand, &truth, 100).unwrap();
        assert!((d - 100.0 / 600.0).abs() < 1e-12);
        assert_eq!(distance_percent(&truth, &truth, 100).unwrap(), 0.0);
    }

    #[test]
    fn k_must_match() {
        assert!(matches!(
            distance_percent(&s(&[3], 10), &s(&[3, 5], 10), 10),
            Err(BenchError::KMismatch { .. })
        ));
    }
}

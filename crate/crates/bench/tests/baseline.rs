use evolex_bench::{bottom_up_segment, distance_percent, fit_residual};
use evolex_core::SegmentationScheme;
use proptest::prelude::*;

/// Alternating piecewise-linear series with integer slopes.
fn zigzag(n: usize, cuts: &[usize], slopes: &[i64]) -> Vec<f64> {
    let mut out = vec![100.0; n];
    let mut piece = 0;
    for t in 1..n {
        if piece < cuts.len() && t > cuts[piece] {
            piece += 1;
        }
        let dir = if piece % 2 == 0 { 1 } else { -1 };
        out[t] = out[t - 1] + (dir * slopes[piece]) as f64;
    }
    out
}

fn cut_strategy() -> impl Strategy<Value = (usize, Vec<usize>, Vec<i64>)> {
    (30usize..120, 1usize..5).prop_flat_map(|(n, k)| {
        (
            Just(n),
            prop::collection::btree_set(4..n - 4, k).prop_map(|s| s.into_iter().collect::<Vec<_>>()),
            prop::collection::vec(1i64..6, k + 1),
        )
    })
}

proptest! {
    #[test]
    fn recovers_exact_piecewise_cuts((n, cuts, slopes) in cut_strategy()) {
        // keep pieces at least three points long so each is identifiable
        prop_assume!(cuts.windows(2).all(|w| w[1] - w[0] >= 3));
        let s = zigzag(n, &cuts, &slopes);
        let got = bottom_up_segment(&s, cuts.len() + 1).unwrap();
        prop_assert_eq!(got.interior(), &cuts[..]);
    }

    #[test]
    fn residual_grows_as_k_shrinks(values in prop::collection::vec(-50.0f64..50.0, 5..60)) {
        let n = values.len();
        let mut last = -1.0;
        for k in (1..n).rev() {
            let scheme = bottom_up_segment(&values, k).unwrap();
            prop_assert_eq!(scheme.k(), k);
            let r = fit_residual(&values, &scheme);
            prop_assert!(r >= last - 1e-6, "k {}: {} < {}", k, r, last);
            last = r;
        }
        prop_assert_eq!(bottom_up_segment(&values, 1).unwrap().cuts, vec![0, n - 1]);
        prop_assert_eq!(bottom_up_segment(&values, n - 1).unwrap().cuts, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn distance_percent_is_a_metric(
        n in 12usize..60,
        seed in prop::collection::vec(prop::collection::btree_set(1usize..11, 3), 3),
    ) {
        let schemes: Vec<SegmentationScheme> = seed
            .iter()
            .map(|s| {
                let cuts: Vec<usize> = s.iter().map(|c| c * (n - 2) / 11 + 1).collect();
                let mut cuts = cuts;
                cuts.dedup();
                cuts
            })
            .filter(|c| c.len() == 3)
            .map(|c| SegmentationScheme::from_interior(&c, n).unwrap())
            .collect();
        prop_assume!(schemes.len() == 3);
        let d = |a: &SegmentationScheme, b: &SegmentationScheme| distance_percent(a, b, n).unwrap();
        let (a, b, c) = (&schemes[0], &schemes[1], &schemes[2]);
        prop_assert!(d(a, b) >= 0.0);
        prop_assert_eq!(d(a, b), d(b, a));
        prop_assert_eq!(d(a, b) == 0.0, a == b);
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
    }
}

#[test]
fn single_cut_worst_case_bound() {
    for n in [10usize, 25, 100] {
        let mut worst: f64 = 0.0;
        for a in 1..n - 1 {
            for b in 1..n - 1 {
                let x = SegmentationScheme::from_interior(&[a], n).unwrap();
                let y = SegmentationScheme::from_interior(&[b], n).unwrap();
                worst = worst.max(distance_percent(&x, &y, n).unwrap());
            }
        }
        assert_eq!(worst, 100.0 * (n - 3) as f64 / (2 * n) as f64);
        assert!(worst <= 100.0 * (n - 2) as f64 / (2 * n) as f64);
    }
}

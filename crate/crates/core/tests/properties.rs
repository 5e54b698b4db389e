//! Property tests over the decision model and the population sampler.

use modal_core::calibration::{allocate_counts, embedded, sample_distance, tables};
use modal_core::model::{
    argmax, blend_filter, perceive, score, scores, CriteriaVector, Mode, ModeGrid, ModeSet, PerMode, Thresholds,
    TripWindow, FILTER_MAX, FILTER_MIN,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn grid(lo: f64, hi: f64) -> impl Strategy<Value = ModeGrid> {
    prop::array::uniform4(prop::array::uniform6(lo..hi)).prop_map(ModeGrid::from_rows)
}

fn priorities() -> impl Strategy<Value = CriteriaVector> {
    prop::array::uniform6(0.0..100.0f64)
        .prop_filter("positive sum", |p| p.iter().sum::<f64>() > 1e-6)
        .prop_map(CriteriaVector)
}

fn mode() -> impl Strategy<Value = Mode> {
    (0..4usize).prop_map(|i| Mode::ALL[i])
}

proptest! {
    #[test]
    fn scores_stay_in_range(values in grid(0.0, 100.0), p in priorities(), m in mode()) {
        let s = score(&values, &p, m).unwrap();
        prop_assert!((0.0..=100.0 + 1e-9).contains(&s));
    }

    #[test]
    fn perceived_values_stay_in_range(values in grid(0.0, 100.0), filter in grid(FILTER_MIN, FILTER_MAX)) {
        prop_assert!(perceive(&values, &filter, true).all_within(0.0, 100.0));
        prop_assert_eq!(perceive(&values, &filter, false), values);
    }

    #[test]
    fn argmax_ignores_priority_scale(values in grid(0.0, 100.0), p in priorities(), k in 0.01..100.0f64) {
        let scaled = CriteriaVector(p.0.map(|v| v * k));
        let a = argmax(&scores(&values, &p).unwrap(), ModeSet::ALL);
        let b = argmax(&scores(&values, &scaled).unwrap(), ModeSet::ALL);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn windows_never_overflow(trips in prop::collection::vec(mode(), 0..400)) {
        let mut w = TripWindow::new(100);
        for t in &trips {
            w.push(*t);
            prop_assert!(w.len() <= 100);
        }
        let f = w.frequencies();
        let total: f64 = f.0.iter().sum();
        if trips.is_empty() {
            prop_assert_eq!(total, 0.0);
        } else {
            prop_assert!((total - 1.0).abs() < 1e-9);
            let usual = w.usual_mode().unwrap();
            prop_assert!(Mode::ALL.iter().all(|&m| f[m] <= f[usual]));
        }
    }

    #[test]
    fn blended_filters_stay_in_bounds(trips in prop::collection::vec(mode(), 1..150)) {
        let mut w = TripWindow::new(100);
        for t in trips {
            w.push(t);
        }
        let blended = blend_filter(&w.frequencies(), &embedded().prototypes).unwrap();
        prop_assert!(blended.all_within(FILTER_MIN, FILTER_MAX));
    }

    #[test]
    fn allocation_conserves(n in 1..5_000usize, raw in prop::array::uniform4(0.0..1.0f64)) {
        prop_assume!(raw.iter().sum::<f64>() > 1e-3);
        let counts = allocate_counts(n, &PerMode(raw));
        prop_assert_eq!(counts.0.iter().sum::<usize>(), n);
    }
}

/// Kolmogorov-Smirnov statistic of `xs` against a normal truncated to (lo, hi).
fn ks_truncated_normal(mut xs: Vec<f64>, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let normal = Normal::new(mean, sd).unwrap();
    let (flo, fhi) = (normal.cdf(lo), normal.cdf(hi));
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = (normal.cdf(x) - flo) / (fhi - flo);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn sampled_distances_follow_the_configured_normals() {
    const N: usize = 10_000;
    // Critical value at alpha = 0.001.
    let critical = 1.95 / (N as f64).sqrt();
    let calib = embedded();
    let limits = Thresholds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for m in Mode::ALL {
        let (_, mean, sd, _, _, _) = tables::DISTANCES[m.index()];
        let hi = match m {
            Mode::Walk => 7.0,
            Mode::Bike => 15.0,
            _ => 200.0,
        };
        let xs: Vec<f64> = (0..N).map(|_| sample_distance(m, &calib, &limits, &mut rng)).collect();
        let d = ks_truncated_normal(xs, mean, sd, 0.1, hi);
        assert!(d < critical, "{m}: KS {d} >= {critical}");
    }
}

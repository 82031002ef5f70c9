//! Library routines against independent brute-force references.

use mingle_core::baselines::{ekf_trajectory, EkfParams, EKF_GRID};
use mingle_core::geometry::{lls_multilaterate, range_to_rtt, ranging_error};
use mingle_core::harness::{evaluate, percentile, preprocess, report_from_errors};
use mingle_core::simulator::{generate, preset, NoiseModel};
use mingle_core::Point;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sum of squared residuals of the linearized system with the
/// shortest-range AP as reference.
fn linearized_cost(aps: &[Point], ranges: &[f64], x: Point) -> f64 {
    let r = (0..ranges.len()).min_by(|&a, &b| ranges[a].total_cmp(&ranges[b])).unwrap();
    (0..aps.len())
        .filter(|&i| i != r)
        .map(|i| {
            let lhs = 2.0 * ((aps[i].x - aps[r].x) * x.x + (aps[i].y - aps[r].y) * x.y);
            let rhs = ranges[r].powi(2) - ranges[i].powi(2) + aps[i].x.powi(2) + aps[i].y.powi(2)
                - aps[r].x.powi(2)
                - aps[r].y.powi(2);
            (lhs - rhs).powi(2)
        })
        .sum()
}

#[test]
fn lls_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let aps = [
        Point::new(0.0, 0.0),
        Point::new(20.0, 0.0),
        Point::new(20.0, 12.0),
        Point::new(0.0, 12.0),
        Point::new(10.0, 0.0),
    ];
    for _ in 0..20 {
        let truth = Point::new(rng.random_range(2.0..18.0), rng.random_range(2.0..10.0));
        let ranges: Vec<f64> = aps.iter().map(|a| a.dist(truth) + rng.random_range(-0.5..0.5)).collect();
        let fix = lls_multilaterate(&aps, &ranges).unwrap();

        // Coarse pass then a 0.05 m grid around the coarse optimum.
        let argmin = |cx: f64, cy: f64, half: f64, step: f64| {
            let k = (half / step).round() as i32;
            let mut best = (f64::INFINITY, Point::default());
            for i in -k..=k {
                for j in -k..=k {
                    let p = Point::new(cx + i as f64 * step, cy + j as f64 * step);
                    let c = linearized_cost(&aps, &ranges, p);
                    if c < best.0 {
                        best = (c, p);
                    }
                }
            }
            best.1
        };
        let coarse = argmin(10.0, 6.0, 15.0, 0.5);
        let fine = argmin(coarse.x, coarse.y, 1.0, 0.05);
        assert!(fix.dist(fine) <= 0.05, "fix {fix:?} grid {fine:?}");
        assert!(linearized_cost(&aps, &ranges, fix) <= linearized_cost(&aps, &ranges, fine) + 1e-9);
    }
}

#[test]
fn percentile_matches_sort_and_index() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.random_range(1..40);
        let mut e: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let r = report_from_errors(&e).unwrap();
        e.sort_by(f64::total_cmp);
        for (q, got) in [(0.50, r.p50), (0.75, r.p75), (0.95, r.p95)] {
            let h = q * (n - 1) as f64;
            let (i, frac) = (h as usize, h.fract());
            let want = if i + 1 < n { e[i] * (1.0 - frac) + e[i + 1] * frac } else { e[i] };
            assert!((got - want).abs() < 1e-12);
            assert_eq!(percentile(&e, q), got);
        }
        assert!(r.p50 <= r.p75 && r.p75 <= r.p95);
        assert!(r.rmse + 1e-12 >= r.mae);
    }
}

fn mean_ranging_error(noise: NoiseModel) -> f64 {
    let mut spec = preset("type3").unwrap();
    spec.noise = noise;
    let sc = generate(&spec, 17).unwrap();
    let mut total = 0.0;
    let mut count = 0.0;
    for (row, gt) in sc.rtt_s.iter().zip(&sc.gt) {
        for (&tau, &ap) in row.iter().zip(&sc.aps) {
            total += ranging_error(ap, gt.unwrap(), tau).unwrap();
            count += 1.0;
        }
    }
    total / count
}

#[test]
fn ranging_error_grows_with_each_noise_knob() {
    let base = NoiseModel::default();
    let rising = |values: &[f64], set: &dyn Fn(&mut NoiseModel, f64)| {
        let errs: Vec<f64> = values
            .iter()
            .map(|&v| {
                let mut n = base;
                set(&mut n, v);
                mean_ranging_error(n)
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[0] < w[1]), "{errs:?}");
    };
    rising(&[0.0, 0.2, 0.5, 0.8], &|n, v| n.nlos_p = v);
    rising(&[1.0, 3.0, 6.0], &|n, v| n.nlos_mu = v);
    rising(&[0.1, 0.5, 1.0, 2.0], &|n, v| n.sigma = v);
}

#[test]
fn noiseless_ranges_are_exact() {
    assert!(mean_ranging_error(NoiseModel::noiseless()) < 1e-12);
    let tau = range_to_rtt(7.5);
    assert!(ranging_error(Point::new(0.0, 0.0), Point::new(4.5, 6.0), tau).unwrap() < 1e-12);
}

/// The shipped filter tuning is the best point of its published grid.
#[test]
fn ekf_defaults_are_grid_optimum() {
    let scenes: Vec<_> = (100..=104)
        .map(|seed| {
            let sc = generate(&preset("type3").unwrap(), seed).unwrap();
            let pre = preprocess(&sc, 2).unwrap();
            (sc, pre)
        })
        .collect();
    let score = |params: &EkfParams| -> f64 {
        scenes
            .iter()
            .map(|(sc, pre)| evaluate(&ekf_trajectory(sc, pre, params).unwrap().coords, &sc.gt).unwrap().rmse)
            .sum::<f64>()
            / scenes.len() as f64
    };
    let d = EkfParams::default();
    let best = score(&d);
    for &q in &EKF_GRID.0 {
        for &r in &EKF_GRID.1 {
            let s = score(&EkfParams { q, r, ..d });
            assert!(best <= s + 1e-12, "q={q} r={r} scores {s} < default {best}");
        }
    }
}

proptest! {
    #[test]
    fn median_ignores_order(mut v in prop::collection::vec(-100.0f64..100.0, 1..30), seed in 0u64..1000) {
        let want = mingle_core::features::median(&mut v.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..v.len()).rev() {
            v.swap(i, rng.random_range(0..=i));
        }
        prop_assert_eq!(mingle_core::features::median(&mut v), want);
    }
}

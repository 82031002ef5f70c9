//! Loss properties and training protocol checks on small problems.

use mingle_core::features::build_pels_and_f2;
use mingle_core::gcn::{forward_prepared, Branch, BranchOutput, FeatureKind, GraphKind, ModelOutput, Routing};
use mingle_core::geometry::{range_to_rtt, ApConstellation, RttVector};
use mingle_core::graphs::MobilityGraphs;
use mingle_core::harness::{localize, Method, Mode, Scenario};
use mingle_core::sensing::CourseSegmentation;
use mingle_core::simulator::{generate, preset};
use mingle_core::training::{loss_on_outputs, train, Problem, TrainConfig};
use mingle_core::Point;
use ndarray::Array2;
use proptest::prelude::*;

fn aps() -> ApConstellation {
    ApConstellation::new(vec![
        Point::new(0.0, 0.0),
        Point::new(20.0, 0.0),
        Point::new(20.0, 10.0),
        Point::new(0.0, 10.0),
    ])
    .unwrap()
}

/// Problem over the given targets with one course per `beta` run.
fn problem(targets: &[Point], beta: Vec<bool>, speeds: Option<Vec<f64>>, alpha: Vec<bool>) -> Problem {
    let aps = aps();
    let rtts: Vec<RttVector> = targets
        .iter()
        .map(|p| RttVector::new(aps.positions.iter().map(|a| range_to_rtt(a.dist(*p).max(0.5))).collect()).unwrap())
        .collect();
    let features = build_pels_and_f2(&rtts, &aps, 3).unwrap();
    let mut seg = CourseSegmentation::uniform(beta).unwrap();
    if let Some(v) = speeds {
        seg.speed_ratio = v;
    }
    let graphs = MobilityGraphs::build(&seg.courses, targets.len(), 2).unwrap();
    let truth: Vec<Option<Point>> = targets.iter().copied().map(Some).collect();
    Problem::new(&graphs, &features, Routing::default(), &seg, targets, &alpha, &truth).unwrap()
}

fn output(b: &[Point], a: &[Point]) -> ModelOutput {
    let mat = |p: &[Point]| Array2::from_shape_fn((p.len(), 2), |(i, j)| if j == 0 { p[i].x } else { p[i].y });
    let branch = |feature, graph, pts: &[Point]| BranchOutput {
        branch: Branch { feature, graph },
        hidden: Array2::zeros((pts.len(), 1)),
        out: mat(pts),
    };
    ModelOutput {
        branches: vec![branch(FeatureKind::F1, GraphKind::Tmg, a), branch(FeatureKind::F2, GraphKind::Dmg, b)],
    }
}

fn pts(v: &[(f64, f64)]) -> Vec<Point> {
    v.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

#[test]
fn uneven_steps_give_quarter_variance() {
    let b = pts(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)]);
    let p = problem(&b, vec![false, false, true], None, vec![false; 3]);
    let (l, _) = loss_on_outputs(&output(&b, &b), &p, 3.0, false, None, false);
    assert_eq!(l.mr, 0.25);
    assert_eq!((l.mse1, l.mse2), (0.0, 0.0));
    assert_eq!(l.total, 3.0 * 0.25 / 4.0);
}

#[test]
fn perfect_fit_costs_nothing() {
    let b = pts(&[(2.0, 3.0), (3.0, 3.0), (4.0, 3.0), (5.0, 3.0)]);
    let p = problem(&b, vec![false, false, false, true], None, vec![true; 4]);
    let (l, grads) = loss_on_outputs(&output(&b, &b), &p, 3.0, false, None, true);
    assert_eq!((l.mse1, l.mse2, l.mr, l.total), (0.0, 0.0, 0.0, 0.0));
    assert!(grads.iter().all(|g| g.iter().all(|&v| v == 0.0)));
}

#[test]
fn equal_paces_have_no_regularizer_gradient() {
    // Steps of 2 m on a course at pace 2 and 1 m on a course at pace 1.
    let b = pts(&[(2.0, 2.0), (4.0, 2.0), (6.0, 2.0), (6.0, 3.0), (6.0, 4.0)]);
    let p = problem(&b, vec![false, false, true, false, true], Some(vec![2.0, 1.0]), vec![false; 5]);
    let (l, grads) = loss_on_outputs(&output(&b, &b), &p, 10.0, false, None, true);
    assert!(l.mr < 1e-24);
    assert!(grads.iter().all(|g| g.iter().all(|&v| v.abs() < 1e-12)));
}

proptest! {
    #[test]
    fn regularizer_scales_quadratically(
        steps in prop::collection::vec((0.1f64..3.0, -1.0f64..1.0), 3..12),
        s in 0.1f64..10.0,
    ) {
        let mut b = vec![Point::new(1.0, 1.0)];
        for (len, turn) in &steps {
            let last = *b.last().unwrap();
            b.push(last + Point::new(len * turn.cos(), len * turn.sin()));
        }
        let n = b.len();
        let mut beta = vec![false; n];
        beta[n / 2] = true;
        beta[n - 1] = true;
        let p = problem(&b, beta, Some(vec![1.0, 1.7]), vec![false; n]);
        let scaled: Vec<Point> = b.iter().map(|q| *q * s).collect();
        let base = loss_on_outputs(&output(&b, &b), &p, 1.0, false, None, false).0.mr;
        let big = loss_on_outputs(&output(&scaled, &scaled), &p, 1.0, false, None, false).0.mr;
        prop_assert!((big - s * s * base).abs() <= 1e-9 * big.max(1.0));
    }

    #[test]
    fn total_matches_its_definition(lambda in 0.0f64..30.0, shift in -2.0f64..2.0) {
        let t = pts(&[(2.0, 2.0), (3.0, 2.5), (5.0, 2.0), (6.0, 4.0)]);
        let b: Vec<Point> = t.iter().map(|q| *q + Point::new(shift, 0.5)).collect();
        let a: Vec<Point> = t.iter().map(|q| *q - Point::new(0.3, shift)).collect();
        let p = problem(&t, vec![false, true, false, true], None, vec![true, false, false, true]);
        let (l, _) = loss_on_outputs(&output(&b, &a), &p, lambda, false, None, false);
        let want = (l.mse1 / 2.0 + l.mse2 / 2.0) / (1.0 + lambda) + lambda * l.mr / (1.0 + lambda);
        prop_assert!((l.total - want).abs() < 1e-12);
        prop_assert!(l.mse1 >= 0.0 && l.mse2 >= 0.0 && l.mr >= 0.0);
    }
}

fn small_cfg() -> TrainConfig {
    TrainConfig {
        max_epochs: 60,
        patience: 20,
        hidden: 6,
        seed: 4,
        ..TrainConfig::default()
    }
}

fn walk() -> (Scenario, Problem) {
    let sc = generate(&preset("type2").unwrap(), 8).unwrap();
    let pre = mingle_core::harness::preprocess(&sc, 2).unwrap();
    let p = Problem::new(
        &pre.graphs,
        &pre.features,
        Routing::default(),
        &pre.segmentation,
        &pre.cda.labels,
        &vec![false; sc.n_mps()],
        &sc.gt,
    )
    .unwrap();
    (sc, p)
}

#[test]
fn single_repetition_is_its_own_best_model() {
    let (_, p) = walk();
    let cfg = TrainConfig { repetitions: 1, ..small_cfg() };
    let out = train(&p, &cfg).unwrap();
    let fwd = forward_prepared(&out.params, &p.prepared).unwrap();
    let est = fwd.estimate();
    for (i, q) in out.estimate.iter().enumerate() {
        assert_eq!((q.x, q.y), (est[[i, 0]], est[[i, 1]]));
    }
    assert_eq!(out.repetitions.len(), 1);
}

#[test]
fn repetitions_take_the_median_of_single_runs() {
    let (_, p) = walk();
    let cfg = TrainConfig { repetitions: 3, ..small_cfg() };
    let joint = train(&p, &cfg).unwrap().estimate;
    let singles: Vec<Vec<Point>> = (0..3)
        .map(|r| {
            let c = TrainConfig { repetitions: 1, seed: cfg.seed + r, ..cfg.clone() };
            train(&p, &c).unwrap().estimate
        })
        .collect();
    for (i, q) in joint.iter().enumerate() {
        let mut xs: Vec<f64> = singles.iter().map(|s| s[i].x).collect();
        let mut ys: Vec<f64> = singles.iter().map(|s| s[i].y).collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        assert_eq!((q.x, q.y), (xs[1], ys[1]));
    }
}

#[test]
fn pipeline_is_deterministic_and_seed_sensitive() {
    let (sc, _) = walk();
    let cfg = small_cfg();
    let a = localize(&sc, Method::Mingle, Mode::SelfSupervised, &cfg).unwrap();
    let b = localize(&sc, Method::Mingle, Mode::SelfSupervised, &cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.config_hash, b.config_hash);
    let c = localize(&sc, Method::Mingle, Mode::SelfSupervised, &TrainConfig { seed: 5, ..cfg }).unwrap();
    assert_ne!(a.to_csv(), c.to_csv());
    assert_ne!(a.config_hash, c.config_hash);
}

#[test]
fn scenario_file_round_trips() {
    let (sc, _) = walk();
    let json = sc.to_json().unwrap();
    let back = Scenario::from_json(&json).unwrap();
    assert_eq!(back, sc);
    assert_eq!(back.to_json().unwrap(), json);
}

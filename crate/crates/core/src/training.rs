//! Loss, gradients and the Adam training loop.
//!
//! The objective mixes supervised error and pace regularization:
//!
//! ```text
//! total = (MSE1 / 2 + MSE2 / 2) / (1 + lambda) + lambda * MR / (1 + lambda)
//! ```
//!
//! `MSE1` compares every branch output with ground truth on labeled MPs,
//! `MSE2` compares it with the CDA pseudo-label on unlabeled MPs, and `MR`
//! is the population variance of the speed-normalized step lengths
//! `gamma_n = |b_n - b_{n-1}| / v(course of n)` of the estimate branch.

use std::fmt::Write as _;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{median, FeatureSet};
use crate::gcn::{self, GcnParams, ModelOutput, Prepared, Routing};
use crate::graphs::MobilityGraphs;
use crate::sensing::CourseSegmentation;
use crate::{Error, Point, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub repetitions: usize,
    pub val_fraction: f64,
    pub lambda: f64,
    /// TMG half-width used when the graphs are built from this config.
    pub epsilon: usize,
    pub hidden: usize,
    pub seed: u64,
    pub routing: Routing,
    /// Reuse the first repetition's validation split for all repetitions.
    pub freeze_split: bool,
    /// Drop `gamma_n` when `n` opens a new course.
    pub exclude_course_boundaries: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            max_epochs: 6000,
            patience: 200,
            repetitions: 5,
            val_fraction: 0.2,
            lambda: 3.0,
            epsilon: crate::graphs::DEFAULT_EPSILON,
            hidden: gcn::DEFAULT_HIDDEN,
            seed: 0,
            routing: Routing::default(),
            freeze_split: false,
            exclude_course_boundaries: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.max_epochs > 0
            && self.repetitions > 0
            && self.patience <= self.max_epochs
            && self.val_fraction > 0.0
            && self.val_fraction < 1.0
            && self.lambda >= 0.0
            && self.lambda.is_finite()
            && self.hidden > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::contract(format!("invalid training configuration {self:?}")))
        }
    }
}

/// Everything the loss needs besides the network output.
#[derive(Debug, Clone)]
pub struct Problem {
    pub prepared: Prepared,
    /// Ground truth on labeled MPs, CDA pseudo-label elsewhere.
    pub targets: Vec<Point>,
    pub labeled: Vec<bool>,
    /// Speed ratio of the course containing each MP.
    pub node_speed: Vec<f64>,
    /// True where an MP opens a new course (never for MP 0).
    pub course_start: Vec<bool>,
}

impl Problem {
    /// `alpha[n]` marks MPs whose `truth[n]` is used as a label.
    pub fn new(
        graphs: &MobilityGraphs,
        features: &FeatureSet,
        routing: Routing,
        segmentation: &CourseSegmentation,
        pseudo_labels: &[Point],
        alpha: &[bool],
        truth: &[Option<Point>],
    ) -> Result<Self> {
        let n = graphs.n_nodes();
        if n < 3 {
            return Err(Error::contract(format!("training needs at least 3 MPs, got {n}")));
        }
        if pseudo_labels.len() != n || alpha.len() != n || segmentation.len() != n {
            return Err(Error::contract("labels, mask and segmentation must cover every MP"));
        }
        let mut targets = pseudo_labels.to_vec();
        for (i, &a) in alpha.iter().enumerate() {
            if a {
                targets[i] = truth
                    .get(i)
                    .copied()
                    .flatten()
                    .ok_or_else(|| Error::contract(format!("MP {i} is marked labeled but has no ground truth")))?;
            }
        }
        let course_of = segmentation.course_of();
        let node_speed = course_of.iter().map(|&l| segmentation.speed_ratio[l]).collect();
        let mut course_start = vec![false; n];
        for &(s, _) in segmentation.courses.iter().skip(1) {
            course_start[s] = true;
        }
        Ok(Self {
            prepared: Prepared::new(graphs, features, routing)?,
            targets,
            labeled: alpha.to_vec(),
            node_speed,
            course_start,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.targets.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub mse1: f64,
    pub mse2: f64,
    pub mr: f64,
    pub total: f64,
}

/// Speed-normalized step lengths `(n, gamma_n, step)` of the estimate.
fn gammas(b: &Array2<f64>, problem: &Problem, exclude_boundaries: bool, active: Option<&[bool]>) -> Vec<(usize, f64, Point)> {
    (1..b.nrows())
        .filter(|&n| active.is_none_or(|a| a[n]))
        .filter(|&n| !(exclude_boundaries && problem.course_start[n]))
        .map(|n| {
            let step = Point::new(b[[n, 0]] - b[[n - 1, 0]], b[[n, 1]] - b[[n - 1, 1]]);
            (n, step.norm() / problem.node_speed[n], step)
        })
        .collect()
}

/// Loss over the `active` MPs (all of them when `None`) and, when
/// requested, its gradient with respect to each branch output.
pub fn loss_on_outputs(
    output: &ModelOutput,
    problem: &Problem,
    lambda: f64,
    exclude_boundaries: bool,
    active: Option<&[bool]>,
    want_grad: bool,
) -> (LossBreakdown, Vec<Array2<f64>>) {
    let scale = 1.0 / (1.0 + lambda);
    let mut grads: Vec<Array2<f64>> = if want_grad {
        output.branches.iter().map(|b| Array2::zeros(b.out.dim())).collect()
    } else {
        Vec::new()
    };
    let (mut mse1, mut mse2) = (0.0, 0.0);
    for (bi, branch) in output.branches.iter().enumerate() {
        for (n, target) in problem.targets.iter().enumerate() {
            if active.is_some_and(|a| !a[n]) {
                continue;
            }
            let dx = branch.out[[n, 0]] - target.x;
            let dy = branch.out[[n, 1]] - target.y;
            let sq = dx * dx + dy * dy;
            if problem.labeled[n] {
                mse1 += sq;
            } else {
                mse2 += sq;
            }
            if want_grad {
                grads[bi][[n, 0]] += scale * dx;
                grads[bi][[n, 1]] += scale * dy;
            }
        }
    }

    let b = output.estimate();
    let g = gammas(b, problem, exclude_boundaries, active);
    let mut mr = 0.0;
    if !g.is_empty() {
        let k = g.len() as f64;
        let mean = g.iter().map(|t| t.1).sum::<f64>() / k;
        mr = g.iter().map(|t| (t.1 - mean).powi(2)).sum::<f64>() / k;
        if want_grad && lambda > 0.0 {
            let last = grads.len() - 1;
            let gb = &mut grads[last];
            for &(n, gamma, step) in &g {
                let len = step.norm();
                if len == 0.0 {
                    continue;
                }
                let coef = lambda * scale * 2.0 * (gamma - mean) / k / (len * problem.node_speed[n]);
                gb[[n, 0]] += coef * step.x;
                gb[[n, 1]] += coef * step.y;
                gb[[n - 1, 0]] -= coef * step.x;
                gb[[n - 1, 1]] -= coef * step.y;
            }
        }
    }
    let total = (mse1 / 2.0 + mse2 / 2.0) * scale + lambda * mr * scale;
    (LossBreakdown { mse1, mse2, mr, total }, grads)
}

pub fn loss(params: &GcnParams, problem: &Problem, lambda: f64, exclude_boundaries: bool) -> Result<LossBreakdown> {
    let out = gcn::forward_prepared(params, &problem.prepared)?;
    Ok(loss_on_outputs(&out, problem, lambda, exclude_boundaries, None, false).0)
}

/// Loss and its exact parameter gradient over the `active` MPs.
pub fn loss_and_gradient(
    params: &GcnParams,
    problem: &Problem,
    lambda: f64,
    exclude_boundaries: bool,
    active: Option<&[bool]>,
) -> Result<(LossBreakdown, GcnParams, ModelOutput)> {
    let out = gcn::forward_prepared(params, &problem.prepared)?;
    let (l, d_out) = loss_on_outputs(&out, problem, lambda, exclude_boundaries, active, true);
    let grad = gcn::backward(params, &problem.prepared, &out, &d_out);
    Ok((l, grad, out))
}

/// Gradient of the full loss; a thin wrapper for checking and tooling.
pub fn gradients(params: &GcnParams, problem: &Problem, lambda: f64, exclude_boundaries: bool) -> Result<GcnParams> {
    Ok(loss_and_gradient(params, problem, lambda, exclude_boundaries, None)?.1)
}

#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    step: i32,
    m: GcnParams,
    v: GcnParams,
}

impl Adam {
    pub fn new(lr: f64, like: &GcnParams) -> Self {
        let zeros = GcnParams::zeros(like.lift.nrows(), like.lift.ncols(), like.hidden());
        Self {
            lr,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn update(&mut self, params: &mut GcnParams, grad: &GcnParams) {
        self.step += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.step);
        let c2 = 1.0 - ADAM_BETA2.powi(self.step);
        let lr = self.lr;
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad.iter())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
            });
        }
    }
}

/// Validation membership per MP. Labeled MPs always train; the
/// `floor(fraction * N)` validation MPs are drawn from the unlabeled ones.
pub fn split_nodes(labeled: &[bool], fraction: f64, seed: u64) -> Vec<bool> {
    let n = labeled.len();
    let mut pool: Vec<usize> = (0..n).filter(|&i| !labeled[i]).collect();
    let want = ((fraction * n as f64).floor() as usize).min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let mut val = vec![false; n];
    for &i in &pool[..want] {
        val[i] = true;
    }
    val
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub repetition: usize,
    pub epoch: usize,
    pub train: LossBreakdown,
    pub val_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionSummary {
    pub seed: u64,
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_val: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Per-coordinate median over converged repetitions of the estimate branch.
    pub estimate: Vec<Point>,
    /// Same for the TMG branch of a cross routing.
    pub companion: Option<Vec<Point>>,
    pub repetitions: Vec<RepetitionSummary>,
    pub log: Vec<EpochRecord>,
    /// Best parameters of the first converged repetition.
    pub params: GcnParams,
}

fn to_points(m: &Array2<f64>) -> Vec<Point> {
    m.rows().into_iter().map(|r| Point::new(r[0], r[1])).collect()
}

fn median_trajectory(runs: &[Vec<Point>]) -> Vec<Point> {
    let n = runs[0].len();
    (0..n)
        .map(|i| {
            let mut xs: Vec<f64> = runs.iter().map(|r| r[i].x).collect();
            let mut ys: Vec<f64> = runs.iter().map(|r| r[i].y).collect();
            Point::new(median(&mut xs), median(&mut ys))
        })
        .collect()
}

struct RepResult {
    summary: RepetitionSummary,
    params: GcnParams,
    output: ModelOutput,
}

fn run_repetition(problem: &Problem, cfg: &TrainConfig, rep: usize, val: &[bool], log: &mut Vec<EpochRecord>) -> Result<RepResult> {
    let seed = cfg.seed.wrapping_add(rep as u64);
    let prepared = &problem.prepared;
    let q = prepared.two_q / 2;
    let mut params = gcn::init_params(prepared.n_aps, q, cfg.hidden, seed)?;
    let mut adam = Adam::new(cfg.learning_rate, &params);
    let train: Vec<bool> = val.iter().map(|v| !v).collect();
    let has_val = val.iter().any(|&v| v);

    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut epochs = 0;
    let mut diverged = false;
    for epoch in 0..cfg.max_epochs {
        let (l, grad, out) = loss_and_gradient(&params, problem, cfg.lambda, cfg.exclude_course_boundaries, Some(&train))?;
        let val_total = if has_val {
            loss_on_outputs(&out, problem, cfg.lambda, cfg.exclude_course_boundaries, Some(val), false).0.total
        } else {
            l.total
        };
        epochs = epoch + 1;
        log.push(EpochRecord {
            repetition: rep,
            epoch,
            train: l,
            val_total,
        });
        if !(l.total.is_finite() && val_total.is_finite()) {
            diverged = true;
            break;
        }
        if val_total < best_val {
            best_val = val_total;
            best_epoch = epoch;
            best.clone_from(&params);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
        adam.update(&mut params, &grad);
    }
    let output = gcn::forward_prepared(&best, prepared)?;
    if output.branches.iter().any(|b| b.out.iter().any(|v| !v.is_finite())) {
        diverged = true;
    }
    Ok(RepResult {
        summary: RepetitionSummary {
            seed,
            epochs,
            best_epoch,
            best_val,
            diverged,
        },
        params: best,
        output,
    })
}

/// Trains `repetitions` independently seeded models and takes the
/// per-coordinate median of their best-validation estimates.
pub fn train(problem: &Problem, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut log = Vec::new();
    let mut summaries = Vec::new();
    let mut estimates = Vec::new();
    let mut companions = Vec::new();
    let mut first_params = None;
    for rep in 0..cfg.repetitions {
        let split_seed = if cfg.freeze_split { cfg.seed } else { cfg.seed.wrapping_add(rep as u64) };
        let val = split_nodes(&problem.labeled, cfg.val_fraction, split_seed ^ 0x5851_f42d_4c95_7f2d);
        let r = run_repetition(problem, cfg, rep, &val, &mut log)?;
        if !r.summary.diverged {
            estimates.push(to_points(r.output.estimate()));
            if let Some(a) = r.output.companion() {
                companions.push(to_points(a));
            }
            first_params.get_or_insert(r.params);
        }
        summaries.push(r.summary);
    }
    let params = first_params.ok_or_else(|| Error::Numerical("every training repetition diverged".into()))?;
    Ok(TrainOutcome {
        estimate: median_trajectory(&estimates),
        companion: (!companions.is_empty()).then(|| median_trajectory(&companions)),
        repetitions: summaries,
        log,
        params,
    })
}

/// Per-epoch loss log as CSV.
pub fn loss_log_csv(log: &[EpochRecord]) -> String {
    let mut s = String::from("repetition,epoch,train_total,train_mse1,train_mse2,train_mr,val_total\n");
    for r in log {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.repetition, r.epoch, r.train.total, r.train.mse1, r.train.mse2, r.train.mr, r.val_total
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureSet;
    use crate::gcn::init_params;
    use ndarray::Array2;
    use rand::Rng;

    pub(crate) fn toy_problem(n: usize, m: usize, q: usize, seed: u64, courses: &[(usize, usize)]) -> (Problem, MobilityGraphs, FeatureSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features = FeatureSet {
            f1: Array2::from_shape_simple_fn((n, m), || rng.random_range(0.1..1.0)),
            f2: Array2::from_shape_simple_fn((n, 2 * q), || rng.random_range(0.1..1.0)),
            pels: vec![vec![Point::default(); q]; n],
            pel_filled: vec![vec![false; q]; n],
            combos: vec![vec![0, 1, 2]; q],
            frame_offset: Point::default(),
            f2_abs_normalized: vec![false; n],
        };
        let graphs = MobilityGraphs::build(courses, n, 1).unwrap();
        let mut beta = vec![false; n];
        for &(_, e) in courses {
            beta[e] = true;
        }
        let mut seg = CourseSegmentation::uniform(beta).unwrap();
        seg.speed_ratio = (0..courses.len()).map(|i| 1.0 + 0.5 * i as f64).collect();
        let labels: Vec<Point> = (0..n).map(|_| Point::new(rng.random_range(0.0..5.0), rng.random_range(0.0..5.0))).collect();
        let truth: Vec<Option<Point>> = (0..n).map(|i| Some(Point::new(i as f64 * 0.3, 1.0))).collect();
        let alpha: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let p = Problem::new(&graphs, &features, Routing::default(), &seg, &labels, &alpha, &truth).unwrap();
        (p, graphs, features)
    }

    #[test]
    fn loss_terms_by_hand() {
        let (problem, _, _) = toy_problem(6, 4, 4, 1, &[(0, 2), (3, 5)]);
        let params = init_params(4, 4, 3, 5).unwrap();
        let out = gcn::forward_prepared(&params, &problem.prepared).unwrap();
        let lambda = 3.0;
        let (l, _) = loss_on_outputs(&out, &problem, lambda, false, None, false);

        let (mut m1, mut m2) = (0.0, 0.0);
        for br in &out.branches {
            for n in 0..6 {
                let t = problem.targets[n];
                let e = (br.out[[n, 0]] - t.x).powi(2) + (br.out[[n, 1]] - t.y).powi(2);
                if problem.labeled[n] {
                    m1 += e;
                } else {
                    m2 += e;
                }
            }
        }
        let b = out.estimate();
        let speed = [1.0, 1.0, 1.0, 1.5, 1.5, 1.5];
        let g: Vec<f64> = (1..6)
            .map(|n| ((b[[n, 0]] - b[[n - 1, 0]]).powi(2) + (b[[n, 1]] - b[[n - 1, 1]]).powi(2)).sqrt() / speed[n])
            .collect();
        let mean = g.iter().sum::<f64>() / 5.0;
        let mr = g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
        assert!((l.mse1 - m1).abs() < 1e-9 && (l.mse2 - m2).abs() < 1e-9);
        assert!((l.mr - mr).abs() < 1e-12);
        let total = (m1 / 2.0 + m2 / 2.0) / 4.0 + 3.0 * mr / 4.0;
        assert!((l.total - total).abs() < 1e-9);

        let (lz, _) = loss_on_outputs(&out, &problem, 0.0, false, None, false);
        assert!((lz.total - (m1 + m2) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn boundary_gamma_can_be_excluded() {
        let (problem, _, _) = toy_problem(6, 4, 4, 2, &[(0, 2), (3, 5)]);
        let params = init_params(4, 4, 3, 5).unwrap();
        let out = gcn::forward_prepared(&params, &problem.prepared).unwrap();
        assert_eq!(gammas(out.estimate(), &problem, false, None).len(), 5);
        let kept = gammas(out.estimate(), &problem, true, None);
        assert_eq!(kept.iter().map(|g| g.0).collect::<Vec<_>>(), vec![1, 2, 4, 5]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (problem, _, _) = toy_problem(7, 4, 4, 3, &[(0, 3), (4, 6)]);
        let params = init_params(4, 4, 3, 11).unwrap();
        let (_, grad, _) = loss_and_gradient(&params, &problem, 3.0, false, None).unwrap();
        let h = 1e-5;
        for which in 0..3 {
            let len = params.iter().nth(which).unwrap().len();
            for idx in 0..len {
                let bumped = |delta: f64| {
                    let mut p = params.clone();
                    p.iter_mut().nth(which).unwrap().as_slice_mut().unwrap()[idx] += delta;
                    loss(&p, &problem, 3.0, false).unwrap().total
                };
                let (up, down) = (bumped(h), bumped(-h));
                let fd = (up - down) / (2.0 * h);
                let an = grad.iter().nth(which).unwrap().as_slice().unwrap()[idx];
                let denom = fd.abs().max(an.abs());
                if denom > 1e-10 {
                    assert!((fd - an).abs() / denom < 1e-5 || (fd - an).abs() < 1e-8, "param {which}/{idx}: {an} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn too_few_nodes_rejected() {
        let fs = FeatureSet {
            f1: Array2::ones((2, 3)),
            f2: Array2::ones((2, 2)),
            pels: vec![vec![Point::default()]; 2],
            pel_filled: vec![vec![false]; 2],
            combos: vec![vec![0, 1, 2]],
            frame_offset: Point::default(),
            f2_abs_normalized: vec![false; 2],
        };
        let g = MobilityGraphs::build(&[(0, 1)], 2, 1).unwrap();
        let seg = CourseSegmentation::uniform(vec![false, true]).unwrap();
        let r = Problem::new(&g, &fs, Routing::default(), &seg, &[Point::default(); 2], &[false; 2], &[None, None]);
        assert!(r.is_err());
    }

    #[test]
    fn split_respects_labels() {
        let labeled: Vec<bool> = (0..20).map(|i| i < 5).collect();
        let val = split_nodes(&labeled, 0.2, 7);
        assert_eq!(val.iter().filter(|v| **v).count(), 4);
        assert!(val[..5].iter().all(|v| !v));
        assert_eq!(val, split_nodes(&labeled, 0.2, 7));
        let all = vec![true; 10];
        assert!(split_nodes(&all, 0.2, 1).iter().all(|v| !v));
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = GcnParams::zeros(1, 2, 1);
        let mut g = GcnParams::zeros(1, 2, 1);
        g.w1[[0, 0]] = 5.0;
        g.w1[[1, 0]] = -0.001;
        let mut adam = Adam::new(0.01, &p);
        adam.update(&mut p, &g);
        assert!((p.w1[[0, 0]] + 0.01).abs() < 1e-9);
        assert!((p.w1[[1, 0]] - 0.01).abs() < 1e-6);
        assert_eq!(p.lift[[0, 0]], 0.0);
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let (problem, _, _) = toy_problem(12, 4, 4, 4, &[(0, 5), (6, 11)]);
        let cfg = TrainConfig {
            max_epochs: 300,
            repetitions: 2,
            hidden: 8,
            seed: 3,
            ..TrainConfig::default()
        };
        let a = train(&problem, &cfg).unwrap();
        let b = train(&problem, &cfg).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.repetitions.len(), 2);
        let first = a.log.first().unwrap().train.total;
        let best = a.log.iter().filter(|r| r.repetition == 0).map(|r| r.train.total).fold(f64::INFINITY, f64::min);
        assert!(best < first * 0.5, "{first} -> {best}");
        assert!(loss_log_csv(&a.log).starts_with("repetition,epoch,"));
    }

    #[test]
    fn median_of_runs() {
        let runs = vec![
            vec![Point::new(0.0, 1.0)],
            vec![Point::new(2.0, 5.0)],
            vec![Point::new(1.0, -1.0)],
        ];
        assert_eq!(median_trajectory(&runs), vec![Point::new(1.0, 1.0)]);
    }
}

//! Reference localizers: per-MP multilateration, CDA pseudo-labels and a
//! linear Kalman filter that fuses the multilateration fixes with IMU
//! heading and pace.
//!
//! The filter state is `(x, y, vx, vy)`. Between MPs the velocity is
//! rotated by the measured heading change and rescaled by the ratio of
//! the course speed ratios, then carried forward at constant velocity.
//! The measurement is the position fix itself, so the "extended" filter
//! is an ordinary Kalman filter here. Updates use the Joseph form.

use ndarray::{arr2, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::geometry::{lls_multilaterate, RttVector};
use crate::harness::{Preprocessed, Scenario, TrajectoryEstimate};
use crate::sensing::heading_change;
use crate::{Error, Point, Result};

/// Per-MP least-squares fixes. A degenerate MP repeats the previous fix
/// (the AP centroid for the first MP) and is flagged.
pub fn lls_rs_fixes(aps: &[Point], rtts: &[RttVector]) -> Result<(Vec<Point>, Vec<bool>)> {
    let centroid = aps.iter().fold(Point::default(), |acc, p| acc + *p) * (1.0 / aps.len().max(1) as f64);
    let mut fixes = Vec::with_capacity(rtts.len());
    let mut flagged = Vec::with_capacity(rtts.len());
    for rtt in rtts {
        match lls_multilaterate(aps, &rtt.ranges()) {
            Ok(p) => {
                fixes.push(p);
                flagged.push(false);
            }
            Err(Error::DegenerateGeometry { .. }) | Err(Error::Numerical(_)) => {
                fixes.push(fixes.last().copied().unwrap_or(centroid));
                flagged.push(true);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((fixes, flagged))
}

pub fn lls_rs_trajectory(scenario: &Scenario) -> Result<TrajectoryEstimate> {
    let (coords, flagged) = lls_rs_fixes(&scenario.aps, &scenario.rtts()?)?;
    Ok(TrajectoryEstimate::new("lls", coords).with_flags(flagged))
}

pub fn cda_trajectory(pre: &Preprocessed) -> TrajectoryEstimate {
    TrajectoryEstimate::new("cda", pre.cda.labels.clone())
}

/// White-acceleration process noise intensity `q` (m^2/s^3) and fix
/// standard deviation `r` (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EkfParams {
    pub q: f64,
    pub r: f64,
    /// Prior standard deviation of the initial velocity (m/s).
    pub v0_sigma: f64,
}

impl Default for EkfParams {
    /// Best mean RMSE over [`EKF_GRID`] on the type3 preset, seeds 100..=104.
    fn default() -> Self {
        Self {
            q: 0.0,
            r: 1.0,
            v0_sigma: 2.0,
        }
    }
}

/// Coarse grid of `(q, r)` candidates the defaults were picked from.
pub const EKF_GRID: ([f64; 6], [f64; 5]) = ([0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1], [0.5, 1.0, 2.0, 4.0, 8.0]);

#[derive(Debug, Clone, PartialEq)]
pub struct EkfState {
    pub x: Array1<f64>,
    pub p: Array2<f64>,
}

impl EkfState {
    pub fn new(fix: Point, params: &EkfParams) -> Self {
        let (r2, v2) = (params.r * params.r, params.v0_sigma * params.v0_sigma);
        Self {
            x: Array1::from(vec![fix.x, fix.y, 0.0, 0.0]),
            p: Array2::from_diag(&Array1::from(vec![r2, r2, v2, v2])),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x[0], self.x[1])
    }

    /// Carry the state `dt` seconds forward after turning by `theta` and
    /// scaling the speed by `scale`.
    pub fn predict(&mut self, dt: f64, theta: f64, scale: f64, q: f64) {
        let (c, s) = (theta.cos() * scale, theta.sin() * scale);
        let f = arr2(&[
            [1.0, 0.0, dt * c, -dt * s],
            [0.0, 1.0, dt * s, dt * c],
            [0.0, 0.0, c, -s],
            [0.0, 0.0, s, c],
        ]);
        let (a, b, d) = (q * dt.powi(3) / 3.0, q * dt * dt / 2.0, q * dt);
        let qm = arr2(&[[a, 0.0, b, 0.0], [0.0, a, 0.0, b], [b, 0.0, d, 0.0], [0.0, b, 0.0, d]]);
        self.x = f.dot(&self.x);
        self.p = f.dot(&self.p).dot(&f.t()) + qm;
        symmetrize(&mut self.p);
    }

    /// Joseph-form update with a position fix of standard deviation `r`.
    pub fn update(&mut self, fix: Point, r: f64) -> Result<()> {
        let h = arr2(&[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]);
        let rm = Array2::from_diag(&Array1::from(vec![r * r, r * r]));
        let s = h.dot(&self.p).dot(&h.t()) + &rm;
        let det = s[[0, 0]] * s[[1, 1]] - s[[0, 1]] * s[[1, 0]];
        if !(det.is_finite() && det > 0.0) {
            return Err(Error::Numerical("innovation covariance is singular".into()));
        }
        let s_inv = arr2(&[[s[[1, 1]], -s[[0, 1]]], [-s[[1, 0]], s[[0, 0]]]]) / det;
        let k = self.p.dot(&h.t()).dot(&s_inv);
        let innovation = Array1::from(vec![fix.x - self.x[0], fix.y - self.x[1]]);
        self.x = &self.x + &k.dot(&innovation);
        let ikh = Array2::eye(4) - k.dot(&h);
        self.p = ikh.dot(&self.p).dot(&ikh.t()) + k.dot(&rm).dot(&k.t());
        symmetrize(&mut self.p);
        Ok(())
    }

    /// Symmetric with a non-negative spectrum (Cholesky with tolerance).
    pub fn covariance_is_psd(&self) -> bool {
        let p = &self.p;
        let n = p.nrows();
        for i in 0..n {
            for j in 0..i {
                if (p[[i, j]] - p[[j, i]]).abs() > 1e-9 * (1.0 + p[[i, j]].abs()) {
                    return false;
                }
            }
        }
        let scale = (0..n).map(|i| p[[i, i]].abs()).fold(0.0, f64::max).max(1e-300);
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let d = p[[j, j]] - (0..j).map(|k| l[[j, k]] * l[[j, k]]).sum::<f64>();
            if d < -1e-9 * scale {
                return false;
            }
            l[[j, j]] = d.max(0.0).sqrt();
            for i in j + 1..n {
                let v = p[[i, j]] - (0..j).map(|k| l[[i, k]] * l[[j, k]]).sum::<f64>();
                l[[i, j]] = if l[[j, j]] > 0.0 { v / l[[j, j]] } else { 0.0 };
            }
        }
        true
    }
}

fn symmetrize(p: &mut Array2<f64>) {
    let t = p.t().to_owned();
    *p = (&*p + &t) * 0.5;
}

/// Filters `fixes` with per-step heading changes `turns[n]` (turn between
/// MP `n` and MP `n + 1`) and per-MP speed ratios.
pub fn kalman_track(fixes: &[Point], turns: &[f64], speed: &[f64], dt: f64, params: &EkfParams) -> Result<Vec<Point>> {
    if fixes.is_empty() {
        return Ok(Vec::new());
    }
    if turns.len() + 1 < fixes.len() || speed.len() != fixes.len() {
        return Err(Error::contract("need one heading change per step and one speed per MP"));
    }
    let mut state = EkfState::new(fixes[0], params);
    let mut out = vec![fixes[0]];
    for n in 1..fixes.len() {
        state.predict(dt, turns[n - 1], speed[n] / speed[n - 1], params.q);
        state.update(fixes[n], params.r)?;
        debug_assert!(state.covariance_is_psd());
        out.push(state.position());
    }
    Ok(out)
}

pub fn ekf_trajectory(scenario: &Scenario, pre: &Preprocessed, params: &EkfParams) -> Result<TrajectoryEstimate> {
    let n = scenario.n_mps();
    let (fixes, flagged) = lls_rs_fixes(&scenario.aps, &scenario.rtts()?)?;
    let imu = scenario.imu();
    let turns = (0..n.saturating_sub(1)).map(|i| heading_change(&imu, i)).collect::<Result<Vec<_>>>()?;
    let course_of = pre.segmentation.course_of();
    let speed: Vec<f64> = course_of.iter().map(|&l| pre.segmentation.speed_ratio[l]).collect();
    let coords = kalman_track(&fixes, &turns, &speed, scenario.delta_s, params)?;
    Ok(TrajectoryEstimate::new("ekf", coords).with_flags(flagged))
}

use serde::{Deserialize, Serialize};

use crate::sensing::CourseSegmentation;
use crate::{Error, Point, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    pub rmse: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    /// Sorted absolute errors.
    pub cdf: Vec<f64>,
}

/// Linear interpolation between closest ranks of a sorted slice.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn report_from_errors(errors: &[f64]) -> Result<EvalReport> {
    if errors.is_empty() {
        return Err(Error::contract("no errors to summarize"));
    }
    let mut cdf = errors.to_vec();
    cdf.sort_by(f64::total_cmp);
    let n = cdf.len() as f64;
    Ok(EvalReport {
        mae: cdf.iter().sum::<f64>() / n,
        rmse: (cdf.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
        p50: percentile(&cdf, 0.50),
        p75: percentile(&cdf, 0.75),
        p95: percentile(&cdf, 0.95),
        cdf,
    })
}

/// Errors over the MPs that have ground truth.
pub fn evaluate(estimate: &[Point], truth: &[Option<Point>]) -> Result<EvalReport> {
    if estimate.len() != truth.len() {
        return Err(Error::contract(format!(
            "estimate has {} points, ground truth {}",
            estimate.len(),
            truth.len()
        )));
    }
    let errors: Vec<f64> = estimate
        .iter()
        .zip(truth)
        .filter_map(|(e, t)| t.map(|t| e.dist(t)))
        .collect();
    report_from_errors(&errors)
}

pub fn cdf_csv(report: &EvalReport) -> String {
    let mut s = String::from("error\n");
    for e in &report.cdf {
        s.push_str(&format!("{e}\n"));
    }
    s
}

/// Population variance of the speed-normalized steps of a trajectory.
pub fn gamma_variance(coords: &[Point], segmentation: &CourseSegmentation) -> f64 {
    let course_of = segmentation.course_of();
    let g: Vec<f64> = (1..coords.len())
        .map(|n| coords[n].dist(coords[n - 1]) / segmentation.speed_ratio[course_of[n]])
        .collect();
    if g.is_empty() {
        return 0.0;
    }
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / g.len() as f64
}

//! Input features and combinatorial pseudo-labels.
//!
//! `F1` stacks the sum-normalized RTT vectors. `F2` stacks the
//! sum-normalized concatenation of all preliminary estimated locations
//! (PELs): one least-squares fix per `K`-subset of APs. The same PELs feed
//! the combinatorial pseudo-labeling (CDA): keep the `Q1` fixes with the
//! smallest ranging residual, then the `Q2` of those with the smallest
//! RTT sum, and take the per-coordinate median.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::geometry::{lls_multilaterate, ApConstellation, Point, RttVector, SPEED_OF_LIGHT};
use crate::{Error, Result};

/// Sums smaller than this trigger the absolute-value normalization.
pub const F2_SUM_GUARD: f64 = 1e-6;

/// All `K`-subsets of `0..m` in lexicographic order.
pub fn enumerate_combos(m: usize, k: usize) -> Result<Vec<Vec<usize>>> {
    if k < 3 {
        return Err(Error::contract(format!("subset size must be at least 3, got {k}")));
    }
    if k > m {
        return Err(Error::contract(format!("subset size {k} exceeds AP count {m}")));
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // Rightmost position that can still advance.
        let Some(i) = (0..k).rev().find(|&i| idx[i] < m - k + i) else {
            return Ok(out);
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Median of a slice; the mean of the middle pair for even lengths.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Per-coordinate median of a point set.
pub fn median_point(points: &[Point]) -> Point {
    let mut xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let mut ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    Point::new(median(&mut xs), median(&mut ys))
}

fn check_rtts(rtts: &[RttVector], m: usize) -> Result<()> {
    if rtts.is_empty() {
        return Err(Error::contract("no RTT vectors"));
    }
    for (n, r) in rtts.iter().enumerate() {
        if r.len() != m {
            return Err(Error::contract(format!("MP {n}: {} RTTs for {m} APs", r.len())));
        }
        if r.tau.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::contract(format!("MP {n}: RTTs must be positive")));
        }
    }
    Ok(())
}

/// Row `n` is `tau_n / sum(tau_n)`.
pub fn build_f1(rtts: &[RttVector]) -> Result<Array2<f64>> {
    let m = rtts.first().map_or(0, RttVector::len);
    check_rtts(rtts, m)?;
    let mut f1 = Array2::zeros((rtts.len(), m));
    for (n, r) in rtts.iter().enumerate() {
        let sum: f64 = r.tau.iter().sum();
        for (j, t) in r.tau.iter().enumerate() {
            f1[[n, j]] = t / sum;
        }
    }
    Ok(f1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    /// N x M normalized RTTs.
    pub f1: Array2<f64>,
    /// N x 2Q normalized PEL concatenations.
    pub f2: Array2<f64>,
    /// PELs per MP in the caller's frame, `Q` per MP.
    pub pels: Vec<Vec<Point>>,
    /// Set where the combo was degenerate and the slot holds the median fill.
    pub pel_filled: Vec<Vec<bool>>,
    pub combos: Vec<Vec<usize>>,
    /// Translation applied before computing `f2` (AP coordinates >= 1 m).
    pub frame_offset: Point,
    /// Rows normalized by the absolute sum because the signed sum vanished.
    pub f2_abs_normalized: Vec<bool>,
}

impl FeatureSet {
    pub fn n_mps(&self) -> usize {
        self.f1.nrows()
    }

    pub fn n_aps(&self) -> usize {
        self.f1.ncols()
    }

    pub fn n_combos(&self) -> usize {
        self.combos.len()
    }
}

/// Shift that brings every AP coordinate to at least 1 m.
pub fn frame_offset(aps: &ApConstellation) -> Point {
    let min_x = aps.positions.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let min_y = aps.positions.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    Point::new(1.0 - min_x, 1.0 - min_y)
}

/// Fixes from every `K`-subset at one MP. Degenerate subsets get the
/// per-coordinate median of the successful fixes.
fn pels_at(aps: &[Point], ranges: &[f64], combos: &[Vec<usize>]) -> Option<(Vec<Point>, Vec<bool>)> {
    let raw: Vec<Option<Point>> = combos
        .iter()
        .map(|combo| {
            let za: Vec<Point> = combo.iter().map(|&m| aps[m]).collect();
            let ra: Vec<f64> = combo.iter().map(|&m| ranges[m]).collect();
            lls_multilaterate(&za, &ra).ok()
        })
        .collect();
    let ok: Vec<Point> = raw.iter().flatten().copied().collect();
    if ok.is_empty() {
        return None;
    }
    let fill = median_point(&ok);
    let filled = raw.iter().map(Option::is_none).collect();
    Some((raw.into_iter().map(|p| p.unwrap_or(fill)).collect(), filled))
}

pub fn build_pels_and_f2(rtts: &[RttVector], aps: &ApConstellation, k: usize) -> Result<FeatureSet> {
    let m = aps.len();
    check_rtts(rtts, m)?;
    let combos = enumerate_combos(m, k)?;
    let q = combos.len();
    let offset = frame_offset(aps);
    let shifted: Vec<Point> = aps.positions.iter().map(|&p| p + offset).collect();

    let n = rtts.len();
    let mut pels = Vec::with_capacity(n);
    let mut pel_filled = Vec::with_capacity(n);
    let mut f2 = Array2::zeros((n, 2 * q));
    let mut f2_abs_normalized = vec![false; n];
    for (i, r) in rtts.iter().enumerate() {
        let (shifted_pels, filled) = pels_at(&shifted, &r.ranges(), &combos)
            .ok_or_else(|| Error::contract(format!("MP {i}: every AP subset is degenerate")))?;
        let sum: f64 = shifted_pels.iter().map(|p| p.x + p.y).sum();
        let denom = if sum.abs() < F2_SUM_GUARD {
            f2_abs_normalized[i] = true;
            shifted_pels.iter().map(|p| p.x.abs() + p.y.abs()).sum::<f64>()
        } else {
            sum
        };
        if !(denom.abs() > 0.0) {
            return Err(Error::Numerical(format!("MP {i}: PEL coordinates sum to zero")));
        }
        for (j, p) in shifted_pels.iter().enumerate() {
            f2[[i, 2 * j]] = p.x / denom;
            f2[[i, 2 * j + 1]] = p.y / denom;
        }
        pels.push(shifted_pels.iter().map(|&p| p - offset).collect());
        pel_filled.push(filled);
    }
    Ok(FeatureSet {
        f1: build_f1(rtts)?,
        f2,
        pels,
        pel_filled,
        combos,
        frame_offset: offset,
        f2_abs_normalized,
    })
}

/// Subset size and filter depths for pseudo-labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdaParams {
    pub k: usize,
    pub q1: usize,
    pub q2: usize,
}

impl CdaParams {
    /// `(3, 37, 12)` for 120 subsets; otherwise the same proportions.
    pub fn default_for(n_aps: usize) -> Self {
        let k = 3;
        let q = binomial(n_aps, k).max(1);
        if q == 120 {
            return Self { k, q1: 37, q2: 12 };
        }
        let q1 = ((0.31 * q as f64).ceil() as usize).clamp(1, q);
        let q2 = ((0.10 * q as f64).ceil() as usize).clamp(1, q1);
        Self { k, q1, q2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdaLabels {
    pub labels: Vec<Point>,
    pub params: CdaParams,
}

/// Pseudo-label for one MP. `candidates` are the subset indices eligible
/// for filtering; ties in either metric go to the lower subset index.
pub fn cda_point(
    pels: &[Point],
    candidates: &[usize],
    rtt: &RttVector,
    aps: &ApConstellation,
    combos: &[Vec<usize>],
    q1: usize,
    q2: usize,
) -> Point {
    let residual = |q: usize| -> f64 {
        combos[q]
            .iter()
            .map(|&m| (aps.positions[m].dist(pels[q]) - SPEED_OF_LIGHT * rtt.tau[m] / 2.0).abs())
            .sum()
    };
    let rtt_sum = |q: usize| -> f64 { combos[q].iter().map(|&m| rtt.tau[m]).sum() };

    let mut by_residual: Vec<(f64, usize)> = candidates.iter().map(|&q| (residual(q), q)).collect();
    by_residual.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    by_residual.truncate(q1.min(by_residual.len()));

    let mut by_rtt: Vec<(f64, usize)> = by_residual.iter().map(|&(_, q)| (rtt_sum(q), q)).collect();
    by_rtt.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    by_rtt.truncate(q2.min(by_rtt.len()));

    let kept: Vec<Point> = by_rtt.iter().map(|&(_, q)| pels[q]).collect();
    median_point(&kept)
}

/// Pseudo-labels for every MP. Degenerate (median-filled) subsets are not
/// candidates.
pub fn cda_label(features: &FeatureSet, rtts: &[RttVector], aps: &ApConstellation, params: CdaParams) -> Result<CdaLabels> {
    let q = features.n_combos();
    if !(1 <= params.q2 && params.q2 <= params.q1 && params.q1 <= q) {
        return Err(Error::contract(format!(
            "need 1 <= Q2 <= Q1 <= Q, got Q2={} Q1={} Q={q}",
            params.q2, params.q1
        )));
    }
    if params.k != features.combos.first().map_or(0, Vec::len) {
        return Err(Error::contract("CDA subset size differs from the feature subsets"));
    }
    if rtts.len() != features.n_mps() {
        return Err(Error::contract("RTT count differs from feature rows"));
    }
    let labels = features
        .pels
        .iter()
        .zip(&features.pel_filled)
        .zip(rtts)
        .map(|((pels, filled), rtt)| {
            let candidates: Vec<usize> = (0..q).filter(|&i| !filled[i]).collect();
            cda_point(pels, &candidates, rtt, aps, &features.combos, params.q1, params.q2)
        })
        .collect();
    Ok(CdaLabels { labels, params })
}

//! Time-driven (TMG) and direction-driven (DMG) mobility graphs.

use ndarray::Array2;

use crate::{Error, Result};

/// Default temporal adjacency half-width.
pub const DEFAULT_EPSILON: usize = 2;

/// `A[i][j] = 1` iff `|i - j| <= epsilon`.
pub fn build_tmg(n: usize, epsilon: usize) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::contract("graph needs at least one node"));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| if i.abs_diff(j) <= epsilon { 1.0 } else { 0.0 }))
}

/// Links MPs of the same course that are at most half the course length
/// apart; courses never link to each other.
pub fn build_dmg(courses: &[(usize, usize)], n: usize) -> Result<Array2<f64>> {
    let mut next = 0;
    for &(s, e) in courses {
        if s != next || e < s {
            return Err(Error::contract(format!(
                "courses must partition 0..{n} in order; found ({s}, {e}) after {next}"
            )));
        }
        next = e + 1;
    }
    if next != n {
        return Err(Error::contract(format!("courses cover 0..{next}, expected 0..{n}")));
    }
    let mut b = Array2::zeros((n, n));
    for &(s, e) in courses {
        let d = e - s + 1;
        let reach = d / 2;
        for i in s..=e {
            for j in i.saturating_sub(reach).max(s)..=(i + reach).min(e) {
                b[[i, j]] = 1.0;
            }
        }
    }
    Ok(b)
}

/// `D^{-1/2} M D^{-1/2}` with `D` the row sums.
pub fn normalize_adjacency(m: &Array2<f64>) -> Result<Array2<f64>> {
    let inv_sqrt: Vec<f64> = m
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let d = row.sum();
            if d > 0.0 {
                Ok(1.0 / d.sqrt())
            } else {
                Err(Error::contract(format!("node {i} has zero degree")))
            }
        })
        .collect::<Result<_>>()?;
    Ok(Array2::from_shape_fn(m.dim(), |(i, j)| inv_sqrt[i] * m[[i, j]] * inv_sqrt[j]))
}

/// Both graphs with their normalizations.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityGraphs {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub a_norm: Array2<f64>,
    pub b_norm: Array2<f64>,
    pub epsilon: usize,
}

impl MobilityGraphs {
    pub fn build(courses: &[(usize, usize)], n: usize, epsilon: usize) -> Result<Self> {
        let a = build_tmg(n, epsilon)?;
        let b = build_dmg(courses, n)?;
        Ok(Self {
            a_norm: normalize_adjacency(&a)?,
            b_norm: normalize_adjacency(&b)?,
            a,
            b,
            epsilon,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.a.nrows()
    }
}

/// CSV dump of a binary adjacency, one row per line.
pub fn adjacency_csv(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{}", *v as u8)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

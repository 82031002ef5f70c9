//! Range conversion, least-squares multilateration and ranging error.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Propagation speed used for every RTT conversion (m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Normal matrices with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e8;

/// A planar coordinate in meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Known access point coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ApConstellation {
    pub positions: Vec<Point>,
}

impl ApConstellation {
    /// Requires at least three APs. Collinear layouts are accepted; use
    /// [`ApConstellation::is_collinear`] to warn about them.
    pub fn new(positions: Vec<Point>) -> Result<Self> {
        if positions.len() < 3 {
            return Err(Error::contract(format!(
                "need at least 3 APs, got {}",
                positions.len()
            )));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::contract("AP coordinates must be finite"));
        }
        Ok(Self { positions })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn is_collinear(&self) -> bool {
        let p0 = self.positions[0];
        let far = self
            .positions
            .iter()
            .copied()
            .max_by(|a, b| a.dist(p0).total_cmp(&b.dist(p0)))
            .unwrap_or(p0);
        let d = far - p0;
        let len = d.norm();
        if len == 0.0 {
            return true;
        }
        self.positions.iter().all(|p| {
            let v = *p - p0;
            (d.x * v.y - d.y * v.x).abs() / len <= 1e-9 * len.max(1.0)
        })
    }
}

/// One round-trip-time measurement per AP (seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RttVector {
    pub tau: Vec<f64>,
}

impl RttVector {
    pub fn new(tau: Vec<f64>) -> Result<Self> {
        if let Some(bad) = tau.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::contract(format!("RTT entries must be positive and finite, got {bad}")));
        }
        Ok(Self { tau })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn ranges(&self) -> Vec<f64> {
        self.tau.iter().map(|&t| SPEED_OF_LIGHT * t / 2.0).collect()
    }
}

/// Half the round-trip path at light speed.
pub fn rtt_to_range(tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::contract(format!("RTT must be positive, got {tau}")));
    }
    Ok(SPEED_OF_LIGHT * tau / 2.0)
}

pub fn range_to_rtt(range: f64) -> f64 {
    2.0 * range / SPEED_OF_LIGHT
}

/// Linear least-squares multilateration with reference selection.
///
/// The AP with the smallest measured range becomes the reference (NLoS
/// only ever inflates ranges, so it is the most trustworthy circle). Its
/// circle equation is subtracted from every other one, which leaves a
/// linear system `2 (z_i - z_r) . x = r_r^2 - r_i^2 + |z_i|^2 - |z_r|^2`
/// solved through its 2x2 normal equations.
pub fn lls_multilaterate(aps: &[Point], ranges: &[f64]) -> Result<Point> {
    if aps.len() < 3 {
        return Err(Error::contract(format!("need at least 3 APs, got {}", aps.len())));
    }
    if aps.len() != ranges.len() {
        return Err(Error::contract(format!(
            "{} APs but {} ranges",
            aps.len(),
            ranges.len()
        )));
    }
    let reference = ranges
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if *r < ranges[best] { i } else { best });
    let zr = aps[reference];
    let rr = ranges[reference];

    // Accumulate A^T A and A^T b directly.
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, (&z, &r)) in aps.iter().zip(ranges).enumerate() {
        if i == reference {
            continue;
        }
        let a = (z - zr) * 2.0;
        let b = rr * rr - r * r + z.dot(z) - zr.dot(zr);
        s11 += a.x * a.x;
        s12 += a.x * a.y;
        s22 += a.y * a.y;
        t1 += a.x * b;
        t2 += a.y * b;
    }

    let trace = s11 + s22;
    let det = s11 * s22 - s12 * s12;
    let disc = ((s11 - s22) * (s11 - s22) / 4.0 + s12 * s12).sqrt();
    let lmax = trace / 2.0 + disc;
    let lmin = det / lmax.max(f64::MIN_POSITIVE);
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateGeometry { condition });
    }
    let x = (s22 * t1 - s12 * t2) / det;
    let y = (s11 * t2 - s12 * t1) / det;
    let p = Point::new(x, y);
    if !p.is_finite() {
        return Err(Error::Numerical("multilateration produced a non-finite fix".into()));
    }
    Ok(p)
}

/// `| |z - x| - c tau / 2 |`.
pub fn ranging_error(ap: Point, truth: Point, tau: f64) -> Result<f64> {
    Ok((ap.dist(truth) - rtt_to_range(tau)?).abs())
}

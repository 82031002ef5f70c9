//! Synthetic walks with RTT, gyro and accelerometer streams.
//!
//! A walk is a list of straight legs. Each leg of length `L` walked at
//! speed `s` yields `round(L / (s * delta))` MPs spaced `s * delta` apart,
//! the last one sitting on the leg's end corner. MP `i` is observed at time
//! `i * delta`; a turn after MP `e` shows up as a raised-cosine gyro pulse
//! centered at `(e + 0.5) * delta`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::range_to_rtt;
use crate::harness::Scenario;
use crate::{Error, Point, Result};

pub const GRAVITY: f64 = 9.8;
/// Duration of the gyro pulse at each turn (s).
pub const TURN_DURATION_S: f64 = 0.5;
/// Ranges are clamped to at least this many meters.
pub const MIN_RANGE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    /// Direction of travel in radians, counter-clockwise from +x.
    pub heading: f64,
    pub length: f64,
    /// Walking speed (m/s).
    pub speed: f64,
}

impl Leg {
    pub fn new(heading: f64, length: f64, speed: f64) -> Self {
        Self { heading, length, speed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Gaussian ranging noise (m).
    pub sigma: f64,
    /// Probability that a link is non-line-of-sight.
    pub nlos_p: f64,
    /// Mean of the exponential NLoS excess (m).
    pub nlos_mu: f64,
    /// Gaussian gyro noise (rad/s).
    pub gyro_sigma: f64,
    /// Gaussian accelerometer noise (m/s^2).
    pub accel_sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            nlos_p: 0.3,
            nlos_mu: 3.0,
            gyro_sigma: 0.005,
            accel_sigma: 0.0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            sigma: 0.0,
            nlos_p: 0.0,
            nlos_mu: 0.0,
            gyro_sigma: 0.0,
            accel_sigma: 0.0,
        }
    }
}

/// Which MPs carry a ground-truth label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupervisionMask {
    None,
    /// Label the last MP of every course (`alpha = beta`).
    Corners,
    /// Label a uniformly drawn fraction of MPs.
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub start: Point,
    pub legs: Vec<Leg>,
    pub aps: Vec<Point>,
    /// Lower-left and upper-right site corners.
    pub site: (Point, Point),
    pub delta_s: f64,
    pub sample_rate: f64,
    /// Step frequency of the accelerometer oscillation (Hz).
    pub step_freq: f64,
    /// Speed that maps to a unit peak-to-valley gap.
    pub eta0: f64,
    pub noise: NoiseModel,
    pub mask: SupervisionMask,
}

/// Ten APs spread around the perimeter of the site.
fn perimeter_aps(lo: Point, hi: Point) -> Vec<Point> {
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    let at = |fx: f64, fy: f64| Point::new(lo.x + fx * w, lo.y + fy * h);
    vec![
        at(0.0, 0.0),
        at(1.0 / 3.0, 0.0),
        at(2.0 / 3.0, 0.0),
        at(1.0, 0.0),
        at(1.0, 0.5),
        at(1.0, 1.0),
        at(2.0 / 3.0, 1.0),
        at(1.0 / 3.0, 1.0),
        at(0.0, 1.0),
        at(0.0, 0.5),
    ]
}

const EAST: f64 = 0.0;
const NORTH: f64 = PI / 2.0;
const WEST: f64 = PI;
const SOUTH: f64 = 3.0 * PI / 2.0;

fn loop_legs(w: f64, h: f64, h_back: f64, horizontal: f64, vertical: f64) -> Vec<Leg> {
    vec![
        Leg::new(EAST, w, horizontal),
        Leg::new(NORTH, h, vertical),
        Leg::new(WEST, w, horizontal),
        Leg::new(SOUTH, h_back, vertical),
    ]
}

fn base_spec(name: &str, legs: Vec<Leg>, site: (Point, Point), start: Point) -> ScenarioSpec {
    ScenarioSpec {
        name: name.to_string(),
        start,
        legs,
        aps: perimeter_aps(site.0, site.1),
        site,
        delta_s: 1.0,
        sample_rate: 100.0,
        step_freq: 2.0,
        eta0: 1.0,
        noise: NoiseModel::default(),
        mask: SupervisionMask::None,
    }
}

pub const PRESETS: [&str; 5] = ["type1", "type2", "type3", "type4", "day3"];

/// Named walking patterns; all walk counter-clockwise.
pub fn preset(name: &str) -> Result<ScenarioSpec> {
    let site = |w, h| (Point::new(0.0, 0.0), Point::new(w, h));
    let spec = match name {
        // 25 x 10 m rectangle at 1 m/s: 70 MPs in 4 courses.
        "type1" => base_spec(name, loop_legs(25.0, 10.0, 10.0, 1.0, 1.0), site(35.0, 20.0), Point::new(5.0, 5.0)),
        // 12 x 5 m rectangle: 34 MPs.
        "type2" => base_spec(name, loop_legs(12.0, 5.0, 5.0, 1.0, 1.0), site(22.0, 15.0), Point::new(5.0, 5.0)),
        // Fast horizontal and slow vertical legs: 24 + 18 + 24 + 17 = 83 MPs.
        "type3" | "day3" => {
            let mut s = base_spec(name, loop_legs(24.0, 9.0, 8.5, 1.0, 0.5), site(34.0, 19.0), Point::new(5.0, 5.0));
            if name == "day3" {
                s.noise.sigma *= 2.0;
                s.noise.nlos_mu *= 2.0;
            }
            s
        }
        // Two nested loops: 48 + 47 = 95 MPs in 8 courses.
        "type4" => {
            let mut legs = loop_legs(16.0, 8.0, 8.0, 1.0, 1.0);
            legs.extend(loop_legs(18.0, 6.0, 5.0, 1.0, 1.0));
            let mut s = base_spec(name, legs, site(30.0, 18.0), Point::new(5.0, 5.0));
            s.mask = SupervisionMask::Corners;
            s
        }
        _ => {
            return Err(Error::contract(format!(
                "unknown preset {name:?}; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(spec)
}

/// Ground-truth MP positions and the (start, end) MP range of each leg.
pub fn trajectory(spec: &ScenarioSpec) -> Result<(Vec<Point>, Vec<(usize, usize)>)> {
    if spec.legs.is_empty() || !(spec.delta_s > 0.0) {
        return Err(Error::contract("a walk needs at least one leg and a positive MP interval"));
    }
    let (lo, hi) = spec.site;
    let inside = |p: Point| p.x >= lo.x - 1e-9 && p.x <= hi.x + 1e-9 && p.y >= lo.y - 1e-9 && p.y <= hi.y + 1e-9;
    if !inside(spec.start) {
        return Err(Error::contract("walk starts outside the site"));
    }
    let mut points = Vec::new();
    let mut ranges = Vec::new();
    let mut cursor = spec.start;
    for (l, leg) in spec.legs.iter().enumerate() {
        if !(leg.length > 0.0 && leg.speed > 0.0) {
            return Err(Error::contract(format!("leg {l} needs positive length and speed")));
        }
        let spacing = leg.speed * spec.delta_s;
        let count = (leg.length / spacing).round() as usize;
        if count == 0 {
            return Err(Error::contract(format!("leg {l} is shorter than one MP spacing")));
        }
        let dir = Point::new(leg.heading.cos(), leg.heading.sin());
        let s = points.len();
        for k in 1..=count {
            let p = cursor + dir * (k as f64 * spacing);
            if !inside(p) {
                return Err(Error::contract(format!("leg {l} leaves the site at ({:.2}, {:.2})", p.x, p.y)));
            }
            points.push(p);
        }
        cursor = *points.last().unwrap();
        ranges.push((s, points.len() - 1));
    }
    Ok((points, ranges))
}

fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Draws a full scenario. The same spec and seed always give the same
/// scenario.
pub fn generate(spec: &ScenarioSpec, seed: u64) -> Result<Scenario> {
    let noise = spec.noise;
    if !(noise.sigma >= 0.0 && noise.nlos_mu >= 0.0 && (0.0..=1.0).contains(&noise.nlos_p)) {
        return Err(Error::contract("noise parameters out of range"));
    }
    if !(spec.sample_rate > 0.0 && spec.step_freq > 0.0 && spec.eta0 > 0.0) {
        return Err(Error::contract("sample rate, step frequency and eta0 must be positive"));
    }
    let (gt, legs) = trajectory(spec)?;
    let n = gt.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let nlos = Bernoulli::new(noise.nlos_p).map_err(|e| Error::contract(e.to_string()))?;
    let gauss = |sd: f64| Normal::new(0.0, sd).map_err(|e| Error::contract(e.to_string()));
    let range_noise = gauss(noise.sigma)?;
    let excess = (noise.nlos_mu > 0.0)
        .then(|| Exp::new(1.0 / noise.nlos_mu).map_err(|e| Error::contract(e.to_string())))
        .transpose()?;
    let rtt_s: Vec<Vec<f64>> = gt
        .iter()
        .map(|p| {
            spec.aps
                .iter()
                .map(|ap| {
                    let mut r = ap.dist(*p);
                    if nlos.sample(&mut rng) {
                        r += excess.as_ref().map_or(0.0, |e| e.sample(&mut rng));
                    }
                    r += range_noise.sample(&mut rng);
                    range_to_rtt(r.max(MIN_RANGE))
                })
                .collect()
        })
        .collect();

    let samples = (n as f64 * spec.delta_s * spec.sample_rate).ceil() as usize + 1;
    let t_of = |k: usize| k as f64 / spec.sample_rate;

    let gyro_noise = gauss(noise.gyro_sigma)?;
    let mut gyro_z: Vec<f64> = (0..samples).map(|_| gyro_noise.sample(&mut rng)).collect();
    for w in spec.legs.windows(2).zip(&legs) {
        let (pair, &(_, e)) = w;
        let turn = wrap_angle(pair[1].heading - pair[0].heading);
        let center = (e as f64 + 0.5) * spec.delta_s;
        for (k, g) in gyro_z.iter_mut().enumerate() {
            let u = t_of(k) - center;
            if u.abs() < TURN_DURATION_S / 2.0 {
                *g += turn / TURN_DURATION_S * (1.0 + (TAU * u / TURN_DURATION_S).cos());
            }
        }
    }

    let accel_noise = gauss(noise.accel_sigma)?;
    let amplitude: Vec<f64> = spec.legs.iter().map(|l| (l.speed / spec.eta0).powi(4) / 2.0).collect();
    let mut leg_idx = 0;
    let accel_norm: Vec<f64> = (0..samples)
        .map(|k| {
            let t = t_of(k);
            while leg_idx + 1 < legs.len() && t >= (legs[leg_idx].1 + 1) as f64 * spec.delta_s {
                leg_idx += 1;
            }
            GRAVITY + amplitude[leg_idx] * (TAU * spec.step_freq * t).sin() + accel_noise.sample(&mut rng)
        })
        .collect();

    let alpha = match spec.mask {
        SupervisionMask::None => vec![false; n],
        SupervisionMask::Corners => {
            let mut a = vec![false; n];
            for &(_, e) in &legs {
                a[e] = true;
            }
            a
        }
        SupervisionMask::Fraction(f) => {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::contract(format!("label fraction {f} outside [0, 1]")));
            }
            (0..n).map(|_| rng.random_bool(f)).collect()
        }
    };

    Ok(Scenario {
        delta_s: spec.delta_s,
        sample_rate: spec.sample_rate,
        aps: spec.aps.clone(),
        gt: gt.into_iter().map(Some).collect(),
        rtt_s,
        gyro_z,
        accel_norm,
        alpha,
    })
}

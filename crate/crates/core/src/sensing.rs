//! Heading-change flags, steady-course segmentation and speed ratios from
//! raw IMU streams.
//!
//! MP indices are 0-based throughout: MP `n` is sampled at time `n * delta`
//! and the movement from MP `n` to MP `n + 1` occupies `[n delta, (n+1) delta]`.
//! A course `(start, end)` is inclusive on both ends.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default turn threshold (rad).
pub const DEFAULT_HEADING_THRESHOLD: f64 = 0.5;

/// Width of the centered moving average applied to `accel_norm` (s).
pub const SMOOTHING_WINDOW_S: f64 = 0.2;

/// Minimum extremum prominence, as a fraction of the course's accel std.
pub const MIN_PROMINENCE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImuStream {
    /// Samples per second.
    pub sample_rate: f64,
    /// Z-axis angular rate (rad/s), sample `k` at time `k / sample_rate`.
    pub gyro_z: Vec<f64>,
    /// Acceleration magnitude (m/s^2), same time base as `gyro_z`.
    pub accel_norm: Vec<f64>,
    /// MP sampling interval (s).
    pub delta: f64,
}

impl ImuStream {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::contract("IMU sample rate must be positive"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::contract("MP interval must be positive"));
        }
        if self.gyro_z.len() != self.accel_norm.len() {
            return Err(Error::contract(format!(
                "gyro has {} samples, accelerometer {}",
                self.gyro_z.len(),
                self.accel_norm.len()
            )));
        }
        Ok(())
    }

    fn duration(&self) -> f64 {
        self.gyro_z.len().saturating_sub(1) as f64 / self.sample_rate
    }

    /// Number of MPs whose movement intervals the stream can cover.
    pub fn supports(&self, n_mps: usize) -> bool {
        (self.gyro_z.len() as f64) >= n_mps as f64 * self.delta * self.sample_rate - 1e-9
    }
}

/// Steady courses recovered from the IMU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseSegmentation {
    pub beta: Vec<bool>,
    pub courses: Vec<(usize, usize)>,
    pub speed_ratio: Vec<f64>,
    /// Courses whose peak-to-valley gap fell back to the mean of the others.
    pub fallback: Vec<bool>,
}

impl CourseSegmentation {
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// Course index containing each MP.
    pub fn course_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.beta.len()];
        for (l, &(s, e)) in self.courses.iter().enumerate() {
            out[s..=e].iter_mut().for_each(|c| *c = l);
        }
        out
    }

    /// A segmentation with every course at the same pace; handy when no IMU
    /// is available and in tests.
    pub fn uniform(beta: Vec<bool>) -> Result<Self> {
        let courses = segment_courses(&beta)?;
        let k = courses.len();
        Ok(Self {
            beta,
            courses,
            speed_ratio: vec![1.0; k],
            fallback: vec![false; k],
        })
    }
}

/// Integral of the piecewise-linear gyro signal over `[a, b]` (trapezoidal
/// rule on the samples, with interpolated end points).
fn integrate(samples: &[f64], rate: f64, a: f64, b: f64) -> f64 {
    let at = |t: f64| {
        let x = t * rate;
        let k = (x.floor() as usize).min(samples.len() - 1);
        if k + 1 >= samples.len() {
            return samples[k];
        }
        let frac = x - k as f64;
        samples[k] * (1.0 - frac) + samples[k + 1] * frac
    };
    let first = (a * rate).floor() as usize + 1;
    let last = (b * rate).ceil() as usize;
    let mut knots = vec![(a, at(a))];
    for k in first..last.min(samples.len()) {
        let t = k as f64 / rate;
        if t > a && t < b {
            knots.push((t, samples[k]));
        }
    }
    knots.push((b, at(b)));
    knots
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Heading change while moving from MP `n` to MP `n + 1`.
pub fn heading_change(stream: &ImuStream, n: usize) -> Result<f64> {
    stream.validate()?;
    let a = n as f64 * stream.delta;
    let b = (n + 1) as f64 * stream.delta;
    if stream.gyro_z.is_empty() || b > stream.duration() + 1e-9 {
        let limit = (stream.duration() / stream.delta).floor() as usize;
        return Err(Error::OutOfRange {
            what: "MP interval",
            index: n,
            limit,
        });
    }
    Ok(integrate(&stream.gyro_z, stream.sample_rate, a, b.min(stream.duration())))
}

pub fn quantize_heading(theta: f64, threshold: f64) -> bool {
    theta >= threshold
}

/// Turn flags for `n_mps` MPs; the last flag is always set.
pub fn heading_flags(stream: &ImuStream, n_mps: usize, threshold: f64) -> Result<Vec<bool>> {
    if !(threshold > 0.0) {
        return Err(Error::contract("heading threshold must be positive"));
    }
    if n_mps == 0 {
        return Err(Error::contract("need at least one MP"));
    }
    let mut beta = (0..n_mps - 1)
        .map(|n| heading_change(stream, n).map(|t| quantize_heading(t, threshold)))
        .collect::<Result<Vec<_>>>()?;
    beta.push(true);
    Ok(beta)
}

/// Split the MP sequence into maximal runs ending at a set flag.
pub fn segment_courses(beta: &[bool]) -> Result<Vec<(usize, usize)>> {
    match beta.last() {
        Some(true) => {}
        Some(false) => return Err(Error::contract("last turn flag must be set")),
        None => return Err(Error::contract("empty turn-flag sequence")),
    }
    let mut courses = Vec::new();
    let mut start = 0;
    for (n, &b) in beta.iter().enumerate() {
        if b {
            courses.push((start, n));
            start = n + 1;
        }
    }
    Ok(courses)
}

/// Centered moving average, truncated at the signal ends.
fn moving_average(x: &[f64], half: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Topographic prominence of the local maximum at `i`.
fn prominence(x: &[f64], i: usize) -> f64 {
    let side_min = |range: &mut dyn Iterator<Item = usize>| {
        let mut lo = x[i];
        for j in range {
            if x[j] > x[i] {
                break;
            }
            lo = lo.min(x[j]);
        }
        lo
    };
    let left = side_min(&mut (0..i).rev());
    let right = side_min(&mut (i + 1..x.len()));
    x[i] - left.max(right)
}

fn extrema(x: &[f64], min_prominence: f64) -> (Vec<usize>, Vec<usize>) {
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let mut peaks = Vec::new();
    let mut valleys = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        if x[i] > x[i - 1] && x[i] >= x[i + 1] && prominence(x, i) >= min_prominence {
            peaks.push(i);
        }
        if neg[i] > neg[i - 1] && neg[i] >= neg[i + 1] && prominence(&neg, i) >= min_prominence {
            valleys.push(i);
        }
    }
    (peaks, valleys)
}

/// Mean gap between each peak and the valley that follows it, or `None`
/// when the window shows no usable oscillation.
fn peak_valley_gap(window: &[f64], guard: usize) -> Option<f64> {
    if window.len() < 3 {
        return None;
    }
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    let std = (window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / window.len() as f64).sqrt();
    if std <= 0.0 {
        return None;
    }
    let (peaks, valleys) = extrema(window, MIN_PROMINENCE_FRACTION * std);
    let inner = |i: &usize| *i >= guard && *i + guard < window.len();
    let valleys: Vec<usize> = valleys.into_iter().filter(inner).collect();
    let gaps: Vec<f64> = peaks
        .into_iter()
        .filter(inner)
        .filter_map(|p| {
            let v = valleys[valleys.partition_point(|&v| v <= p)..].first()?;
            Some(window[p] - window[*v])
        })
        .collect();
    if gaps.is_empty() {
        None
    } else {
        Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
    }
}

/// Normalize fourth roots of the peak-to-valley gaps by their minimum.
pub fn speed_ratios_from_gaps(gaps: &[f64]) -> Vec<f64> {
    let roots: Vec<f64> = gaps.iter().map(|r| r.powf(0.25)).collect();
    let min = roots.iter().copied().fold(f64::INFINITY, f64::min);
    roots.iter().map(|r| r / min).collect()
}

/// Per-course speed ratio `v` and the fallback flags.
///
/// Course `l` walks over `[s delta, (e + 1) delta]`; the acceleration
/// magnitude there is smoothed, its prominent peaks and valleys located,
/// and the mean peak-to-next-valley gap `r(l)` taken. Courses without a
/// detectable oscillation inherit the mean gap of the others.
pub fn speed_variation(stream: &ImuStream, courses: &[(usize, usize)]) -> Result<(Vec<f64>, Vec<bool>)> {
    stream.validate()?;
    if courses.is_empty() {
        return Err(Error::contract("no courses"));
    }
    let half = ((SMOOTHING_WINDOW_S * stream.sample_rate) / 2.0).round() as usize;
    let smooth = moving_average(&stream.accel_norm, half);
    let gaps: Vec<Option<f64>> = courses
        .iter()
        .map(|&(s, e)| {
            let lo = (s as f64 * stream.delta * stream.sample_rate).round() as usize;
            let hi = (((e + 1) as f64 * stream.delta * stream.sample_rate).round() as usize).min(smooth.len());
            if lo >= hi {
                return None;
            }
            peak_valley_gap(&smooth[lo..hi], half)
        })
        .collect();
    let known: Vec<f64> = gaps.iter().flatten().copied().collect();
    let fallback_gap = if known.is_empty() {
        1.0
    } else {
        known.iter().sum::<f64>() / known.len() as f64
    };
    let fallback: Vec<bool> = gaps.iter().map(Option::is_none).collect();
    let filled: Vec<f64> = gaps.iter().map(|g| g.unwrap_or(fallback_gap)).collect();
    Ok((speed_ratios_from_gaps(&filled), fallback))
}

/// Full IMU pipeline: flags, courses, speed ratios.
pub fn segment(stream: &ImuStream, n_mps: usize, threshold: f64) -> Result<CourseSegmentation> {
    if !stream.supports(n_mps) {
        return Err(Error::contract(format!(
            "IMU stream of {} samples cannot cover {n_mps} MPs",
            stream.gyro_z.len()
        )));
    }
    let beta = heading_flags(stream, n_mps, threshold)?;
    let courses = segment_courses(&beta)?;
    let (speed_ratio, fallback) = speed_variation(stream, &courses)?;
    Ok(CourseSegmentation {
        beta,
        courses,
        speed_ratio,
        fallback,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;

    fn stream(gyro: Vec<f64>, accel: Vec<f64>, rate: f64, delta: f64) -> ImuStream {
        ImuStream {
            sample_rate: rate,
            gyro_z: gyro,
            accel_norm: accel,
            delta,
        }
    }

    #[test]
    fn constant_and_zero_rate() {
        let s = stream(vec![0.2; 301], vec![9.8; 301], 100.0, 1.0);
        assert!((heading_change(&s, 0).unwrap() - 0.2).abs() < 1e-12);
        assert!((heading_change(&s, 2).unwrap() - 0.2).abs() < 1e-12);
        let z = stream(vec![0.0; 301], vec![9.8; 301], 100.0, 1.0);
        assert_eq!(heading_change(&z, 1).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_interval() {
        let s = stream(vec![0.2; 201], vec![9.8; 201], 100.0, 1.0);
        assert!(heading_change(&s, 1).is_ok());
        assert!(matches!(heading_change(&s, 2), Err(Error::OutOfRange { .. })));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn square_pulse_matches_quadrature() {
        // 1.5708 rad/s on [0.5, 1.5) inside a 2 s interval, sampled at 1 kHz.
        let rate = 1000.0;
        let pulse = |t: f64| if (0.5..1.5).contains(&t) { 1.5708 } else { 0.0 };
        let gyro: Vec<f64> = (0..=4000).map(|k| pulse(k as f64 / rate)).collect();
        let s = stream(gyro, vec![9.8; 4001], rate, 2.0);
        let theta = heading_change(&s, 0).unwrap();
        // Dense midpoint quadrature of the continuous pulse.
        let m = 2_000_000;
        let h = 2.0 / m as f64;
        let dense: f64 = (0..m).map(|i| pulse((i as f64 + 0.5) * h) * h).sum();
        assert!((dense - 1.5708).abs() < 1e-6);
        // Trapezoid smears each edge over one sample.
        assert!((theta - dense).abs() < 2e-3, "{theta} vs {dense}");
        assert!((theta - PI / 2.0).abs() < 2e-3);
    }

    #[test]
    fn quantization() {
        assert!(quantize_heading(0.6, 0.5));
        assert!(!quantize_heading(0.4, 0.5));
        assert!(quantize_heading(0.5, 0.5));
    }

    #[test]
    fn course_examples() {
        let b = |v: &[u8]| v.iter().map(|&x| x == 1).collect::<Vec<_>>();
        assert_eq!(segment_courses(&b(&[0, 0, 1, 0, 0, 0, 1])).unwrap(), vec![(0, 2), (3, 6)]);
        assert_eq!(segment_courses(&b(&[1, 1])).unwrap(), vec![(0, 0), (1, 1)]);
        let mut one = vec![false; 9];
        one.push(true);
        assert_eq!(segment_courses(&one).unwrap(), vec![(0, 9)]);
        assert!(segment_courses(&b(&[0, 1, 0])).is_err());
        assert!(segment_courses(&[]).is_err());
    }

    #[test]
    fn ratios_from_gaps() {
        assert_eq!(speed_ratios_from_gaps(&[1.0, 16.0]), vec![1.0, 2.0]);
        assert_eq!(speed_ratios_from_gaps(&[5.0, 5.0, 5.0]), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn sinusoid_gaps_recovered() {
        // Two 10 s courses: amplitude 2 then 0.125, stepping at 2 Hz.
        let rate = 100.0;
        let accel: Vec<f64> = (0..2000)
            .map(|k| {
                let t = k as f64 / rate;
                let amp = if t < 10.0 { 2.0 } else { 0.125 };
                10.0 + amp * (2.0 * PI * 2.0 * t).sin()
            })
            .collect();
        let s = stream(vec![0.0; 2000], accel, rate, 1.0);
        let half = ((SMOOTHING_WINDOW_S * rate) / 2.0).round() as usize;
        let smooth = moving_average(&s.accel_norm, half);
        // A centered average of width w scales a sinusoid of frequency f by
        // sin(pi f w) / (pi f w); undo it to compare with the raw gap.
        let w = (2 * half + 1) as f64 / rate;
        let gain = (PI * 2.0 * w).sin() / (PI * 2.0 * w);
        let r1 = peak_valley_gap(&smooth[..1000], half).unwrap() / gain;
        let r2 = peak_valley_gap(&smooth[1000..], half).unwrap() / gain;
        assert!((r1 - 4.0).abs() / 4.0 < 0.02, "{r1}");
        assert!((r2 - 0.25).abs() / 0.25 < 0.02, "{r2}");
        let (v, fb) = speed_variation(&s, &[(0, 9), (10, 19)]).unwrap();
        assert!((v[0] - 2.0).abs() / 2.0 < 0.02, "{v:?}");
        assert_eq!(v[1], 1.0);
        assert_eq!(fb, vec![false, false]);
    }

    #[test]
    fn flat_course_falls_back() {
        let rate = 100.0;
        let accel: Vec<f64> = (0..3000)
            .map(|k| {
                let t = k as f64 / rate;
                if t < 20.0 {
                    9.8 + (2.0 * PI * 2.0 * t).sin()
                } else {
                    9.8
                }
            })
            .collect();
        let s = stream(vec![0.0; 3000], accel, rate, 1.0);
        let (v, fb) = speed_variation(&s, &[(0, 9), (10, 19), (20, 29)]).unwrap();
        assert_eq!(fb, vec![false, false, true]);
        assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-3), "{v:?}");
    }

    proptest! {
        #[test]
        fn courses_partition(mut beta in proptest::collection::vec(any::<bool>(), 0..60)) {
            beta.push(true);
            let courses = segment_courses(&beta).unwrap();
            let mut next = 0;
            for &(s, e) in &courses {
                prop_assert_eq!(s, next);
                prop_assert!(e >= s);
                prop_assert!(beta[e]);
                prop_assert!(beta[s..e].iter().all(|b| !b));
                next = e + 1;
            }
            prop_assert_eq!(next, beta.len());
        }

        #[test]
        fn quantize_monotone(a in -4.0f64..4.0, b in -4.0f64..4.0, d in 0.01f64..2.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quantize_heading(lo, d) <= quantize_heading(hi, d));
        }

        #[test]
        fn ratios_scale_invariant(gaps in proptest::collection::vec(0.01f64..50.0, 1..8), k in 0.01f64..100.0) {
            let v = speed_ratios_from_gaps(&gaps);
            let scaled: Vec<f64> = gaps.iter().map(|g| g * k).collect();
            let w = speed_ratios_from_gaps(&scaled);
            for (a, b) in v.iter().zip(&w) {
                prop_assert!((a - b).abs() < 1e-9 * a.max(1.0));
            }
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert!((min - 1.0).abs() < 1e-12);
            prop_assert!(v.iter().all(|x| *x >= 1.0 - 1e-12));
        }
    }
}

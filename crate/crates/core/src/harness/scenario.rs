use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geometry::{ApConstellation, RttVector};
use crate::sensing::ImuStream;
use crate::{Error, Point, Result};

/// One self-contained experiment: AP layout, per-MP RTTs, raw IMU streams,
/// optional ground truth and the supervision mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub delta_s: f64,
    pub sample_rate: f64,
    pub aps: Vec<Point>,
    pub gt: Vec<Option<Point>>,
    pub rtt_s: Vec<Vec<f64>>,
    pub gyro_z: Vec<f64>,
    pub accel_norm: Vec<f64>,
    #[serde(with = "bits")]
    pub alpha: Vec<bool>,
}

mod bits {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&b| u8::from(b)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        Vec::<u8>::deserialize(d)?
            .into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(D::Error::custom(format!("alpha entries must be 0 or 1, got {b}"))),
            })
            .collect()
    }
}

impl Scenario {
    pub fn n_mps(&self) -> usize {
        self.rtt_s.len()
    }

    pub fn imu(&self) -> ImuStream {
        ImuStream {
            sample_rate: self.sample_rate,
            gyro_z: self.gyro_z.clone(),
            accel_norm: self.accel_norm.clone(),
            delta: self.delta_s,
        }
    }

    pub fn rtts(&self) -> Result<Vec<RttVector>> {
        self.rtt_s.iter().map(|r| RttVector::new(r.clone())).collect()
    }

    pub fn constellation(&self) -> Result<ApConstellation> {
        ApConstellation::new(self.aps.clone())
    }

    /// Ground truth for every MP, or an error if any is missing.
    pub fn full_truth(&self) -> Result<Vec<Point>> {
        self.gt
            .iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| Error::contract(format!("MP {i} has no ground truth"))))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_mps();
        if n == 0 {
            return Err(Error::contract("scenario has no MPs"));
        }
        self.constellation()?;
        if self.gt.len() != n || self.alpha.len() != n {
            return Err(Error::contract(format!(
                "{n} RTT rows but {} ground-truth entries and {} alpha flags",
                self.gt.len(),
                self.alpha.len()
            )));
        }
        if let Some((i, r)) = self.rtt_s.iter().enumerate().find(|(_, r)| r.len() != self.aps.len()) {
            return Err(Error::contract(format!("RTT row {i} has {} entries for {} APs", r.len(), self.aps.len())));
        }
        self.rtts()?;
        if self.alpha.iter().zip(&self.gt).any(|(&a, g)| a && g.is_none()) {
            return Err(Error::contract("labeled MPs need ground truth"));
        }
        let imu = self.imu();
        imu.validate()?;
        if !imu.supports(n) {
            return Err(Error::contract(format!("IMU streams are too short for {n} MPs")));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Location estimates for every MP plus run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEstimate {
    pub method: String,
    pub coords: Vec<Point>,
    /// MPs whose estimate fell back to a substitute value.
    pub flagged: Vec<bool>,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
}

impl TrajectoryEstimate {
    pub fn new(method: &str, coords: Vec<Point>) -> Self {
        let n = coords.len();
        Self {
            method: method.to_string(),
            coords,
            flagged: vec![false; n],
            seed: None,
            config_hash: None,
        }
    }

    pub fn with_flags(mut self, flagged: Vec<bool>) -> Self {
        self.flagged = flagged;
        self
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// `n,x,y` with shortest round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,x,y\n");
        for (i, p) in self.coords.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{}", p.x, p.y);
        }
        s
    }

    pub fn from_csv(method: &str, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("n,x,y") => {}
            other => return Err(Error::contract(format!("expected header n,x,y, got {other:?}"))),
        }
        let mut coords = Vec::new();
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::contract(format!("line {}: bad number {s:?}", row + 2)));
            let [n, x, y] = fields[..] else {
                return Err(Error::contract(format!("line {}: expected 3 fields", row + 2)));
            };
            if n.parse::<usize>().ok() != Some(row) {
                return Err(Error::contract(format!("line {}: expected n = {row}", row + 2)));
            }
            coords.push(Point::new(parse(x)?, parse(y)?));
        }
        Ok(Self::new(method, coords))
    }
}

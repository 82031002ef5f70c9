//! WiFi round-trip-time positioning with mobility-induced graph learning.
//!
//! The pipeline turns a [`harness::Scenario`] (RTT vectors plus raw IMU
//! streams) into a trajectory estimate:
//!
//! 1. [`sensing`] quantizes gyro heading changes into turn flags, cuts the
//!    walk into steady courses and estimates per-course speed ratios.
//! 2. [`features`] builds the normalized RTT matrix, the combinatorial
//!    multilateration fixes and the pseudo-labels derived from them.
//! 3. [`graphs`] builds the time-driven and direction-driven mobility graphs.
//! 4. [`gcn`] and [`training`] fit a two-branch graph convolutional network
//!    with shared weights against labels and a pace-regularization term.
//!
//! [`simulator`] produces synthetic scenarios, [`baselines`] holds the
//! reference localizers and [`harness`] ties everything into experiments.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod features;
pub mod gcn;
pub mod geometry;
pub mod graphs;
pub mod harness;
pub mod sensing;
pub mod simulator;
pub mod training;

pub use error::{Error, Result};
pub use geometry::Point;

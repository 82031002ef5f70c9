//! File formats, metrics and the experiment drivers behind the CLI.

mod metrics;
mod scenario;
mod svg;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use metrics::{cdf_csv, evaluate, gamma_variance, percentile, report_from_errors, EvalReport};
pub use scenario::{Scenario, TrajectoryEstimate};
pub use svg::trajectory_svg;

use crate::baselines::{self, EkfParams};
use crate::features::{build_pels_and_f2, cda_label, CdaLabels, CdaParams, FeatureSet};
use crate::gcn::Routing;
use crate::geometry::{ApConstellation, RttVector};
use crate::graphs::MobilityGraphs;
use crate::sensing::{segment, CourseSegmentation, DEFAULT_HEADING_THRESHOLD};
use crate::training::{train, Problem, TrainConfig, TrainOutcome};
use crate::{Error, Result};

/// Everything derived from a scenario before any learning happens.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub aps: ApConstellation,
    pub rtts: Vec<RttVector>,
    pub features: FeatureSet,
    pub cda: CdaLabels,
    pub segmentation: CourseSegmentation,
    pub graphs: MobilityGraphs,
}

pub fn preprocess(scenario: &Scenario, epsilon: usize) -> Result<Preprocessed> {
    scenario.validate()?;
    let aps = scenario.constellation()?;
    let rtts = scenario.rtts()?;
    let params = CdaParams::default_for(aps.len());
    let features = build_pels_and_f2(&rtts, &aps, params.k)?;
    let cda = cda_label(&features, &rtts, &aps, params)?;
    let segmentation = segment(&scenario.imu(), scenario.n_mps(), DEFAULT_HEADING_THRESHOLD)?;
    let graphs = MobilityGraphs::build(&segmentation.courses, scenario.n_mps(), epsilon)?;
    Ok(Preprocessed {
        aps,
        rtts,
        features,
        cda,
        segmentation,
        graphs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lls,
    Cda,
    Ekf,
    Mingle,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lls" => Ok(Method::Lls),
            "cda" => Ok(Method::Cda),
            "ekf" => Ok(Method::Ekf),
            "mingle" => Ok(Method::Mingle),
            _ => Err(Error::contract(format!("unknown method {s:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lls => "lls",
            Method::Cda => "cda",
            Method::Ekf => "ekf",
            Method::Mingle => "mingle",
        })
    }
}

/// Whether the scenario's labels are used during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[serde(rename = "self")]
    SelfSupervised,
    Semi,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "self" => Ok(Mode::SelfSupervised),
            "semi" => Ok(Mode::Semi),
            _ => Err(Error::contract(format!("unknown mode {s:?}"))),
        }
    }
}

/// Short SHA-256 fingerprint of any serializable configuration.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_vec(config).expect("configuration serializes");
    hex::encode(&Sha256::digest(&json)[..8])
}

/// Trains the graph model on preprocessed inputs.
pub fn train_mingle(scenario: &Scenario, pre: &Preprocessed, mode: Mode, cfg: &TrainConfig) -> Result<(TrajectoryEstimate, TrainOutcome)> {
    let alpha = match mode {
        Mode::SelfSupervised => vec![false; scenario.n_mps()],
        Mode::Semi => scenario.alpha.clone(),
    };
    let graphs;
    let graphs = if pre.graphs.epsilon == cfg.epsilon {
        &pre.graphs
    } else {
        graphs = MobilityGraphs::build(&pre.segmentation.courses, scenario.n_mps(), cfg.epsilon)?;
        &graphs
    };
    let problem = Problem::new(graphs, &pre.features, cfg.routing, &pre.segmentation, &pre.cda.labels, &alpha, &scenario.gt)?;
    let outcome = train(&problem, cfg)?;
    let mut est = TrajectoryEstimate::new("mingle", outcome.estimate.clone());
    est.seed = Some(cfg.seed);
    est.config_hash = Some(config_hash(&(mode, cfg)));
    Ok((est, outcome))
}

/// Runs one localizer end to end.
pub fn localize(scenario: &Scenario, method: Method, mode: Mode, cfg: &TrainConfig) -> Result<TrajectoryEstimate> {
    let pre = preprocess(scenario, cfg.epsilon)?;
    localize_with(scenario, &pre, method, mode, cfg)
}

pub fn localize_with(scenario: &Scenario, pre: &Preprocessed, method: Method, mode: Mode, cfg: &TrainConfig) -> Result<TrajectoryEstimate> {
    match method {
        Method::Lls => baselines::lls_rs_trajectory(scenario),
        Method::Cda => Ok(baselines::cda_trajectory(pre)),
        Method::Ekf => baselines::ekf_trajectory(scenario, pre, &EkfParams::default()),
        Method::Mingle => Ok(train_mingle(scenario, pre, mode, cfg)?.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub routing: Routing,
    pub report: EvalReport,
}

/// All eight feature/graph routings, standalone first.
pub fn run_ablation(scenario: &Scenario, mode: Mode, cfg: &TrainConfig) -> Result<Vec<AblationRow>> {
    let pre = preprocess(scenario, cfg.epsilon)?;
    Routing::all()
        .into_iter()
        .map(|routing| {
            let cfg = TrainConfig { routing, ..cfg.clone() };
            let (est, _) = train_mingle(scenario, &pre, mode, &cfg)?;
            Ok(AblationRow {
                routing,
                report: evaluate(&est.coords, &scenario.gt)?,
            })
        })
        .collect()
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("routing,kind,mae,rmse,p50,p75,p95\n");
    for r in rows {
        let kind = if r.routing.is_cross() { "cross" } else { "standalone" };
        let e = &r.report;
        s.push_str(&format!("{},{kind},{},{},{},{},{}\n", r.routing, e.mae, e.rmse, e.p50, e.p75, e.p95));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub mae: f64,
    pub rmse: f64,
    /// Variance of the speed-normalized steps of the final estimate.
    pub var_gamma: f64,
}

pub fn run_lambda_sweep(scenario: &Scenario, lambdas: &[f64], mode: Mode, cfg: &TrainConfig) -> Result<Vec<SweepRow>> {
    if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::contract(format!("lambda must be non-negative, got {bad}")));
    }
    let pre = preprocess(scenario, cfg.epsilon)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let cfg = TrainConfig { lambda, ..cfg.clone() };
            let (est, _) = train_mingle(scenario, &pre, mode, &cfg)?;
            let report = evaluate(&est.coords, &scenario.gt)?;
            Ok(SweepRow {
                lambda,
                mae: report.mae,
                rmse: report.rmse,
                var_gamma: gamma_variance(&est.coords, &pre.segmentation),
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("lambda,mae,rmse,var_gamma\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.lambda, r.mae, r.rmse, r.var_gamma));
    }
    s
}

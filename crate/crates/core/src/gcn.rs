//! Two-layer cross-graph GCN with shared weights.
//!
//! Each branch pairs one input feature with one mobility graph `G`:
//!
//! ```text
//! H = ReLU(G F W1)          (F2 feeds W1 directly)
//! H = ReLU(G F1 L W1)       (F1 is lifted to F2's width by L first)
//! Y = G H W2
//! ```
//!
//! `W1` and `W2` are shared by every branch; there are no biases. The
//! default routing sends `F1` through the TMG and `F2` through the DMG and
//! reads the location estimate off the DMG branch.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureSet;
use crate::graphs::MobilityGraphs;
use crate::{Error, Result};

/// Default hidden width.
pub const DEFAULT_HIDDEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    F1,
    F2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphKind {
    Tmg,
    Dmg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Branch {
    pub feature: FeatureKind,
    pub graph: GraphKind,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let feat = match self.feature {
            FeatureKind::F1 => "F1",
            FeatureKind::F2 => "F2",
        };
        let graph = match self.graph {
            GraphKind::Tmg => "TMG",
            GraphKind::Dmg => "DMG",
        };
        write!(f, "{feat}-{graph}")
    }
}

/// Which features drive which graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Routing {
    /// One branch per graph with shared weights; the DMG branch is the estimate.
    Cross { tmg: FeatureKind, dmg: FeatureKind },
    /// A single branch.
    Standalone(Branch),
}

impl Default for Routing {
    fn default() -> Self {
        Routing::Cross {
            tmg: FeatureKind::F1,
            dmg: FeatureKind::F2,
        }
    }
}

impl Routing {
    /// Four standalone branches followed by the four cross pairings.
    pub fn all() -> [Routing; 8] {
        use FeatureKind::*;
        use GraphKind::*;
        let single = |feature, graph| Routing::Standalone(Branch { feature, graph });
        [
            single(F1, Tmg),
            single(F2, Tmg),
            single(F1, Dmg),
            single(F2, Dmg),
            Routing::Cross { tmg: F1, dmg: F1 },
            Routing::Cross { tmg: F1, dmg: F2 },
            Routing::Cross { tmg: F2, dmg: F1 },
            Routing::Cross { tmg: F2, dmg: F2 },
        ]
    }

    /// Branches in evaluation order; the last one carries the estimate.
    pub fn branches(&self) -> Vec<Branch> {
        match *self {
            Routing::Cross { tmg, dmg } => vec![
                Branch {
                    feature: tmg,
                    graph: GraphKind::Tmg,
                },
                Branch {
                    feature: dmg,
                    graph: GraphKind::Dmg,
                },
            ],
            Routing::Standalone(b) => vec![b],
        }
    }

    pub fn is_cross(&self) -> bool {
        matches!(self, Routing::Cross { .. })
    }
}

impl fmt::Display for Routing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.branches().iter().map(Branch::to_string).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for Routing {
    type Err = Error;

    /// Accepts `F1-TMG+F2-DMG`, `F2-DMG`, etc. (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let parse_branch = |p: &str| -> Result<Branch> {
            let (feat, graph) = p
                .split_once('-')
                .ok_or_else(|| Error::contract(format!("bad branch {p:?}")))?;
            let feature = match feat.to_ascii_uppercase().as_str() {
                "F1" => FeatureKind::F1,
                "F2" => FeatureKind::F2,
                _ => return Err(Error::contract(format!("unknown feature {feat:?}"))),
            };
            let graph = match graph.to_ascii_uppercase().as_str() {
                "TMG" => GraphKind::Tmg,
                "DMG" => GraphKind::Dmg,
                _ => return Err(Error::contract(format!("unknown graph {graph:?}"))),
            };
            Ok(Branch { feature, graph })
        };
        let parts: Vec<&str> = s.trim().split('+').collect();
        match parts.as_slice() {
            [one] => Ok(Routing::Standalone(parse_branch(one)?)),
            [x, y] => {
                let (x, y) = (parse_branch(x)?, parse_branch(y)?);
                match (x.graph, y.graph) {
                    (GraphKind::Tmg, GraphKind::Dmg) => Ok(Routing::Cross {
                        tmg: x.feature,
                        dmg: y.feature,
                    }),
                    (GraphKind::Dmg, GraphKind::Tmg) => Ok(Routing::Cross {
                        tmg: y.feature,
                        dmg: x.feature,
                    }),
                    _ => Err(Error::contract("cross routing needs one TMG and one DMG branch")),
                }
            }
            _ => Err(Error::contract(format!("bad routing {s:?}"))),
        }
    }
}

/// Trainable state: the F1 lift and the two shared layer weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    /// M x 2Q.
    pub lift: Array2<f64>,
    /// 2Q x h1.
    pub w1: Array2<f64>,
    /// h1 x 2.
    pub w2: Array2<f64>,
}

impl GcnParams {
    pub fn zeros(m: usize, two_q: usize, h1: usize) -> Self {
        Self {
            lift: Array2::zeros((m, two_q)),
            w1: Array2::zeros((two_q, h1)),
            w2: Array2::zeros((h1, 2)),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|m| m.iter().all(|v| v.is_finite()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Array2<f64>> {
        [&self.lift, &self.w1, &self.w2].into_iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Array2<f64>> {
        [&mut self.lift, &mut self.w1, &mut self.w2].into_iter()
    }

    pub fn n_params(&self) -> usize {
        self.iter().map(Array2::len).sum()
    }

    fn check(&self) -> Result<()> {
        let (m, two_q) = self.lift.dim();
        if self.w1.nrows() != two_q || self.w2.nrows() != self.w1.ncols() || self.w2.ncols() != 2 || m == 0 {
            return Err(Error::contract(format!(
                "inconsistent parameter shapes: lift {:?}, w1 {:?}, w2 {:?}",
                self.lift.dim(),
                self.w1.dim(),
                self.w2.dim()
            )));
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let flat = |m: &Array2<f64>| m.iter().copied().collect();
        Checkpoint {
            m: self.lift.nrows(),
            two_q: self.lift.ncols(),
            h1: self.hidden(),
            lift: flat(&self.lift),
            w1: flat(&self.w1),
            w2: flat(&self.w2),
        }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let shape = |rows, cols, data: &[f64], name| {
            Array2::from_shape_vec((rows, cols), data.to_vec())
                .map_err(|_| Error::contract(format!("checkpoint {name}: expected {rows}x{cols} values")))
        };
        let p = Self {
            lift: shape(c.m, c.two_q, &c.lift, "lift")?,
            w1: shape(c.two_q, c.h1, &c.w1, "w1")?,
            w2: shape(c.h1, 2, &c.w2, "w2")?,
        };
        p.check()?;
        Ok(p)
    }
}

/// Flat row-major parameter dump with its dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub m: usize,
    pub two_q: usize,
    pub h1: usize,
    pub lift: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..bound))
}

/// Glorot-uniform parameters, deterministic in `seed`.
pub fn init_params(m: usize, q: usize, h1: usize, seed: u64) -> Result<GcnParams> {
    if h1 == 0 || m == 0 || q == 0 {
        return Err(Error::contract("parameter dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(GcnParams {
        lift: glorot(m, 2 * q, &mut rng),
        w1: glorot(2 * q, h1, &mut rng),
        w2: glorot(h1, 2, &mut rng),
    })
}

/// Graph-propagated inputs `G F`, fixed for a whole training run.
#[derive(Debug, Clone)]
pub struct PreparedBranch {
    pub branch: Branch,
    pub graph: Array2<f64>,
    pub propagated: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub branches: Vec<PreparedBranch>,
    pub n_aps: usize,
    pub two_q: usize,
}

impl Prepared {
    pub fn new(graphs: &MobilityGraphs, features: &FeatureSet, routing: Routing) -> Result<Self> {
        let n = graphs.n_nodes();
        if features.f1.nrows() != n || features.f2.nrows() != n {
            return Err(Error::contract(format!(
                "graphs have {n} nodes, features {} rows",
                features.f1.nrows()
            )));
        }
        let branches = routing
            .branches()
            .into_iter()
            .map(|branch| {
                let graph = match branch.graph {
                    GraphKind::Tmg => graphs.a_norm.clone(),
                    GraphKind::Dmg => graphs.b_norm.clone(),
                };
                let input = match branch.feature {
                    FeatureKind::F1 => &features.f1,
                    FeatureKind::F2 => &features.f2,
                };
                PreparedBranch {
                    propagated: graph.dot(input),
                    graph,
                    branch,
                }
            })
            .collect();
        Ok(Self {
            branches,
            n_aps: features.f1.ncols(),
            two_q: features.f2.ncols(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.branches[0].graph.nrows()
    }

    fn check(&self, params: &GcnParams) -> Result<()> {
        params.check()?;
        if params.lift.nrows() != self.n_aps || params.lift.ncols() != self.two_q {
            return Err(Error::contract(format!(
                "lift is {:?}, features need {}x{}",
                params.lift.dim(),
                self.n_aps,
                self.two_q
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchOutput {
    pub branch: Branch,
    /// N x h1 first-layer activations.
    pub hidden: Array2<f64>,
    /// N x 2 second-layer output.
    pub out: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub branches: Vec<BranchOutput>,
}

impl ModelOutput {
    /// The estimate-bearing output (`b` for cross routing).
    pub fn estimate(&self) -> &Array2<f64> {
        &self.branches.last().expect("at least one branch").out
    }

    /// TMG-branch output of a cross routing (`a`).
    pub fn companion(&self) -> Option<&Array2<f64>> {
        (self.branches.len() == 2).then(|| &self.branches[0].out)
    }
}

pub fn forward_prepared(params: &GcnParams, prepared: &Prepared) -> Result<ModelOutput> {
    prepared.check(params)?;
    let branches = prepared
        .branches
        .iter()
        .map(|pb| {
            let z = match pb.branch.feature {
                FeatureKind::F1 => pb.propagated.dot(&params.lift.dot(&params.w1)),
                FeatureKind::F2 => pb.propagated.dot(&params.w1),
            };
            let hidden = z.mapv_into(|v| v.max(0.0));
            let out = pb.graph.dot(&hidden.dot(&params.w2));
            BranchOutput {
                branch: pb.branch,
                hidden,
                out,
            }
        })
        .collect();
    Ok(ModelOutput { branches })
}

pub fn forward(params: &GcnParams, graphs: &MobilityGraphs, features: &FeatureSet, routing: Routing) -> Result<ModelOutput> {
    forward_prepared(params, &Prepared::new(graphs, features, routing)?)
}

/// Parameter gradient given the loss gradient with respect to each
/// branch output. ReLU's subgradient at zero is taken as zero.
pub fn backward(params: &GcnParams, prepared: &Prepared, output: &ModelOutput, d_out: &[Array2<f64>]) -> GcnParams {
    let mut grad = GcnParams::zeros(params.lift.nrows(), params.lift.ncols(), params.hidden());
    for ((pb, bo), dy) in prepared.branches.iter().zip(&output.branches).zip(d_out) {
        let d_hw2 = pb.graph.t().dot(dy);
        grad.w2 += &bo.hidden.t().dot(&d_hw2);
        let mut dz = d_hw2.dot(&params.w2.t());
        Zip::from(&mut dz).and(&bo.hidden).for_each(|d, &h| {
            if h <= 0.0 {
                *d = 0.0;
            }
        });
        let s = pb.propagated.t().dot(&dz);
        match pb.branch.feature {
            FeatureKind::F2 => grad.w1 += &s,
            FeatureKind::F1 => {
                grad.w1 += &params.lift.t().dot(&s);
                grad.lift += &s.dot(&params.w1.t());
            }
        }
    }
    grad
}

//! Experiment configuration, loaded from JSON.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiscale::DEFAULT_C_FI;
use crate::partition::RepPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    LevelsSweep,
    VsBaselines,
    Cdf,
    HandshakeSweep,
    Loss,
    Heatmap,
    NodeUtil,
    ScalingFit,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::LevelsSweep,
        ExperimentId::VsBaselines,
        ExperimentId::Cdf,
        ExperimentId::HandshakeSweep,
        ExperimentId::Loss,
        ExperimentId::Heatmap,
        ExperimentId::NodeUtil,
        ExperimentId::ScalingFit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::LevelsSweep => "levels_sweep",
            ExperimentId::VsBaselines => "vs_baselines",
            ExperimentId::Cdf => "cdf",
            ExperimentId::HandshakeSweep => "handshake_sweep",
            ExperimentId::Loss => "loss",
            ExperimentId::Heatmap => "heatmap",
            ExperimentId::NodeUtil => "node_util",
            ExperimentId::ScalingFit => "scaling_fit",
        }
    }

    /// Algorithms run when the config leaves the list empty.
    pub fn default_algorithms(self) -> Vec<Algorithm> {
        use Algorithm::*;
        match self {
            ExperimentId::LevelsSweep | ExperimentId::NodeUtil | ExperimentId::ScalingFit => vec![Multiscale],
            ExperimentId::VsBaselines => vec![Multiscale, TwoLevel, PathAveraging],
            _ => vec![Multiscale, PathAveraging],
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Multiscale,
    /// Multiscale with fixed per-invocation iteration counts.
    MultiscaleFi,
    /// Two levels with `a = 1/2`.
    TwoLevel,
    PathAveraging,
    GeographicGossip,
    RandomizedGossip,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Multiscale,
        Algorithm::MultiscaleFi,
        Algorithm::TwoLevel,
        Algorithm::PathAveraging,
        Algorithm::GeographicGossip,
        Algorithm::RandomizedGossip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Multiscale => "multiscale",
            Algorithm::MultiscaleFi => "multiscale_fi",
            Algorithm::TwoLevel => "two_level",
            Algorithm::PathAveraging => "path_averaging",
            Algorithm::GeographicGossip => "geographic_gossip",
            Algorithm::RandomizedGossip => "randomized_gossip",
        }
    }

    pub fn is_hierarchical(self) -> bool {
        matches!(
            self,
            Algorithm::Multiscale | Algorithm::MultiscaleFi | Algorithm::TwoLevel
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

/// Initial field: i.i.d. uniform[0, 1), or a single node at 1 and the rest 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    Uniform,
    Spike,
}

/// Expected finest-cell population window for automatic level selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoBounds {
    pub min_size: f64,
    pub max_size: f64,
}

impl Default for AutoBounds {
    fn default() -> Self {
        AutoBounds {
            min_size: 2.0,
            max_size: 12.0,
        }
    }
}

/// Upper bound on runs per graph in the heatmap experiment; run seeds are
/// `graph_seed * RUN_STRIDE + run`.
pub const RUN_STRIDE: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub n: Vec<usize>,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Explicit level counts; empty selects levels automatically.
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub auto_levels: AutoBounds,
    #[serde(default = "default_a")]
    pub a: f64,
    pub seeds: Vec<u64>,
    /// Per-hop success probabilities for the handshake and loss experiments.
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    /// Empty selects the experiment's default set.
    #[serde(default)]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub init: InitMode,
    #[serde(default)]
    pub rep_policy: RepPolicy,
    #[serde(default = "default_c_fi")]
    pub c_fi: f64,
    /// Worker threads; `None` uses every core.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Heatmap resolution per side.
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Heatmap runs per graph; the seed list picks the graphs.
    #[serde(default = "default_runs")]
    pub runs_per_graph: usize,
    /// Loss runs stop after this multiple of the matching reliable total.
    #[serde(default = "default_budget_factor")]
    pub loss_budget_factor: f64,
}

fn default_c() -> f64 {
    3.0
}
fn default_epsilon() -> f64 {
    1e-4
}
fn default_a() -> f64 {
    2.0 / 3.0
}
fn default_p() -> Vec<f64> {
    vec![1.0]
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}
fn default_c_fi() -> f64 {
    DEFAULT_C_FI
}
fn default_bins() -> usize {
    50
}
fn default_runs() -> usize {
    20
}
fn default_budget_factor() -> f64 {
    50.0
}

fn seeds(count: u64) -> Vec<u64> {
    (0..count).collect()
}

impl ExperimentConfig {
    /// Minimal config with every optional field at its default.
    pub fn new(experiment: ExperimentId, n: Vec<usize>, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            experiment,
            n,
            c: default_c(),
            epsilon: default_epsilon(),
            k: Vec::new(),
            auto_levels: AutoBounds::default(),
            a: default_a(),
            seeds,
            p: default_p(),
            algorithms: Vec::new(),
            output_dir: default_output_dir(),
            init: InitMode::default(),
            rep_policy: RepPolicy::default(),
            c_fi: default_c_fi(),
            workers: None,
            bins: default_bins(),
            runs_per_graph: default_runs(),
            loss_budget_factor: default_budget_factor(),
        }
    }

    /// Desk-scale setup for each experiment.
    pub fn preset(experiment: ExperimentId) -> Self {
        use ExperimentId::*;
        let mut c = match experiment {
            LevelsSweep => Self::new(experiment, vec![2000], seeds(10)),
            VsBaselines => Self::new(experiment, vec![500, 1000, 2000], seeds(10)),
            Cdf => Self::new(experiment, vec![2000], seeds(5)),
            HandshakeSweep => Self::new(experiment, vec![1000], seeds(25)),
            Loss => Self::new(experiment, vec![250, 500, 1000], seeds(5)),
            Heatmap => Self::new(experiment, vec![1000], seeds(20)),
            NodeUtil => Self::new(experiment, vec![5000], seeds(5)),
            ScalingFit => Self::new(experiment, vec![500, 1000, 2000, 4000, 8000], seeds(5)),
        };
        match experiment {
            LevelsSweep => c.k = (1..=6).collect(),
            HandshakeSweep => c.p = vec![0.5, 0.75, 1.0],
            Loss => c.p = vec![0.9],
            NodeUtil => {
                c.k = vec![5];
                c.rep_policy = RepPolicy::Random;
            }
            _ => {}
        }
        c
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        if self.algorithms.is_empty() {
            self.experiment.default_algorithms()
        } else {
            self.algorithms.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n.is_empty() || self.n.contains(&0) {
            return bad("n list must be nonempty and every n >= 1".into());
        }
        if self.seeds.is_empty() {
            return bad("seed list must be nonempty".into());
        }
        if self.p.is_empty() || self.p.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return bad(format!("every p must lie in (0, 1], got {:?}", self.p));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            return bad(format!("a must lie in (0, 1), got {}", self.a));
        }
        if self.k.contains(&0) {
            return bad("every k must be >= 1".into());
        }
        let AutoBounds { min_size, max_size } = self.auto_levels;
        if !(min_size <= max_size && max_size > 1.0) {
            return bad("auto levels need 1 < max_size and min_size <= max_size".into());
        }
        if !(self.c_fi > 0.0) {
            return bad("c_fi must be positive".into());
        }
        if self.bins == 0 {
            return bad("bins must be >= 1".into());
        }
        if self.runs_per_graph == 0 || self.runs_per_graph as u64 > RUN_STRIDE {
            return bad(format!("runs_per_graph must lie in 1..={RUN_STRIDE}"));
        }
        if !(self.loss_budget_factor >= 1.0) {
            return bad("loss_budget_factor must be >= 1".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1 when given".into());
        }
        let algos = self.algorithms();
        use ExperimentId::*;
        let need = |a: Algorithm| algos.contains(&a);
        match self.experiment {
            Cdf if !(need(Algorithm::Multiscale) && need(Algorithm::PathAveraging)) => {
                bad("cdf needs both multiscale and path_averaging".into())
            }
            NodeUtil if algos.iter().any(|a| !a.is_hierarchical()) => {
                bad("node_util only supports hierarchical algorithms".into())
            }
            Loss if self.p.iter().all(|&p| p == 1.0) => bad("loss needs at least one p < 1".into()),
            _ => Ok(()),
        }
    }
}

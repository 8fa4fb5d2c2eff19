//! JSON scenario files.
//!
//! ```json
//! {
//!   "generators": [{"a": 0.0024, "b": 5.56, "c": 30.0, "B": 0.00021, "p_min": 60.0, "p_max": 339.69}],
//!   "consumers": [{"w": 18.43, "alpha": 0.0545, "p_min": 50.0, "p_max": 100.34}],
//!   "graph": {"preset": "ring4"},
//!   "weights": "uniform",
//!   "eta": 0.002, "eps_m": 1e-8, "eps_l": 1e-8, "max_iters": 200000
//! }
//! ```
//!
//! `graph` is either a preset name or `{"n", "kinds", "edges"}` with edges as
//! `[from, to]` pairs. `weights` is `"uniform"` or `{"W": [[..]], "Q": [[..]]}`.
//! Parsing builds the scenario but does not validate it.

use std::fs;
use std::path::Path;

use cema_core::graph::{build_uniform_weights, Digraph, Matrix, NodeKind, WeightMatrices};
use cema_core::presets::{self, DEFAULT_EPS, DEFAULT_MAX_ITERS};
use cema_core::{ConsumerParams, GeneratorParams, ModelError, Scenario};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name accepted in place of a scenario path for the built-in benchmark.
pub const BUILTIN_TABLE1: &str = "table1";

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown graph preset {0:?}")]
    UnknownPreset(String),
    #[error("graph declares n = {n} but lists {kinds} node kinds")]
    NodeCount { n: usize, kinds: usize },
    #[error("weight matrix {name} must be {n}×{n}")]
    WeightShape { name: &'static str, n: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Preset { preset: String },
    Explicit { n: usize, kinds: Vec<NodeKind>, edges: Vec<(usize, usize)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UniformTag {
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Uniform(UniformTag),
    Explicit {
        #[serde(rename = "W")]
        w: Vec<Vec<f64>>,
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub generators: Vec<GeneratorParams>,
    pub consumers: Vec<ConsumerParams>,
    pub graph: GraphSpec,
    pub weights: WeightSpec,
    pub eta: f64,
    #[serde(default = "default_eps")]
    pub eps_m: f64,
    #[serde(default = "default_eps")]
    pub eps_l: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

impl ScenarioFile {
    /// Describes `s` compactly: the ring preset and uniform weights are written
    /// by name when they reproduce the scenario exactly.
    pub fn from_scenario(s: &Scenario) -> Self {
        let graph = if s.graph == presets::ring4() {
            GraphSpec::Preset { preset: "ring4".into() }
        } else {
            GraphSpec::Explicit { n: s.graph.n(), kinds: s.graph.kinds().to_vec(), edges: s.graph.edges().to_vec() }
        };
        let weights = match build_uniform_weights(&s.graph) {
            Ok(u) if u == s.weights => WeightSpec::Uniform(UniformTag::Uniform),
            _ => WeightSpec::Explicit { w: s.weights.w.to_rows(), q: s.weights.q.to_rows() },
        };
        Self {
            generators: s.generators.clone(),
            consumers: s.consumers.clone(),
            graph,
            weights,
            eta: s.eta,
            eps_m: s.eps_m,
            eps_l: s.eps_l,
            max_iters: s.max_iters,
        }
    }

    pub fn into_scenario(self) -> Result<Scenario, ScenarioFileError> {
        let graph = match self.graph {
            GraphSpec::Preset { preset } if preset == "ring4" => presets::ring4(),
            GraphSpec::Preset { preset } => return Err(ScenarioFileError::UnknownPreset(preset)),
            GraphSpec::Explicit { n, kinds, edges } => {
                if n != kinds.len() {
                    return Err(ScenarioFileError::NodeCount { n, kinds: kinds.len() });
                }
                Digraph::new(kinds, edges)?
            }
        };
        let weights = match self.weights {
            WeightSpec::Uniform(_) => build_uniform_weights(&graph)?,
            WeightSpec::Explicit { w, q } => {
                let n = graph.n();
                let square = |rows: &[Vec<f64>], name| {
                    Matrix::from_rows(rows).filter(|m| m.n() == n).ok_or(ScenarioFileError::WeightShape { name, n })
                };
                WeightMatrices { w: square(&w, "W")?, q: square(&q, "Q")? }
            }
        };
        Ok(Scenario {
            generators: self.generators,
            consumers: self.consumers,
            graph,
            weights,
            eta: self.eta,
            eps_m: self.eps_m,
            eps_l: self.eps_l,
            max_iters: self.max_iters,
        })
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioFileError> {
    serde_json::from_str::<ScenarioFile>(text)?.into_scenario()
}

pub fn to_json(s: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(&ScenarioFile::from_scenario(s)).expect("scenario serializes");
    out.push('\n');
    out
}

/// Loads a scenario file, or the built-in benchmark when `path` is `table1`.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioFileError> {
    if path.as_os_str() == BUILTIN_TABLE1 {
        return Ok(presets::table1());
    }
    let text = fs::read_to_string(path)
        .map_err(|source| ScenarioFileError::Read { path: path.display().to_string(), source })?;
    parse_scenario(&text)
}

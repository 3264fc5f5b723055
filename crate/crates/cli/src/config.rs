//! Run configuration: a command name, a seed, an output directory and a
//! command-specific `params` object. Unknown keys are rejected at every level.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use multilattice::lowerbound::SweepConfig;
use multilattice::testbed::SamplingMode;
use multilattice::weights::WeightSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Cross,
    Plan,
    Approximate,
    Converge,
    Lowerbound,
    TractCheck,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub params: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossSpec {
    pub d: usize,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m_radius: f64,
    pub weights: WeightSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinality_cap: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossCmd {
    pub cross: CrossSpec,
    /// Summability exponent for the size and tail bounds; defaults to the
    /// midpoint of `(1/alpha, 2)`.
    #[serde(default)]
    pub lambda: Option<f64>,
}

fn default_retry() -> u64 {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanCmd {
    pub cross: CrossSpec,
    pub c: f64,
    pub delta: f64,
    #[serde(default = "default_retry")]
    pub retry_cap_factor: u64,
    /// Radius of the dual-lattice box searched during verification; defaults
    /// to the span of the cross.
    #[serde(default)]
    pub check_radius: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Bernoulli {
        degree: u32,
        gammas: Vec<f64>,
    },
    RandomPoly {
        #[serde(default = "yes")]
        unit_norm: bool,
    },
}

fn yes() -> bool {
    true
}

fn default_grid() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproximateCmd {
    pub cross: CrossSpec,
    pub c: f64,
    pub delta: f64,
    #[serde(default = "default_retry")]
    pub retry_cap_factor: u64,
    pub function: FunctionSpec,
    #[serde(default = "default_grid")]
    pub grid_per_dim: usize,
    #[serde(default)]
    pub num_shifts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernoulliSpec {
    pub degree: u32,
    pub gammas: Vec<f64>,
}

fn default_shifts() -> usize {
    16
}

fn default_converge_grid() -> usize {
    128
}

fn default_mode() -> SamplingMode {
    SamplingMode::Multiple
}

fn default_tries() -> u64 {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeCmd {
    pub function: BernoulliSpec,
    pub alpha_eff: f64,
    pub weights: WeightSpec,
    #[serde(rename = "M_grid")]
    pub m_grid: Vec<f64>,
    pub c: f64,
    pub delta: f64,
    #[serde(default = "default_retry")]
    pub retry_cap_factor: u64,
    #[serde(default = "default_shifts")]
    pub num_shifts: usize,
    #[serde(default = "default_converge_grid")]
    pub grid_per_dim: usize,
    #[serde(default = "default_mode")]
    pub mode: SamplingMode,
    #[serde(default = "default_tries")]
    pub single_tries_per_prime: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractCmd {
    pub weights: WeightSpec,
    pub alpha: f64,
    pub lambda: f64,
    pub d: usize,
    #[serde(default)]
    pub pod_c: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum Params {
    Cross(CrossCmd),
    Plan(PlanCmd),
    Approximate(ApproximateCmd),
    Converge(ConvergeCmd),
    Lowerbound(SweepConfig),
    TractCheck(TractCmd),
}

/// A validated configuration with defaults filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub command: Command,
    pub seed: u64,
    pub params: Params,
}

fn typed<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T> {
    serde_json::from_value(v).context("invalid params")
}

impl Resolved {
    pub fn from_config(cfg: RunConfig, seed_override: Option<u64>) -> Result<Self> {
        if !cfg.params.is_object() {
            bail!("`params` must be a JSON object");
        }
        let params = match cfg.command {
            Command::Cross => {
                let mut p: CrossCmd = typed(cfg.params)?;
                if p.lambda.is_none() {
                    p.lambda = Some((1.0 / p.cross.alpha + 2.0) / 2.0);
                }
                Params::Cross(p)
            }
            Command::Plan => Params::Plan(typed(cfg.params)?),
            Command::Approximate => Params::Approximate(typed(cfg.params)?),
            Command::Converge => Params::Converge(typed(cfg.params)?),
            Command::Lowerbound => Params::Lowerbound(typed(cfg.params)?),
            Command::TractCheck => Params::TractCheck(typed(cfg.params)?),
        };
        Ok(Self {
            command: cfg.command,
            seed: seed_override.unwrap_or(cfg.seed),
            params,
        })
    }

    /// The configuration as embedded in every output file.
    pub fn to_json(&self) -> Value {
        let params = match &self.params {
            Params::Cross(p) => serde_json::to_value(p),
            Params::Plan(p) => serde_json::to_value(p),
            Params::Approximate(p) => serde_json::to_value(p),
            Params::Converge(p) => serde_json::to_value(p),
            Params::Lowerbound(p) => serde_json::to_value(p),
            Params::TractCheck(p) => serde_json::to_value(p),
        }
        .expect("params serialize");
        serde_json::json!({
            "command": self.command,
            "seed": self.seed,
            "params": params,
        })
    }
}

//! Experiment configuration files.

use polarnet::channel::{ChannelDesc, DiscreteChannel, InputDistribution};
use polarnet::codec::{CodeConfig, InfoSelection, Strategy};
use polarnet::estimator::{Estimator, EstimatorMode};
use polarnet::polar::Thresholds;
use polarnet::region::HkMaps;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// One experiment. Every command reads the same file and uses the fields it
/// needs; unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// First receiver's channel (or the only channel).
    pub y: ChannelDesc,
    /// Second receiver's channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<ChannelDesc>,
    /// Input marginals, one per sender. Uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<f64>>,
    #[serde(default = "default_blocklength")]
    pub blocklength: usize,
    #[serde(default)]
    pub levels: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default = "default_info")]
    pub info: InfoSelection,
    #[serde(default)]
    pub first_user: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decode_sets: Option<[Vec<usize>; 2]>,
    /// Tolerance of split searches and of the achievability check.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    /// Monotone path for `analyze` on a MAC, e.g. `"1^300 2^1024 1^724"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    /// Prepended to every output file name.
    #[serde(default)]
    pub output_prefix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default = "default_mode")]
    pub mode: EstimatorMode,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_enumeration_limit")]
    pub enumeration_limit: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { mode: default_mode(), samples: default_samples(), enumeration_limit: default_enumeration_limit() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionTask {
    /// Region of `y` for the configured input.
    Mac,
    /// `R_Y(p) ∩ R_Z(p)` for the configured input, plus the convex hull of
    /// the union over a product grid when `grid > 0`.
    Compound {
        #[serde(default)]
        grid: usize,
    },
    /// Han–Kobayashi region of the interference channel with receivers
    /// `y` and `z`.
    Hk { q_weights: Vec<f64>, marginals: Vec<[Vec<f64>; 4]>, maps: HkMaps },
    /// The four superposition regions of the broadcast channel with
    /// receivers `y` and `z`, with `x = map[v1][v2]`.
    Superposition { p1: Vec<f64>, p2: Vec<f64>, map: Vec<Vec<usize>> },
    Strong {
        #[serde(default = "default_grid_resolution")]
        grid_resolution: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Sweep {
    /// Fixed code; both receivers' outputs pass through an extra erasure
    /// with each listed probability.
    Erasure { values: Vec<f64> },
    /// One code per listed number of alignment levels.
    Levels { values: Vec<usize> },
}

fn default_blocklength() -> usize {
    1024
}
fn default_strategy() -> Strategy {
    Strategy::EqualSum
}
fn default_info() -> InfoSelection {
    InfoSelection::JointlyGood
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_trials() -> u64 {
    1000
}
fn default_mode() -> EstimatorMode {
    EstimatorMode::Auto
}
fn default_samples() -> usize {
    10_000
}
fn default_enumeration_limit() -> u64 {
    1 << 22
}
fn default_grid_resolution() -> usize {
    10
}

/// Command-line settings that change results.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<EstimatorMode>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.trim().is_empty() {
            return Err(CliError::Config("usage: the config file is empty".into()));
        }
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Config("field `trials` must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(CliError::Config("field `epsilon` must be positive".into()));
        }
        Thresholds::new(self.thresholds.good, self.thresholds.bad)?;
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.mode {
            self.estimator.mode = m;
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        short_hash(&serde_json::to_vec(self).expect("config serializes"))
    }

    pub fn channel_y(&self) -> Result<DiscreteChannel, CliError> {
        self.y.build().map_err(|e| CliError::Config(format!("field `y`: {e}")))
    }

    pub fn channel_z(&self) -> Result<DiscreteChannel, CliError> {
        let z = self.z.as_ref().ok_or_else(|| CliError::Config("field `z` is required".into()))?;
        z.build().map_err(|e| CliError::Config(format!("field `z`: {e}")))
    }

    pub fn target(&self) -> Result<&[f64], CliError> {
        self.target.as_deref().ok_or_else(|| CliError::Config("field `target` is required".into()))
    }

    pub fn estimator(&self) -> Estimator {
        Estimator {
            mode: self.estimator.mode,
            samples: self.estimator.samples,
            seed: self.seed,
            enumeration_limit: self.estimator.enumeration_limit,
        }
    }

    pub fn input_distribution(&self, ch: &DiscreteChannel) -> Result<InputDistribution, CliError> {
        match &self.input {
            None => Ok(InputDistribution::uniform(ch.input_arities())),
            Some(m) => {
                let p = InputDistribution::product(m.clone()).map_err(|e| CliError::Config(format!("field `input`: {e}")))?;
                if p.arities() != ch.input_arities() {
                    return Err(CliError::Config("field `input` does not match the channel's input alphabets".into()));
                }
                Ok(p)
            }
        }
    }

    pub fn code_config(&self) -> CodeConfig {
        CodeConfig {
            blocklength: self.blocklength,
            levels: self.levels,
            thresholds: self.thresholds,
            strategy: self.strategy,
            estimator: self.estimator(),
            info: self.info.clone(),
            first_user: self.first_user,
            frozen_seed: self.frozen_seed,
            decode_sets: self.decode_sets.clone(),
        }
    }
}

pub fn short_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

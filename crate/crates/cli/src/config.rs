//! TOML experiment configuration. Every table is optional; unknown keys are errors.
//!
//! ```toml
//! seed = 7
//!
//! [league]            # league::LeagueConfig
//! periods = 10
//! train_mask = [1.0, 0.0, 0.0, 0.0]
//! [league.pfsp]
//! checkpoint_period = 5000
//! [league.net]
//! static_hidden = [32]
//! recurrent = 16
//! head_hidden = [32]
//! [league.dqn]
//! train_every = 4
//! [league.env]
//! max_turns = 100
//!
//! [eval]
//! games = 5000
//! mask = [1.0, 0.0, 0.0, 0.0]
//!
//! [sweep]
//! weights = [-1.0, 0.0, 1.0]
//! games = 500
//!
//! [[counterfactual.masks]]
//! id = "lie_on"
//! weights = [1.0, 0.0, 1.0, 0.0]
//!
//! [tabular]
//! algorithm = "q-learning"
//! steps = 200000
//!
//! [theory]
//! mdps = 20
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stratmask::league::LeagueConfig;
use stratmask::tabular::{RandomMdpSpec, TdAlgorithm};

use crate::UsageError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub league: LeagueConfig,
    pub eval: EvalSection,
    pub sweep: SweepSection,
    pub counterfactual: CounterfactualSection,
    pub tabular: TabularSection,
    pub theory: TheorySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub games: u64,
    pub mask: [f64; 4],
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            games: 5000,
            mask: [1.0, 0.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub weights: Vec<f64>,
    pub games: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            weights: (-5..=5).map(f64::from).collect(),
            games: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedMask {
    pub id: String,
    pub weights: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterfactualSection {
    pub masks: Vec<NamedMask>,
}

impl Default for CounterfactualSection {
    fn default() -> Self {
        let m = |id: &str, lie: f64| NamedMask {
            id: id.into(),
            weights: [1.0, 0.0, lie, 0.0],
        };
        Self {
            masks: vec![m("lie_on", 1.0), m("lie_off", 0.0), m("lie_neg", -1.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TabularSection {
    /// MDP file; a random MDP from the fields below when absent.
    pub mdp: Option<PathBuf>,
    pub n_states: usize,
    pub n_actions: usize,
    pub k: usize,
    pub gamma: f64,
    pub branching: usize,
    pub n_terminal: usize,
    pub reward_scale: f64,
    pub algorithm: TdAlgorithm,
    /// All ones when absent.
    pub mask: Option<Vec<f64>>,
    pub steps: u64,
    pub max_episode_len: u64,
    pub checkpoints: u64,
    pub alpha0: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for TabularSection {
    fn default() -> Self {
        Self {
            mdp: None,
            n_states: 6,
            n_actions: 3,
            k: 2,
            gamma: 0.9,
            branching: 2,
            n_terminal: 1,
            reward_scale: 1.0,
            algorithm: TdAlgorithm::QLearning,
            mask: None,
            steps: 200_000,
            max_episode_len: 100,
            checkpoints: 20,
            alpha0: 1.0,
            rho: 0.85,
            epsilon: 0.5,
        }
    }
}

impl TabularSection {
    pub fn random_spec(&self) -> RandomMdpSpec {
        RandomMdpSpec {
            n_states: self.n_states,
            n_actions: self.n_actions,
            k: self.k,
            gamma: self.gamma,
            branching: self.branching,
            n_terminal: self.n_terminal,
            reward_scale: self.reward_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheorySection {
    pub mdps: usize,
    pub triples: usize,
    pub convergence_mdps: usize,
    pub convergence_steps: u64,
}

impl Default for TheorySection {
    fn default() -> Self {
        Self {
            mdps: 20,
            triples: 1000,
            convergence_mdps: 5,
            convergence_steps: 2_000_000,
        }
    }
}

/// Reads the config; a missing or unreadable file is a usage error.
pub fn load(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: FileConfig =
        toml::from_str(&text).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))?;
    Ok(cfg)
}

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::bnb::ClockKind;
use crate::instances::{Family, FamilyParams};
use crate::train::{CollectConfig, ImitationConfig, MctsConfig, PpoConfig, RefineConfig};

/// Everything one experiment needs, read from TOML or JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed for instance generation and training.
    #[serde(default)]
    pub seed: u64,
    /// Evaluation seeds; every (instance, strategy) cell runs once per seed.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub families: Vec<FamilyConfig>,
    pub strategies: Vec<StrategyConfig>,
    pub limits: EvalLimits,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub clock: ClockKind,
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// Family slug: setcover, cauctions, facilities or indset.
    pub name: String,
    /// Generator parameters; the desk sizes when absent.
    #[serde(default)]
    pub params: Option<FamilyParams>,
    #[serde(default)]
    pub train: usize,
    /// Held-out instance count. Required: there is no sensible default.
    pub test: usize,
}

impl FamilyConfig {
    pub fn family(&self) -> Family {
        Family::from_slug(&self.name).expect("validated")
    }

    pub fn params(&self) -> FamilyParams {
        self.params.unwrap_or_else(|| FamilyParams::desk(self.family()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "fsb")]
    Fsb,
    #[serde(rename = "policy")]
    Policy,
    #[serde(rename = "policy+mcts")]
    PolicyMcts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub label: String,
    pub kind: StrategyKind,
    /// `pretrain`, `ppo` or `refine` for a pipeline checkpoint, otherwise a
    /// file path.
    #[serde(default)]
    pub checkpoint: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalLimits {
    /// Unlimited when absent.
    #[serde(default)]
    pub node_limit: Option<usize>,
    #[serde(default)]
    pub time_limit_s: Option<f64>,
    /// Horizon of the dual-integral score, in clock seconds. Required.
    #[serde(rename = "score_T")]
    pub score_t: f64,
}

impl EvalLimits {
    pub fn solver_limits(&self) -> crate::bnb::Limits {
        crate::bnb::Limits {
            node_limit: self.node_limit.unwrap_or(usize::MAX),
            time_limit_s: self.time_limit_s.unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub hidden: usize,
    pub collect: CollectConfig,
    pub imitation: ImitationConfig,
    pub ppo: PpoStage,
    pub mcts: MctsStage,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            hidden: crate::gnn::DEFAULT_HIDDEN,
            collect: CollectConfig::default(),
            imitation: ImitationConfig::default(),
            ppo: PpoStage::default(),
            mcts: MctsStage::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoStage {
    /// Collect-then-update rounds; the snapshot is refreshed every round.
    pub rounds: usize,
    /// Expansion cap per rollout.
    pub node_cap: usize,
    pub update: PpoConfig,
}

impl Default for PpoStage {
    fn default() -> Self {
        Self { rounds: 1, node_cap: 50, update: PpoConfig::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MctsStage {
    pub rounds: usize,
    /// Root states searched per round, spread evenly over the rollouts.
    pub states_per_round: usize,
    pub node_cap: usize,
    pub search: MctsConfig,
    pub refine: RefineConfig,
}

impl Default for MctsStage {
    fn default() -> Self {
        Self {
            rounds: 1,
            states_per_round: 20,
            node_cap: 50,
            search: MctsConfig::default(),
            refine: RefineConfig::default(),
        }
    }
}

/// Output locations. Subdirectories are relative to `root` unless absolute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub root: PathBuf,
    pub instances: PathBuf,
    pub datasets: PathBuf,
    pub checkpoints: PathBuf,
    pub results: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            root: "runs".into(),
            instances: "instances".into(),
            datasets: "datasets".into(),
            checkpoints: "checkpoints".into(),
            results: "results".into(),
        }
    }
}

fn config_error(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config { field: field.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_error("<toml>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_error("<json>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `.json` files as JSON and anything else as TOML.
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(config_error("seeds", "need at least one seed"));
        }
        let mut seen = HashSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(config_error("seeds", format!("seed {s} appears twice")));
        }
        if !(self.limits.score_t > 0.0 && self.limits.score_t.is_finite()) {
            return Err(config_error("limits.score_T", "must be positive and finite"));
        }
        if self.limits.time_limit_s.is_some_and(|t| t.is_nan() || t <= 0.0) {
            return Err(config_error("limits.time_limit_s", "must be positive"));
        }
        if self.families.is_empty() {
            return Err(config_error("families", "need at least one family"));
        }
        let mut names = HashSet::new();
        for f in &self.families {
            let Some(fam) = Family::from_slug(&f.name) else {
                return Err(config_error("families.name", format!("unknown family `{}`", f.name)));
            };
            if !names.insert(fam) {
                return Err(config_error("families.name", format!("`{}` listed twice", f.name)));
            }
            if let Some(p) = f.params {
                if p.family() != fam {
                    return Err(config_error("families.params", format!("parameters do not match `{}`", f.name)));
                }
            }
        }
        let mut labels = HashSet::new();
        for s in &self.strategies {
            if s.label.is_empty() || s.label.contains([',', '\n', '|']) {
                return Err(config_error("strategies.label", format!("`{}` is empty or has , | or newline", s.label)));
            }
            if !labels.insert(s.label.as_str()) {
                return Err(config_error("strategies.label", format!("`{}` used twice", s.label)));
            }
            let learned = matches!(s.kind, StrategyKind::Policy | StrategyKind::PolicyMcts);
            if learned && s.checkpoint.is_none() {
                return Err(config_error("strategies.checkpoint", format!("`{}` needs a checkpoint", s.label)));
            }
        }
        if self.training.hidden == 0 {
            return Err(config_error("training.hidden", "must be positive"));
        }
        Ok(())
    }
}

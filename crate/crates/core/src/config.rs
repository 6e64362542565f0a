//! Experiment configuration: JSON schema, dotted-key overrides, validation
//! and stable fingerprints / seed derivation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::adaptive::LearningParams;
use crate::agent::AgentVariant;
use crate::error::{LabError, Result};
use crate::game::{GameMode, LoserPayoff, PayoffScheme};
use crate::metrics::FairnessRule;
use crate::reactive::ReactiveParams;
use crate::sim::ArenaConfig;

/// Environment variable that overrides `master_seed`.
pub const SEED_ENV: &str = "EXES_LAB_SEED";

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentsConfig {
    pub variant: AgentVariant,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub fairness: FairnessRule,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub loser_payoff: LoserPayoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: GameMode,
    pub payoffs: PayoffScheme,
    pub rounds: u32,
    pub dyads: u32,
    pub agents: AgentsConfig,
    pub arena: ArenaConfig,
    pub reactive: ReactiveParams,
    pub adaptive: LearningParams,
    pub game: GameConfig,
    pub metrics: MetricsConfig,
    pub master_seed: u64,
    pub parallelism: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: GameMode::Dynamic,
            payoffs: PayoffScheme::HIGH,
            rounds: 50,
            dyads: 50,
            agents: AgentsConfig::default(),
            arena: ArenaConfig::default(),
            reactive: ReactiveParams::default(),
            adaptive: LearningParams::default(),
            game: GameConfig::default(),
            metrics: MetricsConfig::default(),
            master_seed: 2019,
            parallelism: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| LabError::config(e.path().to_string(), e.inner().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(LabError::config("rounds", "must be >= 1"));
        }
        if self.dyads == 0 {
            return Err(LabError::config("dyads", "must be >= 1"));
        }
        if self.parallelism == 0 {
            return Err(LabError::config("parallelism", "must be >= 1"));
        }
        self.payoffs.validate()?;
        self.arena.validate()?;
        self.reactive.validate()?;
        self.adaptive.validate()?;
        Ok(())
    }

    /// Applies `key=value` overrides. Keys are dotted paths into the JSON
    /// form (`adaptive.gamma=0.4`); values are parsed as JSON when possible
    /// and as bare strings otherwise.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut tree = serde_json::to_value(self)?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| LabError::config(item, "override must look like key=value"))?;
            let key = key.trim();
            let value =
                serde_json::from_str::<Value>(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
            set_dotted(&mut tree, key, value)?;
        }
        let config: ExperimentConfig = serde_path_to_error::deserialize(tree)
            .map_err(|e| LabError::config(e.path().to_string(), e.inner().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// The config with execution-only settings reset, so that results do not
    /// depend on how many threads produced them.
    pub fn canonical(&self) -> Self {
        ExperimentConfig {
            parallelism: 1,
            ..self.clone()
        }
    }

    /// Short stable hash of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(&self.canonical()).expect("config always serializes");
        let digest = Sha256::digest(&canonical);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn set_dotted(tree: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = node
            .as_object_mut()
            .ok_or_else(|| LabError::config(key, "unknown config key"))?;
        let child = map
            .get_mut(*part)
            .ok_or_else(|| LabError::config(key, "unknown config key"))?;
        if i + 1 == parts.len() {
            *child = value;
            return Ok(());
        }
        node = child;
    }
    Err(LabError::config(key, "empty key"))
}

/// Per-dyad seed: first eight bytes of SHA-256 over the master seed, the
/// condition label and the dyad index. Conditions never share streams.
pub fn derive_seed(master_seed: u64, condition: &str, dyad_index: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(condition.as_bytes());
    h.update([0u8]);
    h.update(dyad_index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest has 32 bytes"))
}

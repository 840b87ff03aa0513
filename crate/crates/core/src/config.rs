//! Experiment configuration: YAML in, validated struct out.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::ENV_NAMES;
use crate::error::{Error, Result};
use crate::reward_model::{Family, SigmaBounds};
use crate::sac::SacConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    LrrGaussian,
    LrrSkew,
    MseRd,
    Sparse,
    OracleDense,
}

impl RewardMode {
    /// Reward-model family trained in this mode, if any.
    pub fn family(self) -> Option<Family> {
        match self {
            RewardMode::LrrGaussian => Some(Family::Gaussian),
            RewardMode::LrrSkew => Some(Family::SkewNormal),
            RewardMode::MseRd => Some(Family::FixedSigmaMse),
            RewardMode::Sparse | RewardMode::OracleDense => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RewardMode::LrrGaussian => "lrr_gaussian",
            RewardMode::LrrSkew => "lrr_skew",
            RewardMode::MseRd => "mse_rd",
            RewardMode::Sparse => "sparse",
            RewardMode::OracleDense => "oracle_dense",
        }
    }
}

/// When model rewards are written into SAC minibatches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelabelMode {
    /// Once, when an episode's transitions enter the replay buffer.
    OnInsert,
    /// Every time a minibatch is drawn, from the current model.
    OnSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: String,
    pub reward_mode: RewardMode,
    pub learning_rate: f64,
    pub gamma: f64,
    pub polyak: f64,
    pub initial_temperature: f64,
    /// `None` means `-action_dim`.
    pub target_entropy: Option<f64>,
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub gradient_steps_per_env_step: usize,
    pub replay_capacity: usize,
    pub sac_batch_size: usize,
    /// Trajectories per reward-model minibatch.
    pub reward_batch_size: usize,
    pub reward_updates_per_episode: usize,
    pub reward_hidden_layers: usize,
    pub reward_hidden_units: usize,
    /// Reward-model trajectory buffer size, in transitions.
    pub reward_buffer_capacity: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub shared_noise: bool,
    pub relabel: RelabelMode,
    pub horizon: usize,
    pub total_steps: usize,
    /// Uniform-random actions for the first `start_steps` environment steps.
    pub start_steps: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub dump_trajectories: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            environment: "point_mass".into(),
            reward_mode: RewardMode::LrrGaussian,
            learning_rate: 3e-4,
            gamma: 0.99,
            polyak: 0.005,
            initial_temperature: 1.0,
            target_entropy: None,
            hidden_layers: 2,
            hidden_units: 256,
            gradient_steps_per_env_step: 1,
            replay_capacity: 100_000,
            sac_batch_size: 512,
            reward_batch_size: 4,
            reward_updates_per_episode: 4,
            reward_hidden_layers: 2,
            reward_hidden_units: 256,
            reward_buffer_capacity: 100_000,
            sigma_min: SigmaBounds::default().min,
            sigma_max: SigmaBounds::default().max,
            shared_noise: false,
            relabel: RelabelMode::OnInsert,
            horizon: crate::env::DEFAULT_HORIZON,
            total_steps: 50_000,
            start_steps: 1_000,
            eval_interval: 1_000,
            eval_episodes: 5,
            seeds: vec![0, 1, 2],
            output_dir: PathBuf::from("runs"),
            dump_trajectories: false,
        }
    }
}

/// Keys that only affect where and what gets written, not the run itself.
const NON_SEMANTIC_KEYS: [&str; 3] = ["seeds", "output_dir", "dump_trajectories"];

fn bad(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Best-effort key name for a serde error at `path`.
fn error_key(path: &str, message: &str) -> String {
    if path != "." && !path.is_empty() {
        return path.to_string();
    }
    for marker in ["unknown field `", "missing field `"] {
        if let Some(rest) = message.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    "<document>".to_string()
}

impl ExperimentConfig {
    /// Parses YAML, filling absent keys with defaults, then validates.
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_yaml::Value =
            serde_yaml::from_str(text).map_err(|e| bad("<document>", e.to_string()))?;
        let cfg = if value.is_null() {
            Self::default()
        } else {
            serde_path_to_error::deserialize(value).map_err(|e| {
                let path = e.path().to_string();
                let message = e.inner().to_string();
                bad(&error_key(&path, &message), message)
            })?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).with_context(format!("reading {}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(key, format!("must be a positive finite number, got {v}")))
            }
        }
        fn at_least_one(key: &str, v: usize) -> Result<()> {
            if v >= 1 {
                Ok(())
            } else {
                Err(bad(key, "must be at least 1"))
            }
        }
        if !ENV_NAMES.contains(&self.environment.as_str()) {
            return Err(bad(
                "environment",
                format!("unknown environment `{}`; expected one of {ENV_NAMES:?}", self.environment),
            ));
        }
        positive("learning_rate", self.learning_rate)?;
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(bad("gamma", format!("must lie in [0, 1], got {}", self.gamma)));
        }
        if !(self.polyak > 0.0 && self.polyak <= 1.0) {
            return Err(bad("polyak", format!("must lie in (0, 1], got {}", self.polyak)));
        }
        positive("initial_temperature", self.initial_temperature)?;
        if let Some(h) = self.target_entropy {
            if !h.is_finite() {
                return Err(bad("target_entropy", "must be finite"));
            }
        }
        at_least_one("hidden_layers", self.hidden_layers)?;
        at_least_one("hidden_units", self.hidden_units)?;
        at_least_one("gradient_steps_per_env_step", self.gradient_steps_per_env_step)?;
        at_least_one("sac_batch_size", self.sac_batch_size)?;
        if self.replay_capacity < self.sac_batch_size {
            return Err(bad("replay_capacity", "must be at least sac_batch_size"));
        }
        at_least_one("reward_batch_size", self.reward_batch_size)?;
        at_least_one("reward_hidden_layers", self.reward_hidden_layers)?;
        at_least_one("reward_hidden_units", self.reward_hidden_units)?;
        at_least_one("reward_buffer_capacity", self.reward_buffer_capacity)?;
        positive("sigma_min", self.sigma_min)?;
        positive("sigma_max", self.sigma_max)?;
        if self.sigma_max <= self.sigma_min {
            return Err(bad("sigma_max", "must exceed sigma_min"));
        }
        at_least_one("horizon", self.horizon)?;
        at_least_one("eval_interval", self.eval_interval)?;
        at_least_one("eval_episodes", self.eval_episodes)?;
        if self.seeds.is_empty() {
            return Err(bad("seeds", "at least one seed is required"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of every semantic field.
    ///
    /// Canonical means sorted keys, so the hash does not depend on the key
    /// order of the source document. Seeds and output locations are excluded.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let serde_json::Value::Object(map) = &mut value {
            for key in NON_SEMANTIC_KEYS {
                map.remove(key);
            }
        }
        let canonical = serde_json::to_string(&value).expect("json serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn sac_config(&self) -> SacConfig {
        SacConfig {
            hidden: vec![self.hidden_units; self.hidden_layers],
            learning_rate: self.learning_rate,
            gamma: self.gamma,
            tau: self.polyak,
            initial_temperature: self.initial_temperature,
            target_entropy: self.target_entropy,
            ..SacConfig::default()
        }
    }

    pub fn sigma_bounds(&self) -> SigmaBounds {
        SigmaBounds {
            min: self.sigma_min,
            max: self.sigma_max,
        }
    }

    pub fn reward_hidden(&self) -> Vec<usize> {
        vec![self.reward_hidden_units; self.reward_hidden_layers]
    }
}

/// Settings for the `diagnose-autocorr` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub environments: Vec<String>,
    pub episodes: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            environments: ENV_NAMES.iter().map(|s| s.to_string()).collect(),
            episodes: 50,
            horizon: crate::env::DEFAULT_HORIZON,
            seed: 0,
        }
    }
}

impl DiagnoseConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_yaml::Value =
            serde_yaml::from_str(text).map_err(|e| bad("<document>", e.to_string()))?;
        let cfg: Self = if value.is_null() {
            Self::default()
        } else {
            serde_path_to_error::deserialize(value).map_err(|e| {
                let path = e.path().to_string();
                let message = e.inner().to_string();
                bad(&error_key(&path, &message), message)
            })?
        };
        if let Some(env) = cfg.environments.iter().find(|e| !ENV_NAMES.contains(&e.as_str())) {
            return Err(bad("environments", format!("unknown environment `{env}`")));
        }
        if cfg.episodes == 0 {
            return Err(bad("episodes", "must be at least 1"));
        }
        if cfg.horizon < 2 {
            return Err(bad("horizon", "must be at least 2"));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(err: Error) -> String {
        match err {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn empty_document_gives_defaults() {
        for text in ["", "# nothing here\n", "{}"] {
            let cfg = ExperimentConfig::parse(text).unwrap();
            assert_eq!(cfg, ExperimentConfig::default());
        }
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.learning_rate, 3e-4);
        assert_eq!(cfg.gamma, 0.99);
        assert_eq!(cfg.polyak, 0.005);
        assert_eq!(cfg.replay_capacity, 100_000);
        assert_eq!(cfg.sac_batch_size, 512);
        assert_eq!(cfg.reward_batch_size, 4);
        assert_eq!(cfg.initial_temperature, 1.0);
        assert_eq!((cfg.hidden_layers, cfg.hidden_units), (2, 256));
        assert_eq!(cfg.gradient_steps_per_env_step, 1);
    }

    #[test]
    fn range_errors_name_the_key() {
        assert_eq!(key_of(ExperimentConfig::parse("gamma: 1.5").unwrap_err()), "gamma");
        assert_eq!(key_of(ExperimentConfig::parse("polyak: 0").unwrap_err()), "polyak");
        assert_eq!(key_of(ExperimentConfig::parse("learning_rate: -1").unwrap_err()), "learning_rate");
        assert_eq!(key_of(ExperimentConfig::parse("environment: mujoco").unwrap_err()), "environment");
    }

    #[test]
    fn unknown_and_mistyped_keys_are_rejected() {
        assert_eq!(key_of(ExperimentConfig::parse("gamm: 0.9").unwrap_err()), "gamm");
        assert_eq!(key_of(ExperimentConfig::parse("horizon: lots").unwrap_err()), "horizon");
        assert_eq!(key_of(ExperimentConfig::parse("reward_mode: dense").unwrap_err()), "reward_mode");
    }

    #[test]
    fn yaml_round_trip() {
        let cfg = ExperimentConfig {
            reward_mode: RewardMode::LrrSkew,
            target_entropy: Some(-1.5),
            relabel: RelabelMode::OnSample,
            seeds: vec![3, 9],
            ..ExperimentConfig::default()
        };
        assert_eq!(ExperimentConfig::parse(&cfg.to_yaml()).unwrap(), cfg);
    }

    #[test]
    fn hash_ignores_key_order_and_output_location() {
        let a = ExperimentConfig::parse("gamma: 0.9\nhorizon: 50\n").unwrap();
        let b = ExperimentConfig::parse("horizon: 50\ngamma: 0.9\noutput_dir: elsewhere\nseeds: [7]\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::parse("gamma: 0.9\nhorizon: 51\n").unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn diagnose_config_defaults_and_errors() {
        let cfg = DiagnoseConfig::parse("").unwrap();
        assert_eq!(cfg.environments.len(), 3);
        assert_eq!(key_of(DiagnoseConfig::parse("episodes: 0").unwrap_err()), "episodes");
        assert_eq!(key_of(DiagnoseConfig::parse("environments: [moon]").unwrap_err()), "environments");
    }
}

//! Run configuration file (TOML).
//!
//! Every section is optional and every omitted key takes its default.
//! Unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//!
//! [neat]
//! population_size = 64
//!
//! [cmaes]
//! population_size = 32
//! init_sigma = 0.1
//!
//! [attention]
//! top_k = 10
//!
//! [pipeline]
//! generations = 50
//! tune_generations = 100
//!
//! [protocol]
//! trials = 3
//! seed_schedule = "fixed"
//!
//! [env]
//! kind = "patch_chase"
//! ```

use crate::attention::AttentionConfig;
use crate::cmaes::CmaesConfig;
use crate::envs::{EnvError, EnvFactory, ExternalFactory, PatchChaseFactory, PatchChaseRules};
use crate::neat::NeatConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), message: message.to_string() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    /// Root seed; every random stream of the run derives from it.
    pub seed: u64,
    pub neat: NeatConfig,
    pub cmaes: CmaesConfig,
    pub attention: AttentionConfig,
    pub pipeline: PipelineConfig,
    pub protocol: ProtocolConfig,
    pub env: EnvConfig,
}


#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Stage-1 generations.
    pub generations: u64,
    /// Stage-2 CMA-ES generations; 0 skips tuning.
    pub tune_generations: u64,
    /// Initial step size of the stage-2 search.
    pub tune_sigma: f64,
    /// Standard deviation of the initial attention parameters.
    pub attention_init_stdev: f64,
    /// Write a checkpoint every this many generations; 0 disables checkpoints.
    pub checkpoint_every: u64,
    /// Number of most recent checkpoints kept (plus the best).
    pub checkpoint_keep: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            generations: 50,
            tune_generations: 100,
            tune_sigma: 0.1,
            attention_init_stdev: 0.1,
            checkpoint_every: 1,
            checkpoint_keep: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSchedule {
    /// The same episode seeds every generation.
    Fixed,
    /// Fresh episode seeds each generation.
    PerGeneration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Episodes per fitness evaluation, averaged.
    pub trials: usize,
    /// Cap on frames per episode; the environment's own horizon applies when absent.
    pub frame_limit: Option<usize>,
    pub seed_schedule: SeedSchedule,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig { trials: 3, frame_limit: None, seed_schedule: SeedSchedule::PerGeneration }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    PatchChase,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: EnvKind,
    /// Program and arguments of an external environment.
    pub command: Vec<String>,
    /// Seconds to wait for each reply from an external environment.
    pub timeout_secs: f64,
    pub patch_chase: PatchChaseRules,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            kind: EnvKind::PatchChase,
            command: Vec::new(),
            timeout_secs: 10.0,
            patch_chase: PatchChaseRules::default(),
        }
    }
}

impl EnvConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    /// Builds the configured environment factory. External environments are
    /// contacted once to learn their spec.
    pub fn factory(&self) -> Result<Arc<dyn EnvFactory>, EnvError> {
        Ok(match self.kind {
            EnvKind::PatchChase => Arc::new(PatchChaseFactory::new(self.patch_chase.clone())?),
            EnvKind::External => Arc::new(ExternalFactory::new(self.command.clone(), self.timeout())?),
        })
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.neat.validate().map_err(|e| invalid("neat", e))?;
        self.cmaes.validate().map_err(|e| invalid("cmaes", e))?;
        self.attention.validate().map_err(|e| invalid("attention", e))?;
        let p = &self.pipeline;
        if !(p.tune_sigma > 0.0 && p.tune_sigma.is_finite()) {
            return Err(invalid("pipeline.tune_sigma", format!("must be positive, got {}", p.tune_sigma)));
        }
        if !(p.attention_init_stdev >= 0.0 && p.attention_init_stdev.is_finite()) {
            return Err(invalid("pipeline.attention_init_stdev", "must be a nonnegative number"));
        }
        if p.checkpoint_keep == 0 {
            return Err(invalid("pipeline.checkpoint_keep", "must be at least 1"));
        }
        if self.protocol.trials == 0 {
            return Err(invalid("protocol.trials", "must be at least 1"));
        }
        if self.protocol.frame_limit == Some(0) {
            return Err(invalid("protocol.frame_limit", "must be at least 1"));
        }
        match self.env.kind {
            EnvKind::PatchChase => {
                let rules = &self.env.patch_chase;
                rules.validate().map_err(|e| invalid("env.patch_chase", e))?;
                self.attention
                    .validate_for_frame(rules.board, rules.board)
                    .map_err(|e| invalid("attention", e))?;
            }
            EnvKind::External => {
                if self.env.command.is_empty() {
                    return Err(invalid("env.command", "required when kind = \"external\""));
                }
            }
        }
        if !(self.env.timeout_secs > 0.0 && self.env.timeout_secs.is_finite()) {
            return Err(invalid("env.timeout_secs", "must be positive"));
        }
        Ok(())
    }
}

//! Episodic pixel environments.
//!
//! [`PatchChase`] is the built-in game; [`ExternalEnv`] proxies an
//! environment running in a child process over a line protocol.

mod external;
mod patch_chase;

pub use external::{handshake, ExternalEnv, ExternalFactory, DEFAULT_STEP_TIMEOUT};
pub use patch_chase::{PatchChase, PatchChaseFactory, PatchChaseRules, AGENT, BACKGROUND, TARGET};

use crate::{Frame, Seed};
use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub height: usize,
    pub width: usize,
    /// Number of discrete actions, numbered from 0.
    pub actions: usize,
    pub max_frames: usize,
    /// Score assigned to an episode that could not be completed.
    pub score_floor: f64,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.actions < 2 {
            return Err(EnvError::InvalidSpec(format!("action count must be at least 2, got {}", self.actions)));
        }
        if self.max_frames < 1 {
            return Err(EnvError::InvalidSpec("max_frames must be at least 1".into()));
        }
        if self.height == 0 || self.width == 0 {
            return Err(EnvError::InvalidSpec(format!("frame size {}x{} is empty", self.height, self.width)));
        }
        if !self.score_floor.is_finite() {
            return Err(EnvError::InvalidSpec("score floor must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub frame: Frame,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("episode is over; call reset first")]
    EpisodeOver,
    #[error("environment has not been reset")]
    NotReset,
    #[error("action {action} out of range (0..{actions})")]
    BadAction { action: usize, actions: usize },
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("no reply from environment within {0:?}")]
    Timeout(Duration),
    #[error("environment process exited")]
    ChildExited,
    #[error("environment i/o: {0}")]
    Io(String),
}

/// A single-owner episodic environment.
pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    /// Starts an episode whose course is fully determined by `seed` and the actions taken.
    fn reset(&mut self, seed: Seed) -> Result<Frame, EnvError>;

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError>;
}

/// Builds independent environment instances, one per concurrent evaluation.
pub trait EnvFactory: Send + Sync {
    fn spec(&self) -> &EnvSpec;

    fn create(&self) -> Result<Box<dyn Environment>, EnvError>;
}

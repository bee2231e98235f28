use super::{EnvError, EnvFactory, EnvSpec, Environment, StepResult};
use crate::rng::StreamRng;
use crate::{Frame, Seed};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Board geometry and scoring of PatchChase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchChaseRules {
    pub board: usize,
    pub square: usize,
    /// Pixels moved per step; also the spacing of target positions.
    pub step: usize,
    pub max_frames: usize,
    pub catch_reward: f64,
    pub step_penalty: f64,
}

impl Default for PatchChaseRules {
    fn default() -> Self {
        PatchChaseRules { board: 64, square: 8, step: 4, max_frames: 200, catch_reward: 1.0, step_penalty: 0.01 }
    }
}

impl PatchChaseRules {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::InvalidSpec(m));
        if self.square == 0 || self.square > self.board {
            return bad(format!("square {} does not fit board {}", self.square, self.board));
        }
        if self.step == 0 || !(self.board - self.square).is_multiple_of(self.step) {
            return bad(format!("step {} must divide the free span {}", self.step, self.board - self.square));
        }
        if (self.board - self.square) / self.step < 2 * self.square.div_ceil(self.step) {
            return bad("board too small for agent and target to be apart".into());
        }
        if self.max_frames == 0 {
            return bad("max_frames must be at least 1".into());
        }
        if !(self.catch_reward.is_finite() && self.step_penalty.is_finite() && self.step_penalty >= 0.0) {
            return bad("rewards must be finite and the penalty nonnegative".into());
        }
        Ok(())
    }

    pub fn spec(&self) -> EnvSpec {
        EnvSpec {
            name: "PatchChase".into(),
            height: self.board,
            width: self.board,
            actions: 5,
            max_frames: self.max_frames,
            score_floor: -self.step_penalty * self.max_frames as f64,
        }
    }

    /// Largest top-left coordinate of a square.
    fn span(&self) -> usize {
        self.board - self.square
    }

    fn start(&self) -> (usize, usize) {
        let mid = (self.span() / 2) / self.step * self.step;
        (mid, mid)
    }
}

pub const BACKGROUND: [u8; 3] = [12, 12, 20];
pub const AGENT: [u8; 3] = [255, 255, 255];
pub const TARGET: [u8; 3] = [220, 40, 40];

/// Actions: 0 noop, 1 up, 2 down, 3 left, 4 right.
///
/// The agent catches the target when the two squares overlap by at least
/// half a square's area; the target then jumps to a new seeded position
/// clear of the agent. Every step costs `step_penalty`.
#[derive(Clone, Debug)]
pub struct PatchChase {
    rules: PatchChaseRules,
    spec: EnvSpec,
    rng: Option<StreamRng>,
    agent: (usize, usize),
    target: (usize, usize),
    frames: usize,
    done: bool,
}

impl PatchChase {
    pub fn new(rules: PatchChaseRules) -> Result<Self, EnvError> {
        rules.validate()?;
        let spec = rules.spec();
        let start = rules.start();
        Ok(PatchChase { rules, spec, rng: None, agent: start, target: start, frames: 0, done: false })
    }

    pub fn rules(&self) -> &PatchChaseRules {
        &self.rules
    }

    /// Top-left `(y, x)` of the agent square.
    pub fn agent(&self) -> (usize, usize) {
        self.agent
    }

    /// Top-left `(y, x)` of the target square.
    pub fn target(&self) -> (usize, usize) {
        self.target
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn overlap(&self) -> usize {
        let s = self.rules.square;
        let dy = s.saturating_sub(self.agent.0.abs_diff(self.target.0));
        let dx = s.saturating_sub(self.agent.1.abs_diff(self.target.1));
        dy * dx
    }

    pub fn render(&self) -> Frame {
        let s = self.rules.square;
        let mut f = Frame::filled(self.rules.board, self.rules.board, BACKGROUND);
        f.fill_rect(self.target.0, self.target.1, s, s, TARGET);
        f.fill_rect(self.agent.0, self.agent.1, s, s, AGENT);
        f
    }

    fn respawn(&mut self) {
        let rng = self.rng.as_mut().expect("reset before respawn");
        let slots = self.rules.span() / self.rules.step + 1;
        let s = self.rules.square;
        loop {
            let y = rng.random_range(0..slots) * self.rules.step;
            let x = rng.random_range(0..slots) * self.rules.step;
            if self.agent.0.abs_diff(y) >= s || self.agent.1.abs_diff(x) >= s {
                self.target = (y, x);
                return;
            }
        }
    }
}

impl Environment for PatchChase {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: Seed) -> Result<Frame, EnvError> {
        self.rng = Some(seed.rng());
        self.agent = self.rules.start();
        self.frames = 0;
        self.done = false;
        self.respawn();
        Ok(self.render())
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if self.rng.is_none() {
            return Err(EnvError::NotReset);
        }
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        if action >= self.spec.actions {
            return Err(EnvError::BadAction { action, actions: self.spec.actions });
        }
        let (step, span) = (self.rules.step, self.rules.span());
        let (y, x) = self.agent;
        self.agent = match action {
            1 => (y.saturating_sub(step), x),
            2 => ((y + step).min(span), x),
            3 => (y, x.saturating_sub(step)),
            4 => (y, (x + step).min(span)),
            _ => (y, x),
        };
        let mut reward = -self.rules.step_penalty;
        let s = self.rules.square;
        if 2 * self.overlap() >= s * s {
            reward += self.rules.catch_reward;
            self.respawn();
        }
        self.frames += 1;
        self.done = self.frames >= self.rules.max_frames;
        Ok(StepResult { frame: self.render(), reward, done: self.done })
    }
}

#[derive(Clone, Debug)]
pub struct PatchChaseFactory {
    rules: PatchChaseRules,
    spec: EnvSpec,
}

impl PatchChaseFactory {
    pub fn new(rules: PatchChaseRules) -> Result<Self, EnvError> {
        rules.validate()?;
        let spec = rules.spec();
        Ok(PatchChaseFactory { rules, spec })
    }
}

impl EnvFactory for PatchChaseFactory {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn create(&self) -> Result<Box<dyn Environment>, EnvError> {
        Ok(Box::new(PatchChase::new(self.rules.clone())?))
    }
}

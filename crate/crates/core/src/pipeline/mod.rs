//! Two-stage training.
//!
//! Stage 1 alternates, every generation, between searching attention
//! parameters with CMA-ES while the best network is frozen and evaluating
//! the whole NEAT population under the best attention found. Stage 2 freezes
//! topology and attention and tunes the network weights with CMA-ES.

mod checkpoint;
mod evaluate;
mod ledger;
mod model;
mod output;
mod seesaw;
mod tune;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use evaluate::{
    evaluate_individual, perceive, run_episode, select_action, threads_from_env, EpisodeOutcome, EvaluationProtocol,
    Evaluator, Percept,
};
pub use ledger::{read_ledger, LedgerRow, Phase, RunLedger, TimingRow};
pub use model::{parameter_report, FinalModel, ParameterReport, MODEL_FORMAT, MODEL_VERSION};
pub use output::{NullObserver, RunObserver, RunOutput};
pub use seesaw::{seesaw_generation, train_stage1, ScoredPair, SeesawState};
pub use tune::{resume_stage2, tune_stage2, TuneState};

use crate::attention::AttentionError;
use crate::cmaes::CmaesError;
use crate::config::ConfigError;
use crate::envs::EnvError;
use crate::neat::NeatError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Neat(#[from] NeatError),
    #[error(transparent)]
    Attention(#[from] AttentionError),
    #[error(transparent)]
    Cmaes(#[from] CmaesError),
    #[error("genome has {inputs} inputs and {outputs} outputs; the agent needs {expected_inputs} and {expected_outputs}")]
    IoMismatch { inputs: usize, outputs: usize, expected_inputs: usize, expected_outputs: usize },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Format(String),
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Io(e.to_string())
    }
}

impl From<csv::Error> for PipelineError {
    fn from(e: csv::Error) -> Self {
        PipelineError::Io(e.to_string())
    }
}

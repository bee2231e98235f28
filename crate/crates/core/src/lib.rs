//! Neuroevolution of pixel-input agents.
//!
//! A NEAT population is coevolved with a self-attention patch selector:
//! each generation the best network is frozen while CMA-ES searches the
//! attention Key/Query parameters, then the best attention is frozen while
//! the whole NEAT population is evaluated and reproduced. A second stage
//! freezes topology and attention and tunes the network weights with CMA-ES.
//!
//! Modules:
//!
//! - [`neat`]: genomes, operators, speciation and recurrent network evaluation.
//! - [`attention`]: patch extraction, attention scoring and top-K selection.
//! - [`cmaes`]: an ask/tell CMA-ES.
//! - [`envs`]: deterministic pixel environments and the external-process adapter.
//! - [`pipeline`]: the two training stages, evaluation protocol, ledger and checkpoints.
//! - [`config`]: the run configuration file.

pub mod attention;
pub mod cmaes;
pub mod config;
pub mod envs;
pub mod frame;
pub mod neat;
pub mod pipeline;
pub mod rng;

pub use frame::Frame;
pub use rng::Seed;

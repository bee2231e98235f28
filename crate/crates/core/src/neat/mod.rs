//! NEAT: genomes with historical markings, structural and weight mutation,
//! crossover, speciation by compatibility distance, and recurrent networks.

mod config;
mod genome;
mod innovation;
mod network;
mod operators;
mod population;
mod reproduction;
mod species;

pub use config::{Activation, Aggregation, CompatibilityNormalizer, FitnessCriterion, NeatConfig};
pub use genome::{
    compatibility_distance, ConnectionGene, Genome, GenomeCheckpoint, Innovation, NodeGene, NodeId, NodeKind,
    GENOME_FORMAT_VERSION,
};
pub use innovation::InnovationRegistry;
pub use network::{activate, sigmoid, Network, NetworkState};
pub use operators::crossover;
pub use population::Population;
pub use reproduction::{next_generation, offspring_quotas};
pub use species::{speciate, Species};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeatError {
    #[error("parents have different input/output layouts")]
    IncompatibleIo,
    #[error("expected {expected} inputs, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("weight vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("every species went extinct and reset-on-extinction is disabled")]
    EmptyPopulation,
    #[error("genome {index} has no fitness assigned")]
    MissingFitness { index: usize },
    #[error("invalid genome: {0}")]
    InvalidGenome(String),
    #[error("invalid NEAT configuration: {0}")]
    InvalidConfig(String),
    #[error("genome checkpoint: {0}")]
    Format(String),
}

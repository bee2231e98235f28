//! Covariance Matrix Adaptation Evolution Strategy with an ask/tell interface.
//!
//! Strategy parameters (recombination weights, cumulation and learning
//! rates, damping) are the standard defaults; only the population size and
//! initial step size are configured. Fitness is maximized.

mod encoding;
mod state;
mod trace;

pub use state::{CmaesState, GenerationSummary};
pub use trace::{write_trace, TraceRow, TraceWriter};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CmaesError {
    #[error("invalid CMA-ES configuration: {0}")]
    BadConfig(String),
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fitness of candidate {index} is not finite")]
    NonFiniteFitness { index: usize },
    #[error("eigendecomposition of the covariance matrix failed")]
    Eigen,
    #[error("CMA-ES state: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaesConfig {
    pub population_size: usize,
    pub init_sigma: f64,
    pub max_evaluations: Option<u64>,
    pub target_fitness: Option<f64>,
}

impl Default for CmaesConfig {
    fn default() -> Self {
        CmaesConfig { population_size: 32, init_sigma: 0.1, max_evaluations: None, target_fitness: None }
    }
}

impl CmaesConfig {
    pub fn validate(&self) -> Result<(), CmaesError> {
        if self.population_size < 2 {
            return Err(CmaesError::BadConfig(format!("population_size must be at least 2, got {}", self.population_size)));
        }
        if !(self.init_sigma > 0.0 && self.init_sigma.is_finite()) {
            return Err(CmaesError::BadConfig(format!("init_sigma must be positive, got {}", self.init_sigma)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxEvals,
    TargetReached,
    ConditionNumber,
}

/// Condition number of the covariance above which the run is stopped.
pub const MAX_CONDITION: f64 = 1e14;

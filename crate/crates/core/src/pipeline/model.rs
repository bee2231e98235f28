use super::PipelineError;
use crate::attention::AttentionParams;
use crate::config::RunConfig;
use crate::neat::Genome;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MODEL_FORMAT: &str = "seesaw-model";
pub const MODEL_VERSION: u32 = 1;

/// A trained agent: frozen topology with its weights, attention parameters,
/// and the configuration it was trained under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalModel {
    pub format: String,
    pub version: u32,
    pub genome: Genome,
    /// The genome's weight vector (enabled connection weights, then biases).
    pub weights: Vec<f64>,
    pub attention: AttentionParams,
    pub config: RunConfig,
    /// Whether stage-2 weight tuning was applied.
    pub tuned: bool,
    pub fitness: f64,
    /// Fitness of the stage-1 selection this model descends from.
    pub stage1_fitness: f64,
}

impl FinalModel {
    pub fn new(genome: Genome, attention: AttentionParams, config: RunConfig, fitness: f64) -> Self {
        let mut genome = genome;
        genome.fitness = Some(fitness);
        FinalModel {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            weights: genome.extract_weight_vector(),
            genome,
            attention,
            config,
            tuned: false,
            fitness,
            stage1_fitness: fitness,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.format != MODEL_FORMAT {
            return Err(PipelineError::Format(format!("not a model file (format {:?})", self.format)));
        }
        if self.version != MODEL_VERSION {
            return Err(PipelineError::Format(format!("unsupported model version {}", self.version)));
        }
        self.genome.validate()?;
        if self.weights != self.genome.extract_weight_vector() {
            return Err(PipelineError::Format("weight vector does not match the genome".into()));
        }
        self.attention.check_shape(&self.config.attention)?;
        if self.genome.num_inputs() != self.config.attention.feature_len() {
            return Err(PipelineError::Format(format!(
                "genome has {} inputs but the attention provides {}",
                self.genome.num_inputs(),
                self.config.attention.feature_len()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let model: FinalModel = serde_json::from_str(text).map_err(|e| PipelineError::Format(format!("model: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| PipelineError::Format(format!("{}: {e}", path.display())))
    }
}

/// Learnable parameter counts of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ParameterReport {
    pub attention: usize,
    pub connections: usize,
    pub biases: usize,
    pub genome: usize,
    pub total: usize,
}

/// Counts parameters two ways (from the configuration and from the stored
/// arrays) and fails if they disagree.
pub fn parameter_report(model: &FinalModel) -> Result<ParameterReport, PipelineError> {
    let attention = model.config.attention.param_count();
    if attention != model.attention.param_count() {
        return Err(PipelineError::Format(format!(
            "attention parameters: configuration implies {attention}, model stores {}",
            model.attention.param_count()
        )));
    }
    let connections = model.genome.enabled_connection_count();
    let biases = model.genome.bias_count();
    let genome = connections + biases;
    if genome != model.weights.len() || genome != model.genome.weight_vector_len() {
        return Err(PipelineError::Format(format!(
            "genome parameters: {connections} connections + {biases} biases, weight vector has {}",
            model.weights.len()
        )));
    }
    Ok(ParameterReport { attention, connections, biases, genome, total: attention + genome })
}

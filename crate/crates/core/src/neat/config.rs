use serde::{Deserialize, Serialize};

use super::NeatError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessCriterion {
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Sigmoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Sum,
}

/// Divisor applied to the disjoint/excess count in the compatibility distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompatibilityNormalizer {
    /// Always 1.
    One,
    /// Connection-gene count of the larger genome.
    LargerGenome,
}

/// NEAT hyper-parameters, named after the usual NEAT configuration keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeatConfig {
    pub population_size: usize,
    pub fitness_criterion: FitnessCriterion,
    pub reset_on_extinction: bool,
    pub activation_function: Activation,
    pub aggregation_function: Aggregation,
    pub compatibility_disjoint_coefficient: f64,
    pub compatibility_weight_coefficient: f64,
    pub compatibility_normalizer: CompatibilityNormalizer,
    pub add_connection_probability: f64,
    pub delete_connection_probability: f64,
    pub feed_forward: bool,
    pub add_node_probability: f64,
    pub delete_node_probability: f64,
    pub weight_range: [f64; 2],
    pub weight_mutation_power: f64,
    pub weight_mutation_rate: f64,
    pub weight_replace_rate: f64,
    pub compatibility_distance_threshold: f64,
    pub max_stagnation: u32,
    pub species_elitism: usize,
    pub elitism_threshold: usize,
    pub survival_threshold: f64,
    /// Standard deviation of the zero-mean Gaussian used for fresh weights and biases.
    pub initial_weight_stdev: f64,
}

impl Default for NeatConfig {
    fn default() -> Self {
        NeatConfig {
            population_size: 64,
            fitness_criterion: FitnessCriterion::Max,
            reset_on_extinction: true,
            activation_function: Activation::Sigmoid,
            aggregation_function: Aggregation::Sum,
            compatibility_disjoint_coefficient: 1.0,
            compatibility_weight_coefficient: 0.4,
            compatibility_normalizer: CompatibilityNormalizer::One,
            add_connection_probability: 0.05,
            delete_connection_probability: 0.05,
            feed_forward: false,
            add_node_probability: 0.03,
            delete_node_probability: 0.03,
            weight_range: [-30.0, 30.0],
            weight_mutation_power: 0.05,
            weight_mutation_rate: 0.8,
            weight_replace_rate: 0.1,
            compatibility_distance_threshold: 3.0,
            max_stagnation: 15,
            species_elitism: 2,
            elitism_threshold: 5,
            survival_threshold: 0.2,
            initial_weight_stdev: 1.0,
        }
    }
}

impl NeatConfig {
    pub fn min_weight(&self) -> f64 {
        self.weight_range[0]
    }

    pub fn max_weight(&self) -> f64 {
        self.weight_range[1]
    }

    pub fn clamp_weight(&self, w: f64) -> f64 {
        w.clamp(self.weight_range[0], self.weight_range[1])
    }

    pub fn validate(&self) -> Result<(), NeatError> {
        let bad = |msg: String| Err(NeatError::InvalidConfig(msg));
        if self.population_size < 2 {
            return bad(format!("population_size must be at least 2, got {}", self.population_size));
        }
        for (name, p) in [
            ("add_connection_probability", self.add_connection_probability),
            ("delete_connection_probability", self.delete_connection_probability),
            ("add_node_probability", self.add_node_probability),
            ("delete_node_probability", self.delete_node_probability),
            ("weight_mutation_rate", self.weight_mutation_rate),
            ("weight_replace_rate", self.weight_replace_rate),
            ("survival_threshold", self.survival_threshold),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.weight_mutation_rate + self.weight_replace_rate > 1.0 {
            return bad("weight_mutation_rate + weight_replace_rate exceeds 1".into());
        }
        let [lo, hi] = self.weight_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("weight_range must be a finite [min, max] with min < max, got [{lo}, {hi}]"));
        }
        if self.feed_forward {
            return bad("feed_forward = true is not supported; networks are recurrent".into());
        }
        if !(self.weight_mutation_power >= 0.0 && self.initial_weight_stdev >= 0.0) {
            return bad("weight_mutation_power and initial_weight_stdev must be nonnegative".into());
        }
        if !(self.compatibility_distance_threshold > 0.0) {
            return bad("compatibility_distance_threshold must be positive".into());
        }
        Ok(())
    }
}

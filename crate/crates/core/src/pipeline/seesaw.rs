use super::{Checkpoint, Evaluator, FinalModel, LedgerRow, Phase, PipelineError, RunLedger, RunObserver, TimingRow};
use crate::attention::AttentionParams;
use crate::cmaes::{CmaesState, TraceRow};
use crate::config::RunConfig;
use crate::neat::{Genome, Population};
use crate::Seed;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::time::Instant;

const STAGE: u8 = 1;

/// A (network, attention) pair with the fitness it scored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub genome: Genome,
    pub attention: AttentionParams,
    pub fitness: f64,
    pub generation: u64,
    pub phase: Phase,
}

/// Stage-1 state between generations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeesawState {
    /// Completed generations.
    pub generation: u64,
    pub population: Population,
    pub attention_search: CmaesState,
    /// Attention used for the next network evaluation.
    pub attention: AttentionParams,
    /// Best network of the most recently evaluated population; frozen
    /// during the next attention search.
    pub controller: Genome,
    pub best: Option<ScoredPair>,
    pub ledger: RunLedger,
}

impl SeesawState {
    /// Random initial population and attention. Before any evaluation the
    /// controller is the first genome (all genomes tie).
    pub fn initial(config: &RunConfig, actions: usize) -> Result<Self, PipelineError> {
        let root = Seed(config.seed);
        let inputs = config.attention.feature_len();
        let population = Population::new(&config.neat, inputs, actions, &mut root.named("population").rng());
        let stdev = config.pipeline.attention_init_stdev;
        let normal = Normal::new(0.0, stdev).map_err(|e| PipelineError::Format(e.to_string()))?;
        let mut rng = root.named("attention-init").rng();
        let mean: Vec<f64> = (0..config.attention.param_count()).map(|_| normal.sample(&mut rng)).collect();
        let attention = AttentionParams::from_vector(&mean, &config.attention)?;
        let attention_search = CmaesState::new(&config.cmaes, mean)?;
        let controller = population.genomes[0].clone();
        Ok(SeesawState { generation: 0, population, attention_search, attention, controller, best: None, ledger: RunLedger::new() })
    }

    pub fn best_model(&self, config: &RunConfig) -> Option<FinalModel> {
        let b = self.best.as_ref()?;
        Some(FinalModel::new(b.genome.clone(), b.attention.clone(), config.clone(), b.fitness))
    }

    fn offer(&mut self, genome: &Genome, attention: &AttentionParams, fitness: f64, phase: Phase) -> bool {
        if self.best.as_ref().is_some_and(|b| fitness <= b.fitness) {
            return false;
        }
        let mut genome = genome.clone();
        genome.fitness = Some(fitness);
        self.best = Some(ScoredPair { genome, attention: attention.clone(), fitness, generation: self.generation, phase });
        true
    }

    fn record(&mut self, row: LedgerRow, obs: &mut dyn RunObserver) -> Result<(), PipelineError> {
        self.ledger.push(row.clone())?;
        obs.ledger_row(&row)
    }
}

/// Highest value, lowest index on ties.
fn best_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Evaluates the current population under the current attention and makes
/// its best member the controller. Returns whether the best-so-far improved.
fn evaluate_population(
    state: &mut SeesawState,
    evaluator: &Evaluator,
    phase: Phase,
    obs: &mut dyn RunObserver,
) -> Result<bool, PipelineError> {
    let g = state.generation;
    let started = Instant::now();
    let jobs: Vec<_> = state.population.genomes.iter().map(|genome| (genome, &state.attention)).collect();
    let fitness = evaluator.fitness_batch(&jobs, STAGE, g)?;
    for (genome, f) in state.population.genomes.iter_mut().zip(&fitness) {
        genome.fitness = Some(*f);
    }
    let bi = best_index(&fitness);
    state.controller = state.population.genomes[bi].clone();
    let (controller, attention) = (state.controller.clone(), state.attention.clone());
    let improved = state.offer(&controller, &attention, fitness[bi], phase);
    state.record(LedgerRow::from_fitness(STAGE, g, phase, &fitness, evaluator.protocol().trials), obs)?;
    obs.timing(&TimingRow { stage: STAGE, generation: g, phase, seconds: started.elapsed().as_secs_f64() })?;
    Ok(improved)
}

/// One generation: attention search with the controller frozen, then the
/// population evaluated with the best attention candidate and reproduced.
/// Returns whether the best-so-far improved.
pub fn seesaw_generation(
    state: &mut SeesawState,
    config: &RunConfig,
    evaluator: &Evaluator,
    obs: &mut dyn RunObserver,
) -> Result<bool, PipelineError> {
    let root = Seed(config.seed);
    let g = state.generation;
    let mut improved = false;

    if state.attention_search.should_stop().is_none() {
        let started = Instant::now();
        let candidates = state.attention_search.ask(&mut root.named("attention").index(g).rng());
        let params = candidates
            .iter()
            .map(|c| AttentionParams::from_vector(c, &config.attention))
            .collect::<Result<Vec<_>, _>>()?;
        let jobs: Vec<_> = params.iter().map(|p| (&state.controller, p)).collect();
        let fitness = evaluator.fitness_batch(&jobs, STAGE, g)?;
        let summary = state.attention_search.tell(&candidates, &fitness)?;
        obs.trace(STAGE, &TraceRow::from(&summary))?;
        let bi = best_index(&fitness);
        state.attention = params[bi].clone();
        let controller = state.controller.clone();
        improved |= state.offer(&controller, &params[bi], fitness[bi], Phase::Attention);
        state.record(LedgerRow::from_fitness(STAGE, g, Phase::Attention, &fitness, evaluator.protocol().trials), obs)?;
        obs.timing(&TimingRow { stage: STAGE, generation: g, phase: Phase::Attention, seconds: started.elapsed().as_secs_f64() })?;
    }

    improved |= evaluate_population(state, evaluator, Phase::Neat, obs)?;
    state.population.evolve(&config.neat, &mut root.named("neat").index(g).rng())?;
    state.generation += 1;
    Ok(improved)
}

/// Runs stage 1 to `config.pipeline.generations` (from `resume` if given) and
/// returns the final state with the best pair seen as a model. With zero
/// generations the initial population is evaluated once and its best returned.
pub fn train_stage1(
    config: &RunConfig,
    evaluator: &Evaluator,
    resume: Option<SeesawState>,
    obs: &mut dyn RunObserver,
) -> Result<(SeesawState, FinalModel), PipelineError> {
    let spec = evaluator.factory().spec();
    config.attention.validate_for_frame(spec.height, spec.width)?;
    let mut state = match resume {
        Some(s) => s,
        None => SeesawState::initial(config, spec.actions)?,
    };
    if config.pipeline.generations == 0 && state.best.is_none() {
        evaluate_population(&mut state, evaluator, Phase::Init, obs)?;
    }
    let every = config.pipeline.checkpoint_every;
    let mut pending_improvement = false;
    while state.generation < config.pipeline.generations {
        pending_improvement |= seesaw_generation(&mut state, config, evaluator, obs)?;
        if every > 0 && state.generation % every == 0 {
            let cp = Checkpoint::Stage1 { config: config.clone(), state: Box::new(state.clone()) };
            obs.checkpoint(&cp, pending_improvement)?;
            pending_improvement = false;
        }
    }
    let model = state.best_model(config).ok_or_else(|| PipelineError::Format("stage 1 evaluated nothing".into()))?;
    Ok((state, model))
}

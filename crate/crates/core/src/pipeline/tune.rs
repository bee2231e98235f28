use super::{Checkpoint, Evaluator, FinalModel, LedgerRow, Phase, PipelineError, RunLedger, RunObserver, TimingRow};
use crate::cmaes::{CmaesConfig, CmaesState, TraceRow};
use crate::config::RunConfig;
use crate::Seed;
use serde::{Deserialize, Serialize};
use std::time::Instant;

const STAGE: u8 = 2;

/// Stage-2 state between generations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TuneState {
    /// Completed tuning generations.
    pub generation: u64,
    /// The stage-1 model being tuned.
    pub candidate: FinalModel,
    pub search: CmaesState,
    /// Fitness of the untouched stage-1 weights under the stage-2 protocol.
    pub initial_fitness: f64,
    pub ledger: RunLedger,
}

impl TuneState {
    /// Evaluates the starting weights and seeds the search with them, so
    /// the result can never score below the start.
    pub fn start(
        config: &RunConfig,
        evaluator: &Evaluator,
        candidate: &FinalModel,
        ledger: RunLedger,
        obs: &mut dyn RunObserver,
    ) -> Result<Self, PipelineError> {
        let started = Instant::now();
        let weights = candidate.genome.extract_weight_vector();
        let f0 = evaluator.fitness(&candidate.genome, &candidate.attention, STAGE, 0)?;
        let cfg = CmaesConfig {
            population_size: config.cmaes.population_size,
            init_sigma: config.pipeline.tune_sigma,
            max_evaluations: None,
            target_fitness: None,
        };
        let mut search = CmaesState::new(&cfg, weights.clone())?;
        search.record_candidate(&weights, f0);
        let mut state = TuneState { generation: 0, candidate: candidate.clone(), search, initial_fitness: f0, ledger };
        let row = LedgerRow::from_fitness(STAGE, 0, Phase::Init, &[f0], evaluator.protocol().trials);
        state.ledger.push(row.clone())?;
        obs.ledger_row(&row)?;
        obs.timing(&TimingRow { stage: STAGE, generation: 0, phase: Phase::Init, seconds: started.elapsed().as_secs_f64() })?;
        Ok(state)
    }

    /// The best weights found so far applied to the candidate.
    pub fn best_model(&self, config: &RunConfig) -> Result<FinalModel, PipelineError> {
        let (fitness, weights) = self.search.best().ok_or_else(|| PipelineError::Format("tuning has no best".into()))?;
        let genome = self.candidate.genome.apply_weight_vector(weights, &config.neat)?;
        let mut model = FinalModel::new(genome, self.candidate.attention.clone(), config.clone(), fitness);
        model.tuned = true;
        model.stage1_fitness = self.candidate.fitness;
        Ok(model)
    }
}

/// One CMA-ES generation over the weight vector. Returns whether the best improved.
fn tune_generation(
    state: &mut TuneState,
    config: &RunConfig,
    evaluator: &Evaluator,
    obs: &mut dyn RunObserver,
) -> Result<bool, PipelineError> {
    let g = state.generation + 1;
    let started = Instant::now();
    let before = state.search.best().map(|(f, _)| f);
    let candidates = state.search.ask(&mut Seed(config.seed).named("tune").index(g).rng());
    let genomes = candidates
        .iter()
        .map(|w| state.candidate.genome.apply_weight_vector(w, &config.neat))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<_> = genomes.iter().map(|genome| (genome, &state.candidate.attention)).collect();
    let fitness = evaluator.fitness_batch(&jobs, STAGE, g)?;
    let summary = state.search.tell(&candidates, &fitness)?;
    obs.trace(STAGE, &TraceRow::from(&summary))?;
    let row = LedgerRow::from_fitness(STAGE, g, Phase::Tune, &fitness, evaluator.protocol().trials);
    state.ledger.push(row.clone())?;
    obs.ledger_row(&row)?;
    obs.timing(&TimingRow { stage: STAGE, generation: g, phase: Phase::Tune, seconds: started.elapsed().as_secs_f64() })?;
    state.generation = g;
    Ok(state.search.best().map(|(f, _)| f) != before)
}

/// Tunes the candidate's weights for `config.pipeline.tune_generations`
/// generations (fewer if the search stops). `ledger` holds the rows so far.
/// A zero budget returns the candidate unchanged.
pub fn tune_stage2(
    config: &RunConfig,
    evaluator: &Evaluator,
    candidate: &FinalModel,
    ledger: RunLedger,
    obs: &mut dyn RunObserver,
) -> Result<(FinalModel, RunLedger), PipelineError> {
    if config.pipeline.tune_generations == 0 {
        return Ok((candidate.clone(), ledger));
    }
    let state = TuneState::start(config, evaluator, candidate, ledger, obs)?;
    resume_stage2(config, evaluator, state, obs)
}

/// Continues tuning from a checkpointed state.
pub fn resume_stage2(
    config: &RunConfig,
    evaluator: &Evaluator,
    mut state: TuneState,
    obs: &mut dyn RunObserver,
) -> Result<(FinalModel, RunLedger), PipelineError> {
    let every = config.pipeline.checkpoint_every;
    let mut pending_improvement = state.generation == 0;
    while state.generation < config.pipeline.tune_generations && state.search.should_stop().is_none() {
        pending_improvement |= tune_generation(&mut state, config, evaluator, obs)?;
        if every > 0 && state.generation.is_multiple_of(every) {
            let cp = Checkpoint::Stage2 { config: config.clone(), state: Box::new(state.clone()) };
            obs.checkpoint(&cp, pending_improvement)?;
            pending_improvement = false;
        }
    }
    let model = state.best_model(config)?;
    Ok((model, state.ledger))
}

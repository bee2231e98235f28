use super::PipelineError;
use crate::attention::{extract_patches, patch_centers, score_patches, AttentionConfig, AttentionParams, ImportanceRanking, PatchGrid};
use crate::config::{ProtocolConfig, SeedSchedule};
use crate::envs::{EnvError, EnvFactory, Environment};
use crate::neat::{Genome, Network};
use crate::{Frame, Seed};
use rayon::prelude::*;
use std::sync::Arc;

/// How fitness is measured: trials per individual, their seeds, and the frame cap.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationProtocol {
    pub trials: usize,
    pub frame_limit: Option<usize>,
    pub schedule: SeedSchedule,
    pub root: Seed,
}

impl EvaluationProtocol {
    pub fn new(cfg: &ProtocolConfig, root: Seed) -> Self {
        EvaluationProtocol { trials: cfg.trials, frame_limit: cfg.frame_limit, schedule: cfg.seed_schedule, root }
    }

    /// Episode seeds for an evaluation in `stage` at `generation`. Every
    /// individual of a generation plays the same episodes; under the fixed
    /// schedule every generation and stage does too.
    pub fn seeds(&self, stage: u8, generation: u64) -> Vec<Seed> {
        let base = self.root.named("episodes");
        let base = match self.schedule {
            SeedSchedule::Fixed => base,
            SeedSchedule::PerGeneration => base.index(u64::from(stage)).index(generation),
        };
        (0..self.trials as u64).map(|t| base.index(t)).collect()
    }
}

/// Patch selection for one frame.
pub struct Percept {
    pub grid: PatchGrid,
    pub ranking: ImportanceRanking,
    /// Controller inputs: normalized centers of the selected patches.
    pub features: Vec<f64>,
}

pub fn perceive(frame: &Frame, params: &AttentionParams, cfg: &AttentionConfig) -> Result<Percept, PipelineError> {
    let grid = extract_patches(frame, cfg)?;
    let ranking = score_patches(&grid, params, cfg)?;
    let features = patch_centers(&ranking, &grid);
    Ok(Percept { grid, ranking, features })
}

/// Index of the largest output; the lowest index wins ties.
pub fn select_action(outputs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in outputs.iter().enumerate() {
        if v > outputs[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeOutcome {
    pub score: f64,
    pub frames: usize,
    /// The environment process died; `score` is the environment's floor.
    pub failed: bool,
}

fn check_io(genome: &Genome, cfg: &AttentionConfig, actions: usize) -> Result<(), PipelineError> {
    if genome.num_inputs() != cfg.feature_len() || genome.num_outputs() != actions {
        return Err(PipelineError::IoMismatch {
            inputs: genome.num_inputs(),
            outputs: genome.num_outputs(),
            expected_inputs: cfg.feature_len(),
            expected_outputs: actions,
        });
    }
    Ok(())
}

/// Plays one episode. `observe` sees every frame the agent acts on together
/// with its patch selection.
pub fn run_episode(
    genome: &Genome,
    params: &AttentionParams,
    cfg: &AttentionConfig,
    env: &mut dyn Environment,
    seed: Seed,
    frame_limit: Option<usize>,
    mut observe: Option<&mut dyn FnMut(&Frame, &Percept)>,
) -> Result<EpisodeOutcome, PipelineError> {
    let spec = env.spec().clone();
    check_io(genome, cfg, spec.actions)?;
    let limit = frame_limit.map_or(spec.max_frames, |l| l.min(spec.max_frames));
    let failed = EpisodeOutcome { score: spec.score_floor, frames: 0, failed: true };
    let network = Network::new(genome);
    let mut state = network.initial_state();
    let mut frame = match env.reset(seed) {
        Ok(f) => f,
        Err(EnvError::ChildExited) => return Ok(failed),
        Err(e) => return Err(e.into()),
    };
    let mut score = 0.0;
    let mut frames = 0;
    loop {
        let percept = perceive(&frame, params, cfg)?;
        if let Some(f) = observe.as_mut() {
            f(&frame, &percept);
        }
        let outputs = network.activate(&percept.features, &mut state)?;
        let step = match env.step(select_action(&outputs)) {
            Ok(s) => s,
            Err(EnvError::ChildExited) => return Ok(EpisodeOutcome { frames, ..failed }),
            Err(e) => return Err(e.into()),
        };
        score += step.reward;
        frames += 1;
        if step.done || frames >= limit {
            return Ok(EpisodeOutcome { score, frames, failed: false });
        }
        frame = step.frame;
    }
}

/// Mean episode score over the protocol's trials for `stage` / `generation`.
pub fn evaluate_individual(
    genome: &Genome,
    params: &AttentionParams,
    cfg: &AttentionConfig,
    factory: &dyn EnvFactory,
    protocol: &EvaluationProtocol,
    stage: u8,
    generation: u64,
) -> Result<f64, PipelineError> {
    check_io(genome, cfg, factory.spec().actions)?;
    let mut env = factory.create()?;
    let mut total = 0.0;
    let seeds = protocol.seeds(stage, generation);
    for &seed in &seeds {
        total += run_episode(genome, params, cfg, env.as_mut(), seed, protocol.frame_limit, None)?.score;
    }
    Ok(total / seeds.len() as f64)
}

/// Reads `SEESAW_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>, PipelineError> {
    match std::env::var("SEESAW_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(PipelineError::Format(format!("SEESAW_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

/// Evaluates batches of individuals in parallel on a private thread pool.
/// Results are ordered by job index.
pub struct Evaluator {
    factory: Arc<dyn EnvFactory>,
    attention: AttentionConfig,
    protocol: EvaluationProtocol,
    pool: rayon::ThreadPool,
}

impl Evaluator {
    pub fn new(
        factory: Arc<dyn EnvFactory>,
        attention: AttentionConfig,
        protocol: EvaluationProtocol,
        threads: Option<usize>,
    ) -> Result<Self, PipelineError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| PipelineError::Io(e.to_string()))?;
        Ok(Evaluator { factory, attention, protocol, pool })
    }

    pub fn factory(&self) -> &dyn EnvFactory {
        self.factory.as_ref()
    }

    pub fn protocol(&self) -> &EvaluationProtocol {
        &self.protocol
    }

    pub fn attention_config(&self) -> &AttentionConfig {
        &self.attention
    }

    pub fn fitness(&self, genome: &Genome, params: &AttentionParams, stage: u8, generation: u64) -> Result<f64, PipelineError> {
        evaluate_individual(genome, params, &self.attention, self.factory.as_ref(), &self.protocol, stage, generation)
    }

    pub fn fitness_batch(
        &self,
        jobs: &[(&Genome, &AttentionParams)],
        stage: u8,
        generation: u64,
    ) -> Result<Vec<f64>, PipelineError> {
        self.pool.install(|| {
            jobs.par_iter().map(|(g, p)| self.fitness(g, p, stage, generation)).collect()
        })
    }
}

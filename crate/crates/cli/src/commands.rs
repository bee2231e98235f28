use crate::error::CliError;
use crate::plot;
use seesaw_core::attention::draw_selection;
use seesaw_core::config::RunConfig;
use seesaw_core::envs::{EnvFactory, Environment, ExternalEnv};
use seesaw_core::pipeline::{
    parameter_report, read_ledger, resume_stage2, run_episode, threads_from_env, train_stage1, tune_stage2, Checkpoint,
    EvaluationProtocol, Evaluator, FinalModel, LedgerRow, Percept, PipelineError, RunLedger, RunObserver, RunOutput,
    TimingRow,
};
use seesaw_core::{Frame, Seed};
use std::path::{Path, PathBuf};
use std::time::Duration;

pub struct TrainArgs {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub resume: Option<PathBuf>,
    pub stage1_only: bool,
    pub trials: Option<usize>,
}

/// Forwards to the run directory and prints one progress line per ledger row.
struct Progress<'a> {
    inner: &'a mut RunOutput,
}

impl RunObserver for Progress<'_> {
    fn ledger_row(&mut self, row: &LedgerRow) -> Result<(), PipelineError> {
        eprintln!(
            "stage {} gen {:>3} {:<9} best {:>9.4} mean {:>9.4} std {:>8.4}",
            row.stage,
            row.generation,
            format!("{:?}", row.phase).to_lowercase(),
            row.best,
            row.mean,
            row.std
        );
        self.inner.ledger_row(row)
    }

    fn timing(&mut self, row: &TimingRow) -> Result<(), PipelineError> {
        self.inner.timing(row)
    }

    fn trace(&mut self, stage: u8, row: &seesaw_core::cmaes::TraceRow) -> Result<(), PipelineError> {
        self.inner.trace(stage, row)
    }

    fn checkpoint(&mut self, checkpoint: &Checkpoint, improved: bool) -> Result<(), PipelineError> {
        self.inner.checkpoint(checkpoint, improved)
    }
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let (config, resume) = match &args.resume {
        Some(path) => {
            let cp = Checkpoint::load(path)?;
            (cp.config().clone(), Some(cp))
        }
        None => {
            let mut config = match &args.config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            if let Some(s) = args.seed {
                config.seed = s;
            }
            if let Some(t) = args.trials {
                config.protocol.trials = t;
            }
            config.validate()?;
            (config, None)
        }
    };
    let threads = threads_from_env().map_err(|e| CliError::Config(e.to_string()))?;
    let out = args.out.unwrap_or_else(|| PathBuf::from(format!("runs/seed-{}", config.seed)));
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("config.toml"), config.to_toml_string())?;

    let factory = config.env.factory()?;
    let protocol = EvaluationProtocol::new(&config.protocol, Seed(config.seed));
    let evaluator = Evaluator::new(factory, config.attention.clone(), protocol, threads)?;

    let prior = match &resume {
        Some(Checkpoint::Stage1 { state, .. }) => state.ledger.clone(),
        Some(Checkpoint::Stage2 { state, .. }) => state.ledger.clone(),
        None => RunLedger::new(),
    };
    let mut output = RunOutput::create(&out, config.pipeline.checkpoint_keep, &prior)?;
    let mut progress = Progress { inner: &mut output };

    let (model, ledger) = match resume {
        Some(Checkpoint::Stage2 { state, .. }) => {
            state.candidate.save(&out.join("model-stage1.json"))?;
            resume_stage2(&config, &evaluator, *state, &mut progress)?
        }
        other => {
            let state = match other {
                Some(Checkpoint::Stage1 { state, .. }) => Some(*state),
                _ => None,
            };
            let (state, stage1) = train_stage1(&config, &evaluator, state, &mut progress)?;
            stage1.save(&out.join("model-stage1.json"))?;
            println!("stage 1 best fitness: {}", stage1.fitness);
            if args.stage1_only {
                (stage1, state.ledger)
            } else {
                tune_stage2(&config, &evaluator, &stage1, state.ledger, &mut progress)?
            }
        }
    };
    model.save(&out.join("model.json"))?;
    if model.tuned {
        println!("stage 2 best fitness: {}", model.fitness);
    }
    for path in plot::stage_charts(&ledger, &out)? {
        println!("wrote {}", path.display());
    }
    println!("wrote {}", out.join("model.json").display());
    Ok(())
}

fn check_compatible(model: &FinalModel, factory: &dyn EnvFactory) -> Result<(), CliError> {
    let spec = factory.spec();
    if model.genome.num_outputs() != spec.actions {
        return Err(CliError::Runtime(format!(
            "model/environment mismatch: network has {} outputs, {} has {} actions",
            model.genome.num_outputs(),
            spec.name,
            spec.actions
        )));
    }
    model
        .config
        .attention
        .validate_for_frame(spec.height, spec.width)
        .map_err(|e| CliError::Runtime(format!("model/environment mismatch: {e}")))
}

pub fn play(model_path: &Path, episodes: u64, seed: u64, repeat_seed: bool, dump: Option<&Path>) -> Result<(), CliError> {
    let model = FinalModel::load(model_path)?;
    let factory = model.config.env.factory()?;
    check_compatible(&model, factory.as_ref())?;
    if let Some(dir) = dump {
        std::fs::create_dir_all(dir)?;
    }
    let mut scores = Vec::with_capacity(episodes as usize);
    let mut dump_error: Option<std::io::Error> = None;
    for i in 0..episodes {
        let episode_seed = if repeat_seed { Seed(seed) } else { Seed(seed).index(i) };
        let mut env = factory.create()?;
        let mut frame_index = 0usize;
        let mut write_frame = |frame: &Frame, percept: &Percept| {
            let (image, _) = draw_selection(frame, &percept.grid, &percept.ranking);
            let path = dump.expect("dump dir").join(format!("frame-{frame_index:04}.ppm"));
            if let Err(e) = std::fs::write(path, image.to_ppm()) {
                dump_error.get_or_insert(e);
            }
            frame_index += 1;
        };
        let observe: Option<&mut dyn FnMut(&Frame, &Percept)> =
            if i == 0 && dump.is_some() { Some(&mut write_frame) } else { None };
        let outcome = run_episode(
            &model.genome,
            &model.attention,
            &model.config.attention,
            env.as_mut(),
            episode_seed,
            model.config.protocol.frame_limit,
            observe,
        )?;
        scores.push(outcome.score);
    }
    if let Some(e) = dump_error {
        return Err(e.into());
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let std = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    println!("episodes: {}", scores.len());
    println!("mean: {mean}");
    println!("std: {std}");
    println!("score: {mean:.4} ± {std:.4} over {} episodes", scores.len());
    Ok(())
}

pub fn plot(ledgers: &[PathBuf], out: Option<&Path>) -> Result<(), CliError> {
    let parsed = ledgers
        .iter()
        .map(|p| read_ledger(p).map_err(|e| CliError::Runtime(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => ledgers[0].parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    std::fs::create_dir_all(if dir.as_os_str().is_empty() { Path::new(".") } else { &dir })?;
    let written = if parsed.len() == 1 {
        plot::stage_charts(&parsed[0], &dir)?
    } else {
        let labels: Vec<String> = ledgers.iter().map(|p| plot::label_for(p)).collect();
        vec![plot::comparison_chart(&parsed, &labels, &dir.join("fitness-compare.svg"))?]
    };
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn count_params(model_path: &Path) -> Result<(), CliError> {
    let model = FinalModel::load(model_path)?;
    let r = parameter_report(&model)?;
    println!("attention parameters: {}", r.attention);
    println!("genome connections: {}", r.connections);
    println!("genome biases: {}", r.biases);
    println!("genome parameters: {}", r.genome);
    println!("total parameters: {}", r.total);
    Ok(())
}

pub fn env_check(command: Vec<String>, timeout: f64) -> Result<(), CliError> {
    if !(timeout > 0.0 && timeout.is_finite()) {
        return Err(CliError::Config(format!("--timeout must be positive, got {timeout}")));
    }
    let mut env = ExternalEnv::spawn(command, Duration::from_secs_f64(timeout))?;
    let spec = env.spec().clone();
    println!(
        "name: {}\nframe: {}x{}\nactions: {}\nmax_frames: {}\nfloor: {}",
        spec.name, spec.height, spec.width, spec.actions, spec.max_frames, spec.score_floor
    );
    env.reset(Seed(0))?;
    let mut total = 0.0;
    for step in 0..spec.max_frames {
        let r = env.step(step % spec.actions)?;
        total += r.reward;
        if r.done {
            println!("ok: episode ended after {} steps with score {total}", step + 1);
            return Ok(());
        }
    }
    Err(CliError::Protocol(format!("episode did not end within max_frames = {}", spec.max_frames)))
}

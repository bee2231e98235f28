//! End-to-end acceptance run. Takes about half an hour on one core:
//!
//! ```text
//! cargo test --release -p seesaw-cli --test acceptance -- --ignored --nocapture
//! ```
//!
//! Prints one PASS/FAIL line per criterion and fails if any criterion fails.
//! Run directories are kept under the cargo target tmpdir.

#[path = "../../core/tests/attention_oracles.rs"]
mod attention_oracles;
#[path = "../../core/tests/cmaes_properties.rs"]
mod cmaes_properties;
#[path = "../../core/tests/neat_oracles.rs"]
mod neat_oracles;

use rand::Rng;
use std::panic::{catch_unwind, UnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use seesaw_core::attention::{AttentionConfig, AttentionParams};
use seesaw_core::cmaes::{CmaesConfig, CmaesState};
use seesaw_core::config::{RunConfig, SeedSchedule};
use seesaw_core::envs::{PatchChase, TARGET};
use seesaw_core::neat::{Genome, InnovationRegistry, NeatConfig};
use seesaw_core::pipeline::*;
use seesaw_core::{Frame, Seed};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Report {
    lines: Vec<(usize, bool, String)>,
}

impl Report {
    fn record(&mut self, criterion: usize, pass: bool, detail: String, elapsed: Duration) {
        let line = format!("criterion {criterion}: {} ({:.0?}) {detail}", if pass { "PASS" } else { "FAIL" }, elapsed);
        println!("{line}");
        self.lines.push((criterion, pass, line));
    }
}

fn run_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn passes(f: impl FnOnce() + UnwindSafe) -> bool {
    catch_unwind(f).is_ok()
}

fn evaluator(cfg: &RunConfig) -> Evaluator {
    let protocol = EvaluationProtocol::new(&cfg.protocol, Seed(cfg.seed));
    Evaluator::new(cfg.env.factory().unwrap(), cfg.attention.clone(), protocol, threads_from_env().unwrap()).unwrap()
}

fn acceptance_config(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.seed = seed;
    cfg.protocol.seed_schedule = SeedSchedule::Fixed;
    cfg.pipeline.checkpoint_every = 0;
    cfg
}

fn criterion_1(report: &mut Report, trained: &[FinalModel]) {
    let t = Instant::now();
    let attention = AttentionConfig::default().param_count();
    let mut reg = InnovationRegistry::new(20, 5);
    let dense = Genome::initial(20, 5, &mut reg, &NeatConfig::default(), &mut Seed(0).rng());
    let model = FinalModel::new(dense, AttentionParams::zeros(&AttentionConfig::default()), RunConfig::default(), 0.0);
    let r = parameter_report(&model).unwrap();
    let dense_ok = attention == 2408 && r.attention == 2408 && (r.connections, r.biases, r.total) == (100, 5, 2513);

    let mut totals = Vec::new();
    let mut ok = dense_ok;
    for m in trained {
        let r = parameter_report(m).unwrap();
        ok &= r.attention == 2408 && r.total == r.attention + r.genome && (1000..10_000).contains(&r.total);
        totals.push(r.total);
    }
    // The same count through the CLI.
    let dir = run_dir("count-params");
    let path = dir.join("model.json");
    trained[0].save(&path).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_seesaw")).args(["count-params", path.to_str().unwrap()]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    ok &= text.lines().any(|l| l == "attention parameters: 2408");
    report.record(1, ok, format!("attention 2408; dense 20x5 total {}; trained totals {totals:?}", r.total), t.elapsed());
}

fn minimize(f: fn(&[f64]) -> f64, start: Vec<f64>, sigma: f64, lambda: usize, budget: u64, tol: f64, seed: u64) -> f64 {
    let cfg = CmaesConfig { population_size: lambda, init_sigma: sigma, max_evaluations: Some(budget), target_fitness: Some(-tol) };
    let mut s = CmaesState::new(&cfg, start).unwrap();
    let mut rng = Seed(seed).named("benchmark").rng();
    while s.should_stop().is_none() {
        let xs = s.ask(&mut rng);
        let fit: Vec<f64> = xs.iter().map(|x| -f(x)).collect();
        s.tell(&xs, &fit).unwrap();
    }
    -s.best().unwrap().0
}

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
}

fn criterion_2(report: &mut Report) {
    let t = Instant::now();
    let neat = [
        passes(neat_oracles::compatibility_distance_matches_set_alignment),
        passes(neat_oracles::crossover_inherits_structure_from_the_fitter_parent),
        passes(neat_oracles::innovation_numbers_are_unique_and_reused),
        passes(neat_oracles::weights_stay_in_range_under_fuzzing),
    ];
    let neat_time = t.elapsed();
    let t2 = Instant::now();
    let attention = [
        passes(attention_oracles::attention_rows_are_softmax_distributions),
        passes(attention_oracles::importance_totals_n_and_matches_naive_evaluation),
        passes(attention_oracles::top_k_agrees_with_full_sort),
        passes(attention_oracles::patch_count_matches_window_enumeration),
    ];
    let attention_time = t2.elapsed();
    let t3 = Instant::now();
    // Sphere: under 1e-10 within 20k evaluations; Rosenbrock: under 1e-6 within 100k.
    let spheres = (0..10).filter(|&s| minimize(sphere, vec![1.0; 10], 0.3, 10, 20_000, 1e-10, s) < 1e-10).count();
    let rosen = (0..10).filter(|&s| minimize(rosenbrock, vec![0.0; 5], 0.5, 8, 100_000, 1e-6, s) < 1e-6).count();
    let mut draws = Seed(0).named("monotone").rng();
    let invariance = (0..200).all(|_| {
        let (seed, scale, offset) = (draws.random_range(0..10_000), draws.random_range(0.01..100.0), draws.random_range(-50.0..50.0));
        cmaes_properties::monotone_transform_preserves_state(seed, scale, offset)
    });
    let cmaes_time = t3.elapsed();

    let ok = neat.iter().all(|&p| p)
        && attention.iter().all(|&p| p)
        && spheres >= 9
        && rosen >= 9
        && invariance
        && neat_time < Duration::from_secs(60)
        && attention_time < Duration::from_secs(60)
        && cmaes_time < Duration::from_secs(300);
    report.record(
        2,
        ok,
        format!(
            "NEAT oracles {}/4 in {neat_time:.1?}; attention oracles {}/4 in {attention_time:.1?}; sphere {spheres}/10, rosenbrock {rosen}/10, monotone invariance {} in {cmaes_time:.1?}",
            neat.iter().filter(|&&p| p).count(),
            attention.iter().filter(|&&p| p).count(),
            if invariance { "exact" } else { "broken" }
        ),
        t.elapsed(),
    );
}

fn std_dev(xs: &[f64]) -> f64 {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn criterion_3(report: &mut Report) {
    let t = Instant::now();
    // An untrained member of a generation-0 population: better than idling, far from optimal.
    let cfg = RunConfig::default();
    let state = SeesawState::initial(&cfg, 5).unwrap();
    let genome = &state.population.genomes[0];
    let score = |seed: Seed| {
        let mut env = PatchChase::new(cfg.env.patch_chase.clone()).unwrap();
        run_episode(genome, &state.attention, &cfg.attention, &mut env, seed, None, None).unwrap().score
    };
    let root = Seed(cfg.seed).named("variance");
    let (mut one, mut three) = (Vec::new(), Vec::new());
    for r in 0..100 {
        let scores: Vec<f64> = (0..3).map(|trial| score(root.index(r).index(trial))).collect();
        one.push(scores[0]);
        three.push(scores.iter().sum::<f64>() / 3.0);
    }
    let (s1, s3) = (std_dev(&one), std_dev(&three));
    let mean = one.iter().sum::<f64>() / 100.0;
    let reduction = 1.0 - s3 / s1;
    let ok = s1 > 0.0 && s3 < s1 && reduction >= 0.25;
    report.record(
        3,
        ok,
        format!("policy mean {mean:.3}; std 1-trial {s1:.4}, 3-trial {s3:.4}; reduction {:.1}% (1/sqrt(3) law: 42.3%)", 100.0 * reduction),
        t.elapsed(),
    );
}

struct SeedRun {
    seed: u64,
    stage1: FinalModel,
    tuned: Option<FinalModel>,
}

fn criterion_4(report: &mut Report) -> Vec<SeedRun> {
    let t = Instant::now();
    let mut runs = Vec::new();
    let mut details = Vec::new();
    let (mut improved, mut monotone) = (0, true);
    for seed in SEEDS {
        let cfg = acceptance_config(seed);
        let ev = evaluator(&cfg);
        let dir = run_dir(&format!("seed-{seed}"));
        let mut out = RunOutput::create(&dir, 1, &RunLedger::new()).unwrap();
        let started = Instant::now();
        let (state, model) = train_stage1(&cfg, &ev, None, &mut out).unwrap();
        model.save(&dir.join("model-stage1.json")).unwrap();
        let rows = state.ledger.rows();
        let g0 = rows.iter().filter(|r| r.generation == 0).map(|r| r.best).fold(f64::NEG_INFINITY, f64::max);
        let curve = state.ledger.best_so_far(1);
        let ledger_max = rows.iter().map(|r| r.best).fold(f64::NEG_INFINITY, f64::max);
        // The recorded best must be a real, reproducible score of the returned pair.
        let rescored = ev.fitness(&model.genome, &model.attention, 1, cfg.pipeline.generations).unwrap();
        let consistent = curve.windows(2).all(|w| w[1] >= w[0]) && model.fitness == ledger_max && rescored == model.fitness;
        monotone &= consistent;
        if model.fitness > g0 {
            improved += 1;
        }
        let line = format!("seed {seed}: gen-0 {g0:.3} -> {:.3} ({:.0?})", model.fitness, started.elapsed());
        println!("  {line}");
        details.push(line);
        runs.push(SeedRun { seed, stage1: model, tuned: None });
    }
    report.record(4, improved >= 4 && monotone, format!("improved on {improved}/5; best-so-far consistent: {monotone}; {}", details.join("; ")), t.elapsed());
    runs
}

fn criterion_5(report: &mut Report, runs: &mut [SeedRun]) {
    let t = Instant::now();
    let (mut never_worse, mut strictly) = (true, 0);
    let mut details = Vec::new();
    for run in runs.iter_mut() {
        let mut cfg = acceptance_config(run.seed);
        cfg.pipeline.tune_generations = 100;
        let ev = evaluator(&cfg);
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(format!("seed-{}", run.seed));
        let prior = read_ledger(&dir.join("ledger.csv")).unwrap();
        let mut out = RunOutput::create(&dir, 1, &prior).unwrap();
        let (tuned, ledger) = tune_stage2(&cfg, &ev, &run.stage1, prior, &mut out).unwrap();
        tuned.save(&dir.join("model.json")).unwrap();
        ledger.write_csv(&dir.join("ledger.csv")).unwrap();
        never_worse &= tuned.fitness >= run.stage1.fitness;
        if tuned.fitness > run.stage1.fitness {
            strictly += 1;
        }
        let line = format!("seed {}: {:.4} -> {:.4}", run.seed, run.stage1.fitness, tuned.fitness);
        println!("  {line}");
        details.push(line);
        run.tuned = Some(tuned);
    }
    report.record(
        5,
        never_worse && strictly >= 3,
        format!("never worse: {never_worse}; strictly better on {strictly}/5; {}", details.join("; ")),
        t.elapsed(),
    );
}

/// Fraction of frames in which some selected window contains a target pixel.
fn target_coverage(model: &FinalModel, episodes: u64) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for e in 0..episodes {
        let mut env = PatchChase::new(model.config.env.patch_chase.clone()).unwrap();
        let mut observe = |frame: &Frame, p: &Percept| {
            let size = p.grid.patch_size();
            total += 1;
            let seen = p.ranking.top_k.iter().any(|&i| {
                let (y0, x0) = p.grid.origin(i);
                (y0..y0 + size).any(|y| (x0..x0 + size).any(|x| frame.pixel(y, x) == TARGET))
            });
            hit += usize::from(seen);
        };
        run_episode(&model.genome, &model.attention, &model.config.attention, &mut env, Seed(7000).index(e), None, Some(&mut observe))
            .unwrap();
    }
    hit as f64 / total as f64
}

fn criterion_6(report: &mut Report, runs: &[SeedRun]) {
    let t = Instant::now();
    let models: Vec<&FinalModel> = runs.iter().map(|r| r.tuned.as_ref().unwrap_or(&r.stage1)).collect();
    let best = (0..models.len()).fold(0, |b, i| if models[i].fitness > models[b].fitness { i } else { b });
    let coverage: Vec<f64> = models.iter().map(|m| target_coverage(m, 20)).collect();
    report.record(
        6,
        coverage[best] >= 0.8,
        format!(
            "best model (seed {}) sees the target in {:.1}% of frames; all seeds {:?}",
            runs[best].seed,
            100.0 * coverage[best],
            coverage.iter().map(|c| format!("{:.1}%", 100.0 * c)).collect::<Vec<_>>()
        ),
        t.elapsed(),
    );
}

fn criterion_7(report: &mut Report) {
    let t = Instant::now();
    let dir = run_dir("reproducibility");
    let config = dir.join("config.toml");
    std::fs::write(&config, "seed = 11\n[pipeline]\ngenerations = 5\ntune_generations = 5\n[protocol]\nseed_schedule = \"fixed\"\n").unwrap();
    let train = |name: &str| {
        let out = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_seesaw"))
            .args(["train", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .stderr(std::process::Stdio::null())
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
        out
    };
    let (a, b) = (train("a"), train("b"));
    let identical: Vec<(&str, bool)> = ["ledger.csv", "model-stage1.json", "model.json"]
        .into_iter()
        .map(|f| (f, std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap()))
        .collect();
    report.record(7, identical.iter().all(|(_, same)| *same), format!("byte-identical: {identical:?}"), t.elapsed());
}

#[test]
#[ignore = "runs for about half an hour; see the module docs"]
fn acceptance() {
    let mut report = Report { lines: Vec::new() };
    criterion_2(&mut report);
    criterion_3(&mut report);
    let mut runs = criterion_4(&mut report);
    criterion_5(&mut report, &mut runs);
    let trained: Vec<FinalModel> = runs.iter().map(|r| r.tuned.clone().unwrap_or_else(|| r.stage1.clone())).collect();
    criterion_1(&mut report, &trained);
    criterion_6(&mut report, &runs);
    criterion_7(&mut report);

    report.lines.sort_by_key(|(c, _, _)| *c);
    println!("\nsummary:");
    for (_, _, line) in &report.lines {
        println!("{line}");
    }
    let summary: String = report.lines.iter().map(|(_, _, l)| format!("{l}\n")).collect();
    std::fs::write(Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join("summary.txt"), summary).unwrap();
    let failed: Vec<usize> = report.lines.iter().filter(|(_, p, _)| !p).map(|(c, _, _)| *c).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

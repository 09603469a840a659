//! Seeded end-to-end runs and their CSV output.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::ThreadPool;
use serde::Serialize;

use evoptim_core::evolution::{self, init_model, EvolutionConfig, streams, train_model, GenerationRecord, UnitModel};
use evoptim_core::optim::Stepper;
use evoptim_core::params::{ParamVector, RngStream};
use evoptim_core::problem::{BenchmarkProblem, Problem, SupervisedProblem};

use crate::config::{Algorithm, ExperimentConfig};
use crate::setup::{prepare, Prepared};

/// One evaluation point of one run. `step` counts optimizer steps taken by a
/// single model; for GADAM that is `generation * steps_per_generation`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub run_id: String,
    pub seed: u64,
    pub algorithm: &'static str,
    pub step: usize,
    pub generation: Option<usize>,
    pub train_loss: f64,
    pub val_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: Option<f64>,
    pub adoption: Option<usize>,
    pub wall_ms: u128,
}

/// Timing-free columns, for reproducibility checks.
pub const TIMING_COLUMNS: &[&str] = &["wall_ms", "duration_ms"];

#[derive(Debug, Clone, PartialEq, Serialize)]
struct GenerationRow {
    run_id: String,
    seed: u64,
    generation: usize,
    entry_loss_sum: f64,
    trained_loss_sum: f64,
    selection_loss_sum: f64,
    best_selection_loss: f64,
    adoption_count: usize,
    adoption_rate: f64,
    survivor_ids: String,
    duration_ms: u128,
}

impl GenerationRow {
    fn new(run_id: &str, seed: u64, r: &GenerationRecord) -> Self {
        Self {
            run_id: run_id.to_string(),
            seed,
            generation: r.index,
            entry_loss_sum: r.entry_sum(),
            trained_loss_sum: r.losses_after.iter().sum(),
            selection_loss_sum: r.selection_sum(),
            best_selection_loss: r.selection_losses[0],
            adoption_count: r.adoption_count,
            adoption_rate: r.adoption_rate(),
            survivor_ids: r.survivor_ids.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
            duration_ms: r.duration.as_millis(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_id: String,
    pub seed: u64,
    pub best: ParamVector,
    pub val_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: Option<f64>,
    pub metrics: Vec<MetricsRow>,
    pub generations: Vec<GenerationRecord>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub label: String,
    pub runs: Vec<RunOutcome>,
    pub metrics_path: PathBuf,
    pub generations_path: Option<PathBuf>,
}

pub fn run_id(config: &ExperimentConfig, seed: u64) -> String {
    format!("{}-s{seed}", config.label())
}

/// Runs every seed of the config and writes `metrics.csv`, `generations.csv`
/// (GADAM only) and one `best-<run_id>.ckpt` per seed into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let prepared = prepare(&config.objective)?;
    let pool = evolution::thread_pool(config.resolved_threads())?;
    fs::create_dir_all(&config.out_dir).with_context(|| format!("cannot create {}", config.out_dir.display()))?;

    let metrics_path = config.out_dir.join("metrics.csv");
    let mut metrics = csv::Writer::from_path(&metrics_path)?;
    let generations_path = (config.algorithm == Algorithm::Gadam).then(|| config.out_dir.join("generations.csv"));
    let mut generations = generations_path.as_ref().map(csv::Writer::from_path).transpose()?;

    let mut runs = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let id = run_id(config, seed);
        let outcome = run_seed(config, &prepared, seed, &pool, &mut |row| {
            metrics.serialize(row)?;
            metrics.flush()?;
            Ok(())
        })
        .with_context(|| format!("run {id} failed"))?;
        if let Some(w) = generations.as_mut() {
            for r in &outcome.generations {
                w.serialize(GenerationRow::new(&id, seed, r))?;
            }
            w.flush()?;
        }
        outcome.best.save(checkpoint_path(&config.out_dir, &id))?;
        runs.push(outcome);
    }
    Ok(ExperimentReport {
        label: config.label(),
        runs,
        metrics_path,
        generations_path,
    })
}

/// Evolution settings for one seed, with the validation batch capped at the
/// validation set size.
pub fn evolution_settings(config: &ExperimentConfig, prepared: &Prepared, seed: u64) -> Result<EvolutionConfig> {
    let mut ecfg = config.evolution_config(seed)?;
    if let Some(rows) = prepared.validation_rows() {
        ecfg.validation_size = ecfg.validation_size.min(rows);
    }
    Ok(ecfg)
}

pub fn checkpoint_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join(format!("best-{run_id}.ckpt"))
}

/// One seeded run; `emit` receives each metrics row as soon as it exists.
pub fn run_seed(
    config: &ExperimentConfig,
    prepared: &Prepared,
    seed: u64,
    pool: &ThreadPool,
    emit: &mut dyn FnMut(&MetricsRow) -> Result<()>,
) -> Result<RunOutcome> {
    match prepared {
        Prepared::Supervised(s) => {
            let problem = match &s.validation {
                Some(v) => SupervisedProblem::with_validation(&s.mlp, &s.train, v),
                None => SupervisedProblem::new(&s.mlp, &s.train),
            };
            run_on(config, &problem, prepared, seed, pool, emit)
        }
        Prepared::Benchmark(f) => run_on(config, &BenchmarkProblem::new(*f), prepared, seed, pool, emit),
    }
}

struct Recorder<'a> {
    config: &'a ExperimentConfig,
    prepared: &'a Prepared,
    run_id: String,
    seed: u64,
    started: Instant,
    rows: Vec<MetricsRow>,
}

impl Recorder<'_> {
    fn record(
        &mut self,
        w: &[f64],
        step: usize,
        generation: Option<usize>,
        train_loss: f64,
        adoption: Option<usize>,
        emit: &mut dyn FnMut(&MetricsRow) -> Result<()>,
    ) -> Result<()> {
        let (test_loss, test_accuracy) = self.prepared.test_metrics(w)?;
        let row = MetricsRow {
            run_id: self.run_id.clone(),
            seed: self.seed,
            algorithm: self.config.algorithm.name(),
            step,
            generation,
            train_loss,
            val_loss: self.prepared.validation_loss(w)?,
            test_loss,
            test_accuracy,
            adoption,
            wall_ms: self.started.elapsed().as_millis(),
        };
        emit(&row)?;
        self.rows.push(row);
        Ok(())
    }

    fn finish(self, best: ParamVector, generations: Vec<GenerationRecord>) -> Result<RunOutcome> {
        let (test_loss, test_accuracy) = self.prepared.test_metrics(&best)?;
        Ok(RunOutcome {
            val_loss: self.prepared.validation_loss(&best)?,
            run_id: self.run_id,
            seed: self.seed,
            best,
            test_loss,
            test_accuracy,
            metrics: self.rows,
            generations,
        })
    }
}

fn run_on<P: Problem>(
    config: &ExperimentConfig,
    problem: &P,
    prepared: &Prepared,
    seed: u64,
    pool: &ThreadPool,
    emit: &mut dyn FnMut(&MetricsRow) -> Result<()>,
) -> Result<RunOutcome> {
    let mut rec = Recorder {
        config,
        prepared,
        run_id: run_id(config, seed),
        seed,
        started: Instant::now(),
        rows: Vec::new(),
    };
    match config.algorithm {
        Algorithm::Gadam => {
            let ecfg = evolution_settings(config, prepared, seed)?;
            let mut failure = None;
            let result = evolution::run_with(&ecfg, problem, pool, |record, generation| {
                if failure.is_some() {
                    return;
                }
                let train = record.train_losses.iter().sum::<f64>() / record.train_losses.len() as f64;
                let step = record.index * ecfg.steps_per_generation;
                if let Err(e) = rec.record(
                    &generation.models[0].params,
                    step,
                    Some(record.index),
                    train,
                    Some(record.adoption_count),
                    emit,
                ) {
                    failure = Some(e);
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            rec.finish(result.best.params, result.history)
        }
        Algorithm::MultiStartAdam => {
            let ecfg = config.evolution_config(seed)?;
            let mut models = (0..config.evolution.population as u64)
                .map(|i| init_model(i, problem, &ecfg))
                .collect::<evoptim_core::Result<Vec<UnitModel>>>()?;
            let mut rngs: Vec<RngStream> = (0..models.len() as u64)
                .map(|i| RngStream::derive(seed, &[streams::SOLO, i]))
                .collect();
            let mut done = 0;
            let mut best = 0;
            while done < config.steps {
                let chunk = config.eval_every.min(config.steps - done);
                let results: Vec<evoptim_core::Result<Option<f64>>> = pool.install(|| {
                    use rayon::prelude::*;
                    models
                        .par_iter_mut()
                        .zip(rngs.par_iter_mut())
                        .map(|(m, rng)| train_model(m, problem, chunk, config.batch_size, rng))
                        .collect()
                });
                let train: Vec<f64> = results
                    .into_iter()
                    .collect::<evoptim_core::Result<Vec<_>>>()?
                    .into_iter()
                    .map(|l| l.unwrap_or(f64::NAN))
                    .collect();
                done += chunk;
                let val: Vec<f64> = models
                    .iter()
                    .map(|m| prepared.validation_loss(&m.params))
                    .collect::<Result<_>>()?;
                best = (0..val.len()).min_by(|&a, &b| val[a].total_cmp(&val[b])).unwrap_or(0);
                rec.record(&models[best].params, done, None, train[best], None, emit)?;
            }
            rec.finish(models.swap_remove(best).params, Vec::new())
        }
        _ => {
            let mut init_rng = RngStream::derive(seed, &[streams::INIT, 0]);
            let mut w = problem.init_params(config.objective.init_kind()?, &mut init_rng)?;
            let mut rng = RngStream::derive(seed, &[streams::SOLO, 0]);
            let mut stepper = Stepper::new(config.algorithm.optimizer(), config.hyperparams(), w.len())?;
            for step in 1..=config.steps {
                let batch = problem.sample_batch(config.batch_size, &mut rng)?;
                let (loss, grad) = problem.loss_and_grad(&w, &batch)?;
                stepper.update(w.as_mut_slice(), &grad)?;
                problem.project(w.as_mut_slice());
                if step % config.eval_every == 0 || step == config.steps {
                    rec.record(&w, step, None, loss, None, emit)?;
                }
            }
            rec.finish(w, Vec::new())
        }
    }
}

/// Reads a CSV file and drops the named columns, for byte-level comparisons
/// that must ignore timing.
pub fn strip_columns(path: impl AsRef<Path>, drop: &[&str]) -> Result<String> {
    let mut reader = csv::Reader::from_reader(File::open(path.as_ref())?);
    let headers = reader.headers()?.clone();
    let keep: Vec<usize> = (0..headers.len()).filter(|&i| !drop.contains(&&headers[i])).collect();
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(keep.iter().map(|&i| &headers[i]))?;
    for record in reader.records() {
        let record = record?;
        out.write_record(keep.iter().map(|&i| &record[i]))?;
    }
    Ok(String::from_utf8(out.into_inner().map_err(|e| e.into_error())?)?)
}

use std::time::Instant;

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use super::fitness::FitnessReport;
use super::operators::{crossover, crossover_threshold, mutate, mutation_rate, select_pairs};
use super::{streams, EvolutionConfig, Generation, GenerationRecord, Lineage, UnitModel};
use crate::error::{Error, Result};
use crate::optim::AdamState;
use crate::params::RngStream;
use crate::problem::Problem;

/// Worker pool of the given width; `0` lets rayon pick one thread per core.
pub fn thread_pool(threads: usize) -> Result<ThreadPool> {
    ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))
}

/// Runs `f` on every model in the pool and returns the results in model order.
/// The first failing model (by position, not by completion time) wins.
fn par_map<T, F>(pool: &ThreadPool, models: &mut [UnitModel], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut UnitModel) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = pool.install(|| {
        models
            .par_iter_mut()
            .map(|m| {
                let id = m.id;
                f(m).map_err(|e| Error::Training {
                    model_id: id,
                    source: Box::new(e),
                })
            })
            .collect()
    });
    results.into_iter().collect()
}

pub fn init_model<P: Problem>(id: u64, problem: &P, config: &EvolutionConfig) -> Result<UnitModel> {
    let mut rng = RngStream::derive(config.seed, &[streams::INIT, id]);
    let params = problem.init_params(config.init, &mut rng)?;
    let optimizer = AdamState::new(params.len(), config.adam);
    Ok(UnitModel {
        id,
        params,
        optimizer,
        lineage: Lineage::Initial,
    })
}

pub fn init_population<P: Problem>(config: &EvolutionConfig, problem: &P, pool: &ThreadPool) -> Result<Generation> {
    config.validate()?;
    let ids: Vec<u64> = (0..config.population as u64).collect();
    let models: Vec<Result<UnitModel>> =
        pool.install(|| ids.par_iter().map(|&id| init_model(id, problem, config)).collect());
    Ok(Generation {
        index: 0,
        models: models.into_iter().collect::<Result<_>>()?,
    })
}

/// Advances one model by `steps` Adam updates, each on a freshly sampled
/// batch. Returns the mean loss of the last batch, or `None` when `steps` is 0.
pub fn train_model<P: Problem>(
    model: &mut UnitModel,
    problem: &P,
    steps: usize,
    batch_size: usize,
    rng: &mut RngStream,
) -> Result<Option<f64>> {
    let mut last = None;
    for _ in 0..steps {
        let batch = problem.sample_batch(batch_size, rng)?;
        let (loss, grad) = problem.loss_and_grad(&model.params, &batch)?;
        model.optimizer.update(model.params.as_mut_slice(), &grad)?;
        problem.project(model.params.as_mut_slice());
        last = Some(loss);
    }
    Ok(last)
}

/// Trains every model of the generation in parallel. Model `id` in round `k`
/// draws its batches from its own stream, so results do not depend on the
/// pool width.
pub fn train_generation<P: Problem>(
    models: &mut [UnitModel],
    problem: &P,
    config: &EvolutionConfig,
    round: usize,
    pool: &ThreadPool,
) -> Result<Vec<Option<f64>>> {
    par_map(pool, models, |m| {
        let mut rng = RngStream::derive(config.seed, &[streams::TRAIN, round as u64, m.id]);
        train_model(m, problem, config.steps_per_generation, config.batch_size, &mut rng)
    })
}

/// Summed loss of each model on one shared batch.
pub fn evaluate_losses<P: Problem>(
    models: &[UnitModel],
    problem: &P,
    batch: &P::Batch,
    pool: &ThreadPool,
) -> Result<Vec<f64>> {
    let results: Vec<Result<f64>> = pool.install(|| {
        models
            .par_iter()
            .map(|m| {
                problem.summed_loss(&m.params, batch).map_err(|e| Error::Training {
                    model_id: m.id,
                    source: Box::new(e),
                })
            })
            .collect()
    });
    results.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Survivors {
    /// Ascending by loss.
    pub models: Vec<UnitModel>,
    pub losses: Vec<f64>,
    pub adoption_count: usize,
}

/// Keeps the `parents.len()` lowest-loss models of parents and children on a
/// shared batch. Ties go to parents, then to the lower id.
pub fn select_survivors<P: Problem>(
    parents: Vec<UnitModel>,
    children: Vec<UnitModel>,
    problem: &P,
    batch: &P::Batch,
    pool: &ThreadPool,
) -> Result<Survivors> {
    let keep = parents.len();
    let parent_count = parents.len();
    let mut pool_models = parents;
    pool_models.extend(children);
    let losses = evaluate_losses(&pool_models, problem, batch, pool)?;

    let mut order: Vec<usize> = (0..pool_models.len()).collect();
    order.sort_by(|&a, &b| {
        losses[a]
            .total_cmp(&losses[b])
            .then((a >= parent_count).cmp(&(b >= parent_count)))
            .then(pool_models[a].id.cmp(&pool_models[b].id))
    });
    order.truncate(keep);

    let mut slots: Vec<Option<UnitModel>> = pool_models.into_iter().map(Some).collect();
    let mut models = Vec::with_capacity(keep);
    let mut kept_losses = Vec::with_capacity(keep);
    let mut adoption_count = 0;
    for i in order {
        let mut m = slots[i].take().expect("index selected once");
        if i < parent_count {
            m.lineage = Lineage::Survivor;
        } else {
            adoption_count += 1;
        }
        kept_losses.push(losses[i]);
        models.push(m);
    }
    Ok(Survivors {
        models,
        losses: kept_losses,
        adoption_count,
    })
}

/// Stop once the round limit is hit or the summed selection loss moved by at
/// most the threshold. Without a previous record the current round's entry
/// losses serve as the reference.
pub fn should_stop(prev: Option<&GenerationRecord>, curr: &GenerationRecord, config: &EvolutionConfig) -> bool {
    if curr.index >= config.max_generations {
        return true;
    }
    let reference = prev.map_or_else(|| curr.entry_sum(), |p| p.selection_sum());
    (reference - curr.selection_sum()).abs() <= config.stop_threshold
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub best: UnitModel,
    /// Summed loss of `best` on the last selection batch.
    pub best_loss: f64,
    pub history: Vec<GenerationRecord>,
    pub final_generation: Generation,
}

pub fn run<P: Problem>(config: &EvolutionConfig, problem: &P, pool: &ThreadPool) -> Result<RunResult> {
    run_with(config, problem, pool, |_, _| {})
}

/// Full evolution loop; `on_generation` sees each record together with the
/// generation it produced.
pub fn run_with<P, F>(config: &EvolutionConfig, problem: &P, pool: &ThreadPool, mut on_generation: F) -> Result<RunResult>
where
    P: Problem,
    F: FnMut(&GenerationRecord, &Generation),
{
    let mut generation = init_population(config, problem, pool)?;
    let mut next_id = config.population as u64;
    let mut history: Vec<GenerationRecord> = Vec::new();

    loop {
        let round = generation.index + 1;
        let started = Instant::now();
        let k = round as u64;

        let mut fitness_rng = RngStream::derive(config.seed, &[streams::FITNESS, k]);
        let fitness_batch = problem.sample_validation_batch(config.validation_size, &mut fitness_rng)?;
        let mut parents = generation.models;
        let losses_before = evaluate_losses(&parents, problem, &fitness_batch, pool)?;

        let train_losses = train_generation(&mut parents, problem, config, round, pool)?;
        let report = FitnessReport::from_losses(evaluate_losses(&parents, problem, &fitness_batch, pool)?);

        let mut genetic_rng = RngStream::derive(config.seed, &[streams::GENETIC, k]);
        let pairs = select_pairs(&report, config.population, &mut genetic_rng);
        let mut children = Vec::with_capacity(pairs.len());
        for (i, j) in pairs {
            let threshold = crossover_threshold(report.normalized[i], report.normalized[j]);
            let child = crossover(&parents[i].params, &parents[j].params, threshold, &mut genetic_rng)?;
            let rate = mutation_rate(config.mutation_rate, report.probs[i], report.probs[j]);
            let (params, _) = mutate(child, rate, config.replacement, &mut genetic_rng);
            children.push(UnitModel {
                id: next_id,
                optimizer: AdamState::new(params.len(), config.adam),
                params,
                lineage: Lineage::Child {
                    parents: (parents[i].id, parents[j].id),
                },
            });
            next_id += 1;
        }
        train_generation(&mut children, problem, config, round, pool)?;

        let mut selection_rng = RngStream::derive(config.seed, &[streams::SELECTION, k]);
        let selection_batch = problem.sample_validation_batch(config.validation_size, &mut selection_rng)?;
        let survivors = select_survivors(parents, children, problem, &selection_batch, pool)?;

        let record = GenerationRecord {
            index: round,
            losses_before,
            losses_after: report.raw,
            train_losses: train_losses.into_iter().map(|l| l.unwrap_or(f64::NAN)).collect(),
            survivor_ids: survivors.models.iter().map(|m| m.id).collect(),
            selection_losses: survivors.losses,
            adoption_count: survivors.adoption_count,
            duration: started.elapsed(),
        };
        generation = Generation {
            index: round,
            models: survivors.models,
        };
        on_generation(&record, &generation);

        let stop = should_stop(history.last(), &record, config);
        history.push(record);
        if stop {
            break;
        }
    }

    let best = generation.models[0].clone();
    let best_loss = history.last().expect("at least one round").selection_losses[0];
    Ok(RunResult {
        best,
        best_loss,
        history,
        final_generation: generation,
    })
}

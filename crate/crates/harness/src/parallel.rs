//! Wall-clock cost of a GADAM run at several worker-pool widths.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use evoptim_core::evolution::{self, RunResult};
use evoptim_core::problem::{BenchmarkProblem, SupervisedProblem};

use crate::config::{Algorithm, ExperimentConfig};
use crate::runner::evolution_settings;
use crate::setup::{prepare, Prepared};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParallelRow {
    pub threads: usize,
    pub generations: usize,
    pub mean_generation_ms: f64,
    pub total_ms: f64,
    pub speedup: f64,
    pub identical: bool,
}

/// Parses `"4"`, `"1,2,4"` or an inclusive range `"1..10"`.
pub fn parse_thread_counts(spec: &str) -> Result<Vec<usize>> {
    let parse = |s: &str| -> Result<usize> {
        let n: usize = s.trim().parse().with_context(|| format!("bad thread count '{s}'"))?;
        if n == 0 {
            bail!("thread counts must be positive");
        }
        Ok(n)
    };
    if let Some((lo, hi)) = spec.split_once("..") {
        let (lo, hi) = (parse(lo)?, parse(hi.trim_start_matches('='))?);
        if lo > hi {
            bail!("empty thread range '{spec}'");
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',').map(parse).collect()
}

fn same_result(a: &RunResult, b: &RunResult) -> bool {
    a.best == b.best
        && a.final_generation == b.final_generation
        && a.history.len() == b.history.len()
        && a.history.iter().zip(&b.history).all(|(x, y)| {
            x.losses_before == y.losses_before
                && x.losses_after == y.losses_after
                && x.survivor_ids == y.survivor_ids
                && x.selection_losses == y.selection_losses
        })
}

/// Runs the config's first seed once per thread count. `identical` compares
/// every run's weights and loss history with the first one's.
pub fn measure_parallel_efficiency(config: &ExperimentConfig, thread_counts: &[usize]) -> Result<Vec<ParallelRow>> {
    if config.algorithm != Algorithm::Gadam {
        bail!("parallel benchmark needs a gadam config, got {}", config.algorithm.name());
    }
    if thread_counts.is_empty() {
        bail!("no thread counts given");
    }
    config.validate()?;
    let prepared = prepare(&config.objective)?;
    let ecfg = evolution_settings(config, &prepared, config.seeds[0])?;

    let mut rows: Vec<ParallelRow> = Vec::new();
    let mut reference: Option<RunResult> = None;
    for &threads in thread_counts {
        let pool = evolution::thread_pool(threads)?;
        let started = Instant::now();
        let result = match &prepared {
            Prepared::Supervised(s) => {
                let problem = match &s.validation {
                    Some(v) => SupervisedProblem::with_validation(&s.mlp, &s.train, v),
                    None => SupervisedProblem::new(&s.mlp, &s.train),
                };
                evolution::run(&ecfg, &problem, &pool)?
            }
            Prepared::Benchmark(f) => evolution::run(&ecfg, &BenchmarkProblem::new(*f), &pool)?,
        };
        let total_ms = started.elapsed().as_secs_f64() * 1e3;
        let per_gen: f64 =
            result.history.iter().map(|r| r.duration.as_secs_f64() * 1e3).sum::<f64>() / result.history.len() as f64;
        let identical = reference.as_ref().is_none_or(|r| same_result(r, &result));
        let base = rows.first().map_or(per_gen, |r| r.mean_generation_ms);
        rows.push(ParallelRow {
            threads,
            generations: result.history.len(),
            mean_generation_ms: per_gen,
            total_ms,
            speedup: base / per_gen,
            identical,
        });
        reference.get_or_insert(result);
    }
    Ok(rows)
}

pub fn write_parallel_report(rows: &[ParallelRow], path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

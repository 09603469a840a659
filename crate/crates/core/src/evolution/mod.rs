//! GADAM: a population of Adam-trained unit models evolved with a genetic
//! algorithm.
//!
//! Each generation trains every unit model with Adam, scores the trained
//! models on a shared validation batch, breeds `g` children through
//! loss-biased crossover and mutation, trains the children, and keeps the
//! best `g` of parents and children on a fresh shared validation batch.

mod engine;
mod fitness;
mod operators;

use std::str::FromStr;
use std::time::Duration;

pub use engine::{
    evaluate_losses, init_model, init_population, run, run_with, select_survivors, should_stop, thread_pool,
    train_generation, train_model, RunResult, Survivors,
};
pub use fitness::{evaluate_fitness, FitnessReport};
pub use operators::{crossover, crossover_threshold, mutate, mutation_rate, select_pairs};

/// Tags for [`RngStream::derive`](crate::params::RngStream::derive). A run
/// with master seed `s` draws model `i`'s initial weights from `(s, [INIT, i])`,
/// its round-`k` batches from `(s, [TRAIN, k, i])`, and the round's genetic,
/// fitness and selection draws from `(s, [GENETIC | FITNESS | SELECTION, k])`.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const GENETIC: u64 = 3;
    pub const FITNESS: u64 = 4;
    pub const SELECTION: u64 = 5;
    /// Free for callers running stand-alone optimizers next to a population.
    pub const SOLO: u64 = 6;
}

use crate::error::{Error, Result};
use crate::optim::{AdamConfig, AdamState};
use crate::params::{InitKind, ParamVector};

/// Distribution that replaces a mutated weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Replacement {
    /// Uniform on `[0, 1)`.
    #[default]
    Uniform01,
    StandardNormal,
}

impl FromStr for Replacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" | "uniform" => Ok(Replacement::Uniform01),
            "standard-normal" | "normal" => Ok(Replacement::StandardNormal),
            other => Err(Error::Config(format!("unknown mutation replacement '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    /// Population size `g`.
    pub population: usize,
    /// Maximum number of generations `K`.
    pub max_generations: usize,
    /// Base mutation rate `p`.
    pub mutation_rate: f64,
    /// Stop once consecutive generations' summed validation losses differ by
    /// at most this much.
    pub stop_threshold: f64,
    /// Adam steps (one mini-batch each) per model per generation.
    pub steps_per_generation: usize,
    pub batch_size: usize,
    pub validation_size: usize,
    pub seed: u64,
    pub replacement: Replacement,
    pub init: InitKind,
    pub adam: AdamConfig,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population: 10,
            max_generations: 10,
            mutation_rate: 0.01,
            stop_threshold: 0.0,
            steps_per_generation: 500,
            batch_size: 128,
            validation_size: 256,
            seed: 0,
            replacement: Replacement::Uniform01,
            init: InitKind::FanInScaled,
            adam: AdamConfig::default(),
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.population < 2 {
            return fail(format!("population must be at least 2, got {}", self.population));
        }
        if self.max_generations < 1 {
            return fail("max_generations must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return fail(format!("mutation rate must lie in [0, 1], got {}", self.mutation_rate));
        }
        if self.stop_threshold.is_nan() || self.stop_threshold < 0.0 {
            return fail(format!("stop threshold must be non-negative, got {}", self.stop_threshold));
        }
        if self.steps_per_generation < 1 {
            return fail("steps_per_generation must be at least 1".into());
        }
        if self.batch_size < 1 || self.validation_size < 1 {
            return fail("batch and validation sizes must be positive".into());
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lineage {
    Initial,
    /// A parent that made it into a later generation.
    Survivor,
    Child { parents: (u64, u64) },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitModel {
    pub id: u64,
    pub params: ParamVector,
    pub optimizer: AdamState,
    pub lineage: Lineage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub index: usize,
    pub models: Vec<UnitModel>,
}

/// Bookkeeping for one generation step.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub index: usize,
    /// Summed validation loss of each entering model before training, on the
    /// fitness batch.
    pub losses_before: Vec<f64>,
    /// Same batch, after training.
    pub losses_after: Vec<f64>,
    /// Mean loss of each parent's last training batch.
    pub train_losses: Vec<f64>,
    pub survivor_ids: Vec<u64>,
    /// Survivors' summed losses on the selection batch, ascending.
    pub selection_losses: Vec<f64>,
    /// Children among the survivors.
    pub adoption_count: usize,
    pub duration: Duration,
}

impl GenerationRecord {
    pub fn entry_sum(&self) -> f64 {
        self.losses_before.iter().sum()
    }

    pub fn selection_sum(&self) -> f64 {
        self.selection_losses.iter().sum()
    }

    pub fn adoption_rate(&self) -> f64 {
        self.adoption_count as f64 / self.survivor_ids.len() as f64
    }
}

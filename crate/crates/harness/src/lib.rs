//! Experiment harness: TOML-configured seeded runs of GADAM and the baseline
//! optimizers, CSV metrics, algorithm comparisons and parallel timing.

pub mod compare;
pub mod config;
pub mod parallel;
pub mod runner;
pub mod setup;

pub use compare::{compare_algorithms, SummaryRow};
pub use config::{Algorithm, ExperimentConfig};
pub use parallel::{measure_parallel_efficiency, ParallelRow};
pub use runner::{run_experiment, ExperimentReport, MetricsRow, RunOutcome};

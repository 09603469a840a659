//! Training problems: an objective paired with the data it is fitted to.
//!
//! The evolution engine and the baseline trainers only see this trait, so the
//! same code drives MLPs on datasets and the analytic 2-D benchmarks.

use crate::data::Dataset;
use crate::error::Result;
use crate::objective::{Batch, BenchmarkFn, Mlp};
use crate::params::{init_params, InitKind, InitScheme, ParamVector, RngStream};

pub trait Problem: Sync {
    type Batch: Send + Sync;

    fn num_params(&self) -> usize;

    fn init_params(&self, kind: InitKind, rng: &mut RngStream) -> Result<ParamVector>;

    /// Draws a batch of `size` instances from the training data.
    fn sample_batch(&self, size: usize, rng: &mut RngStream) -> Result<Self::Batch>;

    /// Draws a batch for fitness scoring and survivor selection. Defaults to
    /// the training data.
    fn sample_validation_batch(&self, size: usize, rng: &mut RngStream) -> Result<Self::Batch> {
        self.sample_batch(size, rng)
    }

    /// Mean loss over the batch and its gradient.
    fn loss_and_grad(&self, w: &[f64], batch: &Self::Batch) -> Result<(f64, Vec<f64>)>;

    /// Loss summed over the instances of the batch.
    fn summed_loss(&self, w: &[f64], batch: &Self::Batch) -> Result<f64>;

    /// Maps an iterate back into the feasible set after an optimizer step.
    fn project(&self, _w: &mut [f64]) {}
}

/// An MLP fitted to a classification dataset, optionally with a held-out
/// validation set for population scoring.
#[derive(Debug, Clone, Copy)]
pub struct SupervisedProblem<'a> {
    pub model: &'a Mlp,
    pub data: &'a Dataset,
    pub validation: Option<&'a Dataset>,
}

impl<'a> SupervisedProblem<'a> {
    pub fn new(model: &'a Mlp, data: &'a Dataset) -> Self {
        Self {
            model,
            data,
            validation: None,
        }
    }

    pub fn with_validation(model: &'a Mlp, data: &'a Dataset, validation: &'a Dataset) -> Self {
        Self {
            model,
            data,
            validation: Some(validation),
        }
    }
}

impl Problem for SupervisedProblem<'_> {
    type Batch = Batch;

    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn init_params(&self, kind: InitKind, rng: &mut RngStream) -> Result<ParamVector> {
        self.model.init_params(kind, rng)
    }

    fn sample_batch(&self, size: usize, rng: &mut RngStream) -> Result<Batch> {
        self.data.sample_batch(size, rng)
    }

    fn sample_validation_batch(&self, size: usize, rng: &mut RngStream) -> Result<Batch> {
        self.validation.unwrap_or(self.data).sample_batch(size, rng)
    }

    fn loss_and_grad(&self, w: &[f64], batch: &Batch) -> Result<(f64, Vec<f64>)> {
        self.model.loss_and_grad(w, batch)
    }

    fn summed_loss(&self, w: &[f64], batch: &Batch) -> Result<f64> {
        self.model.summed_loss(w, batch)
    }
}

/// A deterministic 2-D test function; batches carry no data and iterates are
/// clamped to the function's domain.
#[derive(Debug, Clone, Copy)]
pub struct BenchmarkProblem {
    pub function: BenchmarkFn,
}

impl BenchmarkProblem {
    pub fn new(function: BenchmarkFn) -> Self {
        Self { function }
    }
}

impl Problem for BenchmarkProblem {
    type Batch = ();

    fn num_params(&self) -> usize {
        2
    }

    fn init_params(&self, kind: InitKind, rng: &mut RngStream) -> Result<ParamVector> {
        let blocks = [(2, 1)];
        let scheme = match kind {
            InitKind::StandardNormal => InitScheme::StandardNormal,
            InitKind::FanInScaled => InitScheme::FanInScaled { blocks: &blocks },
        };
        let mut w = init_params(2, scheme, rng)?;
        self.function.project(w.as_mut_slice());
        Ok(w)
    }

    fn sample_batch(&self, _size: usize, _rng: &mut RngStream) -> Result<()> {
        Ok(())
    }

    fn loss_and_grad(&self, w: &[f64], _batch: &()) -> Result<(f64, Vec<f64>)> {
        let (value, grad) = self.function.eval(w)?;
        Ok((value, grad.to_vec()))
    }

    fn summed_loss(&self, w: &[f64], _batch: &()) -> Result<f64> {
        Ok(self.function.eval(w)?.0)
    }

    fn project(&self, w: &mut [f64]) {
        self.function.project(w)
    }
}

use rayon::ThreadPool;

use super::engine::evaluate_losses;
use super::UnitModel;
use crate::error::Result;
use crate::problem::Problem;

/// Raw validation losses, their min-max normalization and the softmax
/// selection probabilities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessReport {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub probs: Vec<f64>,
}

impl FitnessReport {
    /// Normalizes `raw` to `[0, 1]` by min-max (all-equal losses map to 0) and
    /// assigns `P_i = exp(-L_i) / sum_j exp(-L_j)` over the normalized losses.
    pub fn from_losses(raw: Vec<f64>) -> Self {
        let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        let normalized: Vec<f64> = if span > 0.0 {
            raw.iter().map(|l| ((l - min) / span).clamp(0.0, 1.0)).collect()
        } else {
            vec![0.0; raw.len()]
        };
        let weights: Vec<f64> = normalized.iter().map(|l| (-l).exp()).collect();
        let total: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / total).collect();
        Self { raw, normalized, probs }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

/// Scores every model on one shared validation batch.
pub fn evaluate_fitness<P: Problem>(
    models: &[UnitModel],
    problem: &P,
    batch: &P::Batch,
    pool: &ThreadPool,
) -> Result<FitnessReport> {
    Ok(FitnessReport::from_losses(evaluate_losses(models, problem, batch, pool)?))
}

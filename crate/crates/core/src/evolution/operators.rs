//! Genetic operators: parent selection, crossover and mutation.

use super::{FitnessReport, Replacement};
use crate::error::{check_len, Result};
use crate::params::{ParamVector, RngStream};

fn categorical(probs: &[f64], rng: &mut RngStream) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u at the very top of the range
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// `count` parent pairs drawn with replacement from the selection
/// distribution. Both members of a pair are independent draws, so a model may
/// be paired with itself.
pub fn select_pairs(report: &FitnessReport, count: usize, rng: &mut RngStream) -> Vec<(usize, usize)> {
    (0..count)
        .map(|_| (categorical(&report.probs, rng), categorical(&report.probs, rng)))
        .collect()
}

/// Probability that a child entry is inherited from the first parent:
/// `exp(-L_i) / (exp(-L_i) + exp(-L_j))` over normalized losses.
pub fn crossover_threshold(normalized_i: f64, normalized_j: f64) -> f64 {
    let (a, b) = ((-normalized_i).exp(), (-normalized_j).exp());
    a / (a + b)
}

/// Entrywise inheritance: entry `m` comes from `first` when a fresh uniform
/// draw is at most `threshold`, otherwise from `second`.
pub fn crossover(first: &[f64], second: &[f64], threshold: f64, rng: &mut RngStream) -> Result<ParamVector> {
    check_len("crossover parents", first.len(), second.len())?;
    let child = first
        .iter()
        .zip(second)
        .map(|(&a, &b)| if rng.uniform() <= threshold { a } else { b })
        .collect();
    ParamVector::new(child)
}

/// `p * (1 - P_i - P_j)`, clamped to `[0, p]` (a model paired with itself can
/// push `P_i + P_j` above 1).
pub fn mutation_rate(base: f64, prob_i: f64, prob_j: f64) -> f64 {
    (base * (1.0 - prob_i - prob_j)).clamp(0.0, base)
}

/// Replaces each entry with a fresh draw from `replacement` with probability
/// `rate`; one uniform draw per entry decides between replacing and keeping.
/// Returns the mutated vector and the number of replaced entries.
pub fn mutate(mut child: ParamVector, rate: f64, replacement: Replacement, rng: &mut RngStream) -> (ParamVector, usize) {
    let mut replaced = 0;
    for w in child.as_mut_slice() {
        if rng.uniform() < rate {
            *w = match replacement {
                Replacement::Uniform01 => rng.uniform(),
                Replacement::StandardNormal => rng.standard_normal(),
            };
            replaced += 1;
        }
    }
    (child, replaced)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(probs: Vec<f64>) -> FitnessReport {
        FitnessReport {
            raw: vec![0.0; probs.len()],
            normalized: vec![0.0; probs.len()],
            probs,
        }
    }

    #[test]
    fn degenerate_distribution_always_picks_the_same_model() {
        let r = report(vec![1.0, 0.0, 0.0, 0.0]);
        let pairs = select_pairs(&r, 4, &mut RngStream::new(1));
        assert_eq!(pairs, vec![(0, 0); 4]);
    }

    #[test]
    fn uniform_selection_marginals() {
        let g = 5;
        let r = report(vec![0.2; g]);
        let pairs = select_pairs(&r, 10_000, &mut RngStream::new(8));
        assert_eq!(pairs.len(), 10_000);
        let mut counts = vec![0usize; g];
        for (i, _) in &pairs {
            counts[*i] += 1;
        }
        let sigma = (10_000.0f64 * 0.2 * 0.8).sqrt();
        for c in counts {
            assert!((c as f64 - 2000.0).abs() < 3.0 * sigma, "{c}");
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(crossover_threshold(0.4, 0.4), 0.5);
        let t = crossover_threshold(0.9, 0.1);
        assert!(t > 0.0 && t < 0.5);
    }

    #[test]
    fn child_entries_come_from_parents() {
        let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..200).map(|i| -(i as f64) - 1.0).collect();
        let child = crossover(&a, &b, 0.5, &mut RngStream::new(3)).unwrap();
        for (m, v) in child.iter().enumerate() {
            assert!(*v == a[m] || *v == b[m]);
        }
        assert!(crossover(&a, &b[..10], 0.5, &mut RngStream::new(3)).is_err());
    }

    #[test]
    fn mutation_edge_cases() {
        let child = ParamVector::new(vec![5.0; 100]).unwrap();
        let (same, n) = mutate(child.clone(), mutation_rate(0.0, 0.1, 0.1), Replacement::Uniform01, &mut RngStream::new(1));
        assert_eq!((same, n), (child.clone(), 0));
        assert_eq!(mutation_rate(0.3, 0.6, 0.4), 0.0);
        let (full, n) = mutate(child, mutation_rate(1.0, 0.0, 0.0), Replacement::Uniform01, &mut RngStream::new(1));
        assert_eq!(n, 100);
        assert!(full.iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn self_pairing_rate_is_clamped() {
        assert_eq!(mutation_rate(0.01, 0.7, 0.7), 0.0);
        assert!((mutation_rate(0.01, 0.1, 0.2) - 0.007).abs() < 1e-15);
    }
}

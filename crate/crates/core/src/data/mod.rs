//! Datasets, preprocessing, splitting and batch sampling.

mod idx;
mod tabular;

pub use idx::{load_mnist_idx, read_idx_images, read_idx_labels};
pub use tabular::{load_csv_dataset, parse_csv_dataset, Delimiter, GenericSchema, Schema};

use rand::seq::index;

use crate::error::{check_len, Error, Result};
use crate::objective::Batch;
use crate::params::RngStream;

/// Per-column standardization fitted on a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// A labelled classification dataset held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    cols: usize,
    labels: Vec<usize>,
    class_names: Vec<String>,
    /// Columns that are standardized; one-hot and other indicator columns are
    /// left alone.
    continuous: Vec<bool>,
    scaling: Option<Scaling>,
}

impl Dataset {
    pub fn new(features: Vec<f64>, cols: usize, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let continuous = vec![true; cols];
        Self::with_continuous(features, cols, labels, class_names, continuous)
    }

    pub fn with_continuous(
        features: Vec<f64>,
        cols: usize,
        labels: Vec<usize>,
        class_names: Vec<String>,
        continuous: Vec<bool>,
    ) -> Result<Self> {
        if cols == 0 || labels.is_empty() {
            return Err(Error::InvalidDimension("dataset needs at least one row and one column".into()));
        }
        check_len("dataset features", labels.len() * cols, features.len())?;
        check_len("continuous column mask", cols, continuous.len())?;
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidDimension(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "dataset features",
                index: i,
            });
        }
        Ok(Self {
            features,
            cols,
            labels,
            class_names,
            continuous,
            scaling: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scaling(&self) -> Option<&Scaling> {
        self.scaling.as_ref()
    }

    pub fn continuous_columns(&self) -> &[bool] {
        &self.continuous
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            features,
            cols: self.cols,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            continuous: self.continuous.clone(),
            scaling: self.scaling.clone(),
        }
    }

    /// Whole dataset as one batch.
    pub fn to_batch(&self) -> Batch {
        Batch::classification(self.features.clone(), self.cols, self.labels.clone())
            .expect("dataset invariants guarantee a valid batch")
    }

    /// Mean and standard deviation of each continuous column. Indicator
    /// columns get mean 0 and std 1 so they pass through unchanged.
    pub fn fit_standardization(&self) -> Scaling {
        let n = self.len() as f64;
        let mut mean = vec![0.0; self.cols];
        let mut std = vec![1.0; self.cols];
        for c in (0..self.cols).filter(|&c| self.continuous[c]) {
            let m = (0..self.len()).map(|r| self.row(r)[c]).sum::<f64>() / n;
            let var = (0..self.len()).map(|r| (self.row(r)[c] - m).powi(2)).sum::<f64>() / n;
            mean[c] = m;
            std[c] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Scaling { mean, std }
    }

    /// Applies a previously fitted scaling and records it as metadata.
    pub fn standardize(&mut self, scaling: &Scaling) -> Result<()> {
        check_len("scaling columns", self.cols, scaling.mean.len())?;
        for row in self.features.chunks_mut(self.cols) {
            for ((v, m), s) in row.iter_mut().zip(&scaling.mean).zip(&scaling.std) {
                *v = (*v - m) / s;
            }
        }
        self.scaling = Some(scaling.clone());
        Ok(())
    }

    pub fn split_indices(&self, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
        let mut rng = RngStream::new(spec.seed);
        match spec.rule {
            SplitRule::Fraction(f) => {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::Config(format!("train fraction must lie in [0, 1], got {f}")));
                }
                let mut order = index::sample(&mut rng, self.len(), self.len()).into_vec();
                let n_train = (f * self.len() as f64).round() as usize;
                let test = order.split_off(n_train);
                Ok((order, test))
            }
            SplitRule::PerClass(count) => {
                let mut train = Vec::new();
                let mut test = Vec::new();
                for class in 0..self.num_classes() {
                    let members: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == class).collect();
                    if members.is_empty() {
                        continue;
                    }
                    if members.len() < count {
                        return Err(Error::Size {
                            requested: count,
                            available: members.len(),
                        });
                    }
                    let order = index::sample(&mut rng, members.len(), members.len()).into_vec();
                    train.extend(order[..count].iter().map(|&k| members[k]));
                    test.extend(order[count..].iter().map(|&k| members[k]));
                }
                Ok((train, test))
            }
        }
    }

    /// Disjoint train/test datasets covering every row.
    pub fn split(&self, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
        let (train, test) = self.split_indices(spec)?;
        Ok((self.subset(&train), self.subset(&test)))
    }

    /// `b` distinct rows drawn uniformly; successive calls sample afresh.
    pub fn sample_batch(&self, b: usize, rng: &mut RngStream) -> Result<Batch> {
        let idx = self.sample_indices(b, rng)?;
        let mut features = Vec::with_capacity(b * self.cols);
        for &i in &idx {
            features.extend_from_slice(self.row(i));
        }
        Batch::classification(features, self.cols, idx.iter().map(|&i| self.labels[i]).collect())
    }

    pub fn sample_indices(&self, b: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
        if b == 0 || b > self.len() {
            return Err(Error::Size {
                requested: b,
                available: self.len(),
            });
        }
        Ok(index::sample(rng, self.len(), b).into_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitRule {
    /// Fraction of all rows assigned to training.
    Fraction(f64),
    /// Exactly this many training rows from every class; the rest are test.
    PerClass(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub rule: SplitRule,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, classes: usize) -> Dataset {
        let features = (0..n * 2).map(|v| v as f64).collect();
        let labels = (0..n).map(|i| i % classes).collect();
        let names = (0..classes).map(|c| format!("c{c}")).collect();
        Dataset::new(features, 2, labels, names).unwrap()
    }

    #[test]
    fn fraction_split_sizes_and_cover() {
        let ds = toy(10, 2);
        let spec = SplitSpec { rule: SplitRule::Fraction(0.8), seed: 4 };
        let (train, test) = ds.split_indices(&spec).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(ds.split_indices(&spec).unwrap(), (train, test));
    }

    #[test]
    fn per_class_split() {
        let ds = toy(21, 3);
        let (train, test) = ds.split(&SplitSpec { rule: SplitRule::PerClass(5), seed: 1 }).unwrap();
        assert_eq!(train.len(), 15);
        assert_eq!(test.len(), 6);
        for c in 0..3 {
            assert_eq!(train.labels().iter().filter(|&&l| l == c).count(), 5);
        }
        assert!(ds.split(&SplitSpec { rule: SplitRule::PerClass(8), seed: 1 }).is_err());
    }

    #[test]
    fn full_batch_is_a_permutation() {
        let ds = toy(12, 3);
        let mut idx = ds.sample_indices(12, &mut RngStream::new(9)).unwrap();
        idx.sort();
        assert_eq!(idx, (0..12).collect::<Vec<_>>());
        assert!(matches!(ds.sample_batch(13, &mut RngStream::new(9)), Err(Error::Size { .. })));
    }

    #[test]
    fn sampling_is_seeded() {
        let ds = toy(50, 5);
        let a = ds.sample_batch(7, &mut RngStream::new(2)).unwrap();
        let b = ds.sample_batch(7, &mut RngStream::new(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_draws_are_uniform() {
        let ds = toy(10, 2);
        let mut rng = RngStream::new(77);
        let mut counts = [0usize; 10];
        let draws = 10_000;
        for _ in 0..draws {
            counts[ds.sample_indices(1, &mut rng).unwrap()[0]] += 1;
        }
        let p = 0.1;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn standardization_uses_training_statistics() {
        let ds = Dataset::with_continuous(
            vec![1.0, 0.0, 3.0, 1.0, 5.0, 0.0, 100.0, 1.0],
            2,
            vec![0, 1, 0, 1],
            vec!["a".into(), "b".into()],
            vec![true, false],
        )
        .unwrap();
        let (mut train, mut test) = (ds.subset(&[0, 1, 2]), ds.subset(&[3]));
        let scaling = train.fit_standardization();
        train.standardize(&scaling).unwrap();
        test.standardize(&scaling).unwrap();
        assert_eq!(scaling.mean, vec![3.0, 0.0]);
        let col: Vec<f64> = (0..3).map(|r| train.row(r)[0]).collect();
        assert!(col.iter().sum::<f64>().abs() < 1e-12);
        assert!((col.iter().map(|v| v * v).sum::<f64>() / 3.0 - 1.0).abs() < 1e-12);
        // test row uses training mean/std, indicator column untouched
        assert!((test.row(0)[0] - (100.0 - 3.0) / (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(test.row(0)[1], 1.0);
    }
}

//! Differentiable scalar objectives.

mod benchmark;
mod mlp;

pub use benchmark::BenchmarkFn;
pub use mlp::{Activation, Mlp, MlpShape, OutputLoss};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// One class index per row.
    Classes(Vec<usize>),
    /// `dim` real targets per row, row-major.
    Values { values: Vec<f64>, dim: usize },
}

/// A row-major block of labeled instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    features: Vec<f64>,
    cols: usize,
    targets: Targets,
}

impl Batch {
    pub fn classification(features: Vec<f64>, cols: usize, labels: Vec<usize>) -> Result<Self> {
        Self::new(features, cols, Targets::Classes(labels))
    }

    pub fn regression(features: Vec<f64>, cols: usize, targets: Vec<f64>, dim: usize) -> Result<Self> {
        Self::new(features, cols, Targets::Values { values: targets, dim })
    }

    fn new(features: Vec<f64>, cols: usize, targets: Targets) -> Result<Self> {
        if cols == 0 {
            return Err(Error::InvalidDimension("batch needs at least one feature column".into()));
        }
        let rows = match &targets {
            Targets::Classes(labels) => labels.len(),
            Targets::Values { values, dim } => {
                if *dim == 0 || values.len() % dim != 0 {
                    return Err(Error::InvalidDimension(format!(
                        "{} regression targets do not split into rows of {dim}",
                        values.len()
                    )));
                }
                values.len() / dim
            }
        };
        if rows == 0 {
            return Err(Error::InvalidDimension("batch must contain at least one row".into()));
        }
        check_len("batch features", rows * cols, features.len())?;
        Ok(Self { features, cols, targets })
    }

    pub fn len(&self) -> usize {
        self.features.len() / self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.cols..(i + 1) * self.cols]
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    /// The single-row batch holding row `i`.
    pub fn slice_row(&self, i: usize) -> Batch {
        let targets = match &self.targets {
            Targets::Classes(labels) => Targets::Classes(vec![labels[i]]),
            Targets::Values { values, dim } => Targets::Values {
                values: values[i * dim..(i + 1) * dim].to_vec(),
                dim: *dim,
            },
        };
        Batch {
            features: self.row(i).to_vec(),
            cols: self.cols,
            targets,
        }
    }
}

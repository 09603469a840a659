//! Turns an objective config into loaded, split and standardized data plus a
//! model, or into a benchmark function.

use anyhow::{bail, Context, Result};

use evoptim_core::data::{
    load_csv_dataset, load_mnist_idx, Dataset, Delimiter, GenericSchema, Schema, SplitRule, SplitSpec,
};
use evoptim_core::objective::{Batch, BenchmarkFn, Mlp, MlpShape, OutputLoss};
use evoptim_core::params::RngStream;

use crate::config::{DatasetName, ObjectiveConfig, ObjectiveKind};

#[derive(Debug, Clone)]
pub struct SupervisedSetup {
    pub mlp: Mlp,
    pub train: Dataset,
    pub validation: Option<Dataset>,
    pub test: Dataset,
    validation_batch: Batch,
    test_batch: Batch,
}

impl SupervisedSetup {
    pub fn new(mlp: Mlp, train: Dataset, validation: Option<Dataset>, test: Dataset) -> Self {
        let validation_batch = validation.as_ref().unwrap_or(&train).to_batch();
        let test_batch = test.to_batch();
        Self {
            mlp,
            train,
            validation,
            test,
            validation_batch,
            test_batch,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Prepared {
    Supervised(SupervisedSetup),
    Benchmark(BenchmarkFn),
}

impl Prepared {
    /// Mean loss on the validation set (the training set when none is held
    /// out), or the function value for benchmarks.
    pub fn validation_loss(&self, w: &[f64]) -> Result<f64> {
        Ok(match self {
            Prepared::Supervised(s) => s.mlp.loss(w, &s.validation_batch)?,
            Prepared::Benchmark(f) => f.eval(w)?.0,
        })
    }

    /// Rows available to validation batches; `None` for benchmarks.
    pub fn validation_rows(&self) -> Option<usize> {
        match self {
            Prepared::Supervised(s) => Some(s.validation.as_ref().unwrap_or(&s.train).len()),
            Prepared::Benchmark(_) => None,
        }
    }

    /// Mean test loss and accuracy in `[0, 1]`; benchmarks report their value
    /// and no accuracy.
    pub fn test_metrics(&self, w: &[f64]) -> Result<(f64, Option<f64>)> {
        Ok(match self {
            Prepared::Supervised(s) => s.mlp.evaluate(w, &s.test_batch)?,
            Prepared::Benchmark(f) => (f.eval(w)?.0, None),
        })
    }
}

pub fn prepare(config: &ObjectiveConfig) -> Result<Prepared> {
    if config.kind == ObjectiveKind::Benchmark {
        return Ok(Prepared::Benchmark(BenchmarkFn::by_name(&config.function)?));
    }
    let (mut train, mut test) = load_splits(config)?;
    let mut validation = None;
    if config.validation_fraction > 0.0 {
        let spec = SplitSpec {
            rule: SplitRule::Fraction(1.0 - config.validation_fraction),
            seed: config.split_seed.wrapping_add(1),
        };
        let (fit, held) = train.split(&spec)?;
        if held.is_empty() || fit.is_empty() {
            bail!("validation_fraction {} leaves an empty split", config.validation_fraction);
        }
        train = fit;
        validation = Some(held);
    }
    if config.standardize && config.dataset != DatasetName::Mnist {
        let scaling = train.fit_standardization();
        train.standardize(&scaling)?;
        test.standardize(&scaling)?;
        if let Some(v) = validation.as_mut() {
            v.standardize(&scaling)?;
        }
    }
    if test.cols() != train.cols() {
        bail!("test data has {} columns, training data {}", test.cols(), train.cols());
    }

    let mut layers = vec![train.cols()];
    layers.extend(config.hidden_layers());
    layers.push(train.num_classes().max(test.num_classes()));
    let shape = MlpShape::new(layers, config.activation()?, OutputLoss::SoftmaxCrossEntropy)?;
    Ok(Prepared::Supervised(SupervisedSetup::new(Mlp::new(shape), train, validation, test)))
}

fn schema(config: &ObjectiveConfig) -> Result<Schema> {
    Ok(match config.dataset {
        DatasetName::Yeast => Schema::Yeast,
        DatasetName::Adult => Schema::Adult,
        DatasetName::Letter => Schema::Letter,
        DatasetName::Generic => Schema::Generic(GenericSchema {
            delimiter: match config.delimiter.as_str() {
                "comma" => Delimiter::Comma,
                "whitespace" => Delimiter::Whitespace,
                other => bail!("unknown delimiter '{other}'"),
            },
            has_header: config.has_header,
            label_column: config.label_column,
            skip_columns: config.skip_columns.clone(),
        }),
        DatasetName::Mnist => unreachable!("IDX files have no CSV schema"),
    })
}

fn load_splits(config: &ObjectiveConfig) -> Result<(Dataset, Dataset)> {
    let load = |path: &std::path::Path, labels: Option<&std::path::PathBuf>| -> Result<Dataset> {
        let data = if config.dataset == DatasetName::Mnist {
            let labels = labels.context("MNIST needs labels_path and test_labels_path")?;
            load_mnist_idx(path, labels)?
        } else {
            load_csv_dataset(path, &schema(config)?)?
        };
        Ok(data)
    };
    let all = load(&config.path, config.labels_path.as_ref()).with_context(|| format!("loading {}", config.path.display()))?;
    let (train, test) = match &config.test_path {
        Some(test_path) => {
            let test = load(test_path, config.test_labels_path.as_ref())
                .with_context(|| format!("loading {}", test_path.display()))?;
            (all, test)
        }
        None => {
            if config.train_fraction >= 1.0 {
                bail!("train_fraction 1 leaves no test data and no test_path is given");
            }
            all.split(&SplitSpec {
                rule: SplitRule::Fraction(config.train_fraction),
                seed: config.split_seed,
            })?
        }
    };
    let train = if config.dataset == DatasetName::Mnist && config.subsample > 0 && config.subsample < train.len() {
        let mut rng = RngStream::derive(config.split_seed, &[2]);
        let mut keep = train.sample_indices(config.subsample, &mut rng)?;
        keep.sort_unstable();
        train.subset(&keep)
    } else {
        train
    };
    Ok((train, test))
}

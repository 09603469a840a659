//! Experiment configuration, read from TOML. Every key has a default.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use evoptim_core::evolution::{EvolutionConfig, Replacement};
use evoptim_core::objective::Activation;
use evoptim_core::optim::{Hyperparams, OptimizerKind, Stepper};
use evoptim_core::params::InitKind;

pub const THREADS_ENV: &str = "EVOPTIM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Gadam,
    Adam,
    Sgd,
    Sgdm,
    Adagrad,
    Rmsprop,
    Adadelta,
    MultiStartAdam,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gadam => "gadam",
            Algorithm::Adam => "adam",
            Algorithm::Sgd => "sgd",
            Algorithm::Sgdm => "sgdm",
            Algorithm::Adagrad => "adagrad",
            Algorithm::Rmsprop => "rmsprop",
            Algorithm::Adadelta => "adadelta",
            Algorithm::MultiStartAdam => "multi-start-adam",
        }
    }

    /// Optimizer driving each model.
    pub fn optimizer(self) -> OptimizerKind {
        match self {
            Algorithm::Gadam | Algorithm::Adam | Algorithm::MultiStartAdam => OptimizerKind::Adam,
            Algorithm::Sgd => OptimizerKind::Sgd,
            Algorithm::Sgdm => OptimizerKind::Sgdm,
            Algorithm::Adagrad => OptimizerKind::AdaGrad,
            Algorithm::Rmsprop => OptimizerKind::RmsProp,
            Algorithm::Adadelta => OptimizerKind::AdaDelta,
        }
    }
}

impl FromStr for Algorithm {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s))
            .map_err(|_| anyhow::anyhow!("unknown algorithm '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Dataset,
    Benchmark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetName {
    Yeast,
    Adult,
    Letter,
    Mnist,
    Generic,
}

impl DatasetName {
    pub fn default_hidden(self) -> Vec<usize> {
        match self {
            DatasetName::Yeast | DatasetName::Generic => vec![32],
            DatasetName::Adult | DatasetName::Letter => vec![64],
            DatasetName::Mnist => vec![128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveKind,
    pub dataset: DatasetName,
    /// Data file (images file for MNIST).
    pub path: PathBuf,
    /// MNIST labels file.
    pub labels_path: Option<PathBuf>,
    /// Separate test file; without one the data file is split.
    pub test_path: Option<PathBuf>,
    pub test_labels_path: Option<PathBuf>,
    /// Training rows kept from MNIST; 0 keeps all.
    pub subsample: usize,
    /// Hidden layer widths; the dataset default when absent.
    pub hidden: Option<Vec<usize>>,
    pub activation: String,
    pub init: String,
    pub train_fraction: f64,
    /// Fraction of the training split held out for validation.
    pub validation_fraction: f64,
    pub split_seed: u64,
    pub standardize: bool,
    pub function: String,
    pub delimiter: String,
    pub has_header: bool,
    pub label_column: usize,
    pub skip_columns: Vec<usize>,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            kind: ObjectiveKind::Dataset,
            dataset: DatasetName::Yeast,
            path: PathBuf::from("data/yeast.data"),
            labels_path: None,
            test_path: None,
            test_labels_path: None,
            subsample: 6000,
            hidden: None,
            activation: "relu".into(),
            init: "fan-in".into(),
            train_fraction: 0.8,
            validation_fraction: 0.2,
            split_seed: 0,
            standardize: true,
            function: "rastrigin".into(),
            delimiter: "comma".into(),
            has_header: false,
            label_column: 0,
            skip_columns: Vec::new(),
        }
    }
}

impl ObjectiveConfig {
    pub fn activation(&self) -> Result<Activation> {
        Ok(self.activation.parse()?)
    }

    pub fn init_kind(&self) -> Result<InitKind> {
        Ok(self.init.parse()?)
    }

    pub fn hidden_layers(&self) -> Vec<usize> {
        self.hidden.clone().unwrap_or_else(|| self.dataset.default_hidden())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.exists() && base.join(&*p).exists() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.path);
        for p in [&mut self.labels_path, &mut self.test_path, &mut self.test_labels_path]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }
}

/// Overrides of the optimizer's default hyperparameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub lr: Option<f64>,
    pub beta: Option<f64>,
    pub beta2: Option<f64>,
    pub eps: Option<f64>,
}

impl OptimizerConfig {
    pub fn resolve(&self, kind: OptimizerKind) -> Hyperparams {
        let d = kind.defaults();
        Hyperparams {
            lr: self.lr.unwrap_or(d.lr),
            beta: self.beta.unwrap_or(d.beta),
            beta2: self.beta2.unwrap_or(d.beta2),
            eps: self.eps.unwrap_or(d.eps),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    pub population: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub stop_threshold: f64,
    pub steps_per_generation: usize,
    pub replacement: String,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        let d = EvolutionConfig::default();
        Self {
            population: d.population,
            generations: d.max_generations,
            mutation_rate: d.mutation_rate,
            stop_threshold: d.stop_threshold,
            steps_per_generation: d.steps_per_generation,
            replacement: "uniform01".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label in comparison tables; the algorithm name when absent.
    pub name: Option<String>,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    /// Worker threads; 0 falls back to `EVOPTIM_THREADS`, then to one per core.
    pub threads: usize,
    pub out_dir: PathBuf,
    /// Optimizer steps per run for the single-model baselines and for each
    /// run of multi-start Adam.
    pub steps: usize,
    pub eval_every: usize,
    pub batch_size: usize,
    pub validation_size: usize,
    pub objective: ObjectiveConfig,
    pub optimizer: OptimizerConfig,
    pub evolution: EvolutionSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: None,
            algorithm: Algorithm::Gadam,
            seeds: vec![0],
            threads: 0,
            out_dir: PathBuf::from("runs"),
            steps: 5000,
            eval_every: 500,
            batch_size: 128,
            validation_size: 256,
            objective: ObjectiveConfig::default(),
            optimizer: OptimizerConfig::default(),
            evolution: EvolutionSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).context("invalid experiment config")?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative data paths that do not exist as given
    /// are retried relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mut config = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        if let Some(base) = path.parent() {
            config.objective.resolve_paths(base);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("seeds must list at least one seed");
        }
        if self.eval_every == 0 {
            bail!("eval_every must be positive");
        }
        if self.algorithm != Algorithm::Gadam && self.steps == 0 {
            bail!("steps must be positive");
        }
        let o = &self.objective;
        if !(0.0 < o.train_fraction && o.train_fraction <= 1.0) {
            bail!("train_fraction must lie in (0, 1], got {}", o.train_fraction);
        }
        if !(0.0..1.0).contains(&o.validation_fraction) {
            bail!("validation_fraction must lie in [0, 1), got {}", o.validation_fraction);
        }
        o.activation()?;
        o.init_kind()?;
        if o.kind == ObjectiveKind::Dataset && o.hidden_layers().contains(&0) {
            bail!("hidden layer widths must be positive");
        }
        Stepper::new(self.algorithm.optimizer(), self.hyperparams(), 1)?;
        if self.algorithm == Algorithm::Gadam {
            self.evolution_config(0)?.validate()?;
        }
        if self.algorithm == Algorithm::MultiStartAdam && self.evolution.population == 0 {
            bail!("multi-start Adam needs a positive population");
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.algorithm.name().to_string())
    }

    /// Thread count after applying the environment fallback.
    pub fn resolved_threads(&self) -> usize {
        if self.threads > 0 {
            return self.threads;
        }
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(0)
    }

    pub fn hyperparams(&self) -> Hyperparams {
        self.optimizer.resolve(self.algorithm.optimizer())
    }

    pub fn evolution_config(&self, seed: u64) -> Result<EvolutionConfig> {
        let e = &self.evolution;
        Ok(EvolutionConfig {
            population: e.population,
            max_generations: e.generations,
            mutation_rate: e.mutation_rate,
            stop_threshold: e.stop_threshold,
            steps_per_generation: e.steps_per_generation,
            batch_size: self.batch_size,
            validation_size: self.validation_size,
            seed,
            replacement: e.replacement.parse::<Replacement>()?,
            init: self.objective.init_kind()?,
            adam: self.optimizer.resolve(OptimizerKind::Adam).adam_config(),
        })
    }
}

//! Multi-algorithm comparison on a shared objective.

use std::path::Path;

use anyhow::{bail, Result};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::runner::{run_experiment, ExperimentReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub label: String,
    pub algorithm: &'static str,
    pub runs: usize,
    pub accuracy_mean: Option<f64>,
    pub accuracy_std: Option<f64>,
    pub test_loss_mean: f64,
    pub test_loss_std: f64,
}

/// Sample mean and standard deviation (`n - 1` denominator, 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(config: &ExperimentConfig, report: &ExperimentReport) -> SummaryRow {
    let losses: Vec<f64> = report.runs.iter().map(|r| r.test_loss).collect();
    let accuracies: Option<Vec<f64>> = report.runs.iter().map(|r| r.test_accuracy).collect();
    let (loss_mean, loss_std) = mean_std(&losses);
    let acc = accuracies.map(|a| mean_std(&a));
    SummaryRow {
        label: report.label.clone(),
        algorithm: config.algorithm.name(),
        runs: report.runs.len(),
        accuracy_mean: acc.map(|a| a.0),
        accuracy_std: acc.map(|a| a.1),
        test_loss_mean: loss_mean,
        test_loss_std: loss_std,
    }
}

/// Runs every config and writes one summary row per config to `out`. All
/// configs must share the same objective.
pub fn compare_algorithms(configs: &[ExperimentConfig], out: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    let Some(first) = configs.first() else {
        bail!("nothing to compare");
    };
    for (i, c) in configs.iter().enumerate().skip(1) {
        if c.objective != first.objective {
            bail!("config {} ({}) uses a different objective than config 0 ({})", i, c.label(), first.label());
        }
    }
    let mut rows = Vec::with_capacity(configs.len());
    for config in configs {
        let report = run_experiment(config)?;
        rows.push(summarize(config, &report));
    }
    if let Some(dir) = out.as_ref().parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut writer = csv::Writer::from_path(out)?;
    for row in &rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(rows)
}

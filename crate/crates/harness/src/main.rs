use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use evoptim::config::ExperimentConfig;
use evoptim::parallel::{parse_thread_counts, write_parallel_report};
use evoptim::{compare_algorithms, measure_parallel_efficiency, run_experiment};

#[derive(Parser)]
#[command(name = "evoptim", version, about = "Population-based Adam optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config over its seeds.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        /// Replace the config's seed list with this single seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several configs on one objective and summarize them.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// Summary CSV path.
        #[arg(long, default_value = "summary.csv")]
        out: PathBuf,
    },
    /// Time a GADAM config at several pool widths.
    BenchParallel {
        #[arg(long)]
        config: PathBuf,
        /// Thread counts: `1..10`, `1,2,4` or a single number.
        #[arg(long, default_value = "1..10")]
        threads: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            threads,
            seed,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(t) = threads {
                cfg.threads = t;
            }
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let report = run_experiment(&cfg)?;
            for run in &report.runs {
                match run.test_accuracy {
                    Some(acc) => println!(
                        "{}: test loss {:.4}, test accuracy {:.2}%",
                        run.run_id,
                        run.test_loss,
                        100.0 * acc
                    ),
                    None => println!("{}: final value {:.6e}", run.run_id, run.test_loss),
                }
            }
            println!("metrics written to {}", report.metrics_path.display());
        }
        Command::Compare { configs, threads, out } => {
            let cfgs = configs
                .iter()
                .map(|p| {
                    let mut c = ExperimentConfig::load(p)?;
                    if let Some(t) = threads {
                        c.threads = t;
                    }
                    Ok(c)
                })
                .collect::<Result<Vec<_>>>()?;
            for row in compare_algorithms(&cfgs, &out)? {
                let acc = match (row.accuracy_mean, row.accuracy_std) {
                    (Some(m), Some(s)) => format!("{:.2} +- {:.2}%", 100.0 * m, 100.0 * s),
                    _ => "n/a".into(),
                };
                println!(
                    "{:<20} runs {:>2}  accuracy {acc:<18} test loss {:.4} +- {:.4}",
                    row.label, row.runs, row.test_loss_mean, row.test_loss_std
                );
            }
            println!("summary written to {}", out.display());
        }
        Command::BenchParallel { config, threads, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rows = measure_parallel_efficiency(&cfg, &parse_thread_counts(&threads)?)?;
            for r in &rows {
                println!(
                    "threads {:>2}: {:>9.1} ms/generation  speedup {:.2}  identical {}",
                    r.threads, r.mean_generation_ms, r.speedup, r.identical
                );
            }
            let path = out.unwrap_or_else(|| cfg.out_dir.join("parallel.csv"));
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            write_parallel_report(&rows, &path)?;
            if rows.iter().any(|r| !r.identical) {
                anyhow::bail!("results differ across thread counts");
            }
        }
    }
    Ok(())
}

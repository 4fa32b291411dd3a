//! The `run`, `compare` and `plot` subcommands as library functions.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fedclus_core::{run_experiment, RunReport};
use rayon::prelude::*;

use crate::config::{parse_config, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::plot::write_plots;
use crate::report::ExperimentReport;

pub const THREADS_ENV: &str = "FEDCLUS_THREADS";

/// Worker count from `FEDCLUS_THREADS`; unset or 0 means one per core.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| CliError::Schema {
            key: THREADS_ENV.to_string(),
            reason: format!("expected a non-negative integer, got `{v}`"),
        }),
    }
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set.
pub fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return t;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Runs every (algorithm, seed) cell on a pool of `threads` workers.
/// Results come back in config order whatever the pool size.
pub fn run_cells(config: &ExperimentConfig, threads: usize) -> Result<Vec<RunReport>> {
    let cells: Vec<_> = config
        .algorithms
        .iter()
        .flat_map(|&a| config.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::ThreadPool(e.to_string()))?;
    let results: Vec<_> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(algorithm, seed)| {
                run_experiment(&config.run_config(algorithm, seed)).map_err(|source| CliError::Run {
                    algorithm: algorithm.name(),
                    seed,
                    source,
                })
            })
            .collect()
    });
    results.into_iter().collect()
}

pub fn build_report(config: ExperimentConfig, threads: usize) -> Result<ExperimentReport> {
    let runs = run_cells(&config, threads)?;
    Ok(ExperimentReport::new(timestamp(), config, runs))
}

fn load(config_path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    parse_config(config_path, overrides)
}

fn out_dir(config: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf).unwrap_or_else(|| config.output_dir.clone())
}

/// Writes `report.json`, `rounds.csv` and `ledger.csv`.
pub fn cmd_run(config_path: &Path, out: Option<&Path>, overrides: &[String]) -> Result<PathBuf> {
    let config = load(config_path, overrides)?;
    let threads = threads_from_env()?;
    let dir = out_dir(&config, out);
    let report = build_report(config, threads)?;
    report.write_all(&dir, false)?;
    Ok(dir)
}

/// As `run`, plus `compare.csv`; needs at least two algorithms.
pub fn cmd_compare(config_path: &Path, out: Option<&Path>, overrides: &[String]) -> Result<PathBuf> {
    let config = load(config_path, overrides)?;
    if config.algorithms.len() < 2 {
        return Err(CliError::Usage(format!(
            "compare needs at least two algorithms, config lists {}",
            config.algorithms.len()
        )));
    }
    let threads = threads_from_env()?;
    let dir = out_dir(&config, out);
    let report = build_report(config, threads)?;
    report.write_all(&dir, true)?;
    Ok(dir)
}

pub fn cmd_plot(report_path: &Path, out: &Path) -> Result<Vec<String>> {
    let report = ExperimentReport::load(report_path)?;
    write_plots(&report, out)
}

//! Experiment report: every (algorithm, seed) run plus five-number
//! summaries of the final-round metrics, and the CSV views derived from it.

use std::fmt::Write as _;
use std::path::Path;

use fedclus_core::{Algorithm, RunReport};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Final-round metrics summarised across seeds, in output order.
pub const METRICS: [&str; 7] = ["loss", "accuracy", "precision", "recall", "f1", "auc", "ks"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data (R type 7).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Summary {
    /// `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Summary {
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            max: v[v.len() - 1],
        })
    }
}

pub fn final_metric(run: &RunReport, metric: &str) -> f64 {
    let last = run.final_round();
    match metric {
        "loss" => last.train_loss,
        "accuracy" => last.accuracy,
        "precision" => last.precision,
        "recall" => last.recall,
        "f1" => last.f1,
        "auc" => run.auc,
        "ks" => run.ks,
        other => panic!("unknown metric {other}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub metrics: Vec<MetricSummary>,
}

/// Paired per-seed differences `algorithm - baseline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub algorithm: Algorithm,
    pub baseline: Algorithm,
    pub metrics: Vec<MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub generated_at_unix: u64,
    pub config: ExperimentConfig,
    /// Algorithm-major in config order, then seeds in config order.
    pub runs: Vec<RunReport>,
    pub summaries: Vec<AlgorithmSummary>,
    pub deltas: Vec<DeltaSummary>,
}

/// Comparison pairs: each clustered algorithm against its unclustered
/// counterpart when both are present, any other non-first algorithm
/// against the first.
pub fn delta_pairs(algorithms: &[Algorithm]) -> Vec<(Algorithm, Algorithm)> {
    let mut pairs = Vec::new();
    for (i, &a) in algorithms.iter().enumerate() {
        let base = a.baseline();
        if base != a && algorithms.contains(&base) {
            pairs.push((a, base));
        } else if i > 0 {
            pairs.push((a, algorithms[0]));
        }
    }
    pairs
}

impl ExperimentReport {
    pub fn new(generated_at_unix: u64, config: ExperimentConfig, runs: Vec<RunReport>) -> Self {
        let summaries = config
            .algorithms
            .iter()
            .map(|&algorithm| {
                let cells: Vec<&RunReport> = runs.iter().filter(|r| r.algorithm == algorithm).collect();
                let metrics = METRICS
                    .iter()
                    .filter_map(|&m| {
                        let values: Vec<f64> = cells.iter().map(|r| final_metric(r, m)).collect();
                        Summary::of(&values).map(|summary| MetricSummary {
                            metric: m.to_string(),
                            summary,
                        })
                    })
                    .collect();
                AlgorithmSummary { algorithm, metrics }
            })
            .collect();

        let deltas = delta_pairs(&config.algorithms)
            .into_iter()
            .map(|(algorithm, baseline)| {
                let metrics = METRICS
                    .iter()
                    .filter_map(|&m| {
                        let diffs: Vec<f64> = config
                            .seeds
                            .iter()
                            .filter_map(|&s| {
                                let a = runs.iter().find(|r| r.algorithm == algorithm && r.seed == s)?;
                                let b = runs.iter().find(|r| r.algorithm == baseline && r.seed == s)?;
                                Some(final_metric(a, m) - final_metric(b, m))
                            })
                            .collect();
                        Summary::of(&diffs).map(|summary| MetricSummary {
                            metric: m.to_string(),
                            summary,
                        })
                    })
                    .collect();
                DeltaSummary {
                    algorithm,
                    baseline,
                    metrics,
                }
            })
            .collect();

        ExperimentReport {
            generated_at_unix,
            config,
            runs,
            summaries,
            deltas,
        }
    }

    pub fn run(&self, algorithm: Algorithm, seed: u64) -> Option<&RunReport> {
        self.runs.iter().find(|r| r.algorithm == algorithm && r.seed == seed)
    }

    pub fn summary(&self, algorithm: Algorithm, metric: &str) -> Option<Summary> {
        self.summaries
            .iter()
            .find(|s| s.algorithm == algorithm)?
            .metrics
            .iter()
            .find(|m| m.metric == metric)
            .map(|m| m.summary)
    }

    pub fn delta(&self, algorithm: Algorithm, metric: &str) -> Option<Summary> {
        self.deltas
            .iter()
            .find(|d| d.algorithm == algorithm)?
            .metrics
            .iter()
            .find(|m| m.metric == metric)
            .map(|m| m.summary)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| format!("at `{}`: {}", e.path(), e.inner()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ReportParse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|reason| CliError::ReportParse {
            path: path.to_path_buf(),
            reason,
        })
    }

    /// `round,seed,algorithm,loss,accuracy,precision,recall,f1`
    pub fn rounds_csv(&self) -> String {
        let mut out = String::from("round,seed,algorithm,loss,accuracy,precision,recall,f1\n");
        for run in &self.runs {
            for r in &run.rounds {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.round,
                    run.seed,
                    run.algorithm.name(),
                    r.train_loss,
                    r.accuracy,
                    r.precision,
                    r.recall,
                    r.f1
                );
            }
        }
        out
    }

    /// `round,seed,algorithm,link,direction,messages,bytes`
    pub fn ledger_csv(&self) -> String {
        let mut out = String::from("round,seed,algorithm,link,direction,messages,bytes\n");
        for run in &self.runs {
            for r in &run.rounds {
                for t in &r.traffic {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        r.round,
                        run.seed,
                        run.algorithm.name(),
                        t.link.name(),
                        t.direction.name(),
                        t.messages,
                        t.bytes
                    );
                }
            }
        }
        out
    }

    /// `section,algorithm,metric,min,q1,median,mean,max`; the `summary`
    /// section has one row per algorithm and metric, the `delta` section
    /// one per comparison pair and metric, labelled `a-b`.
    pub fn compare_csv(&self) -> String {
        let mut out = String::from("section,algorithm,metric,min,q1,median,mean,max\n");
        let mut row = |section: &str, label: &str, m: &MetricSummary| {
            let s = m.summary;
            let _ = writeln!(
                out,
                "{section},{label},{},{},{},{},{},{}",
                m.metric, s.min, s.q1, s.median, s.mean, s.max
            );
        };
        for a in &self.summaries {
            for m in &a.metrics {
                row("summary", a.algorithm.name(), m);
            }
        }
        for d in &self.deltas {
            let label = format!("{}-{}", d.algorithm.name(), d.baseline.name());
            for m in &d.metrics {
                row("delta", &label, m);
            }
        }
        out
    }

    /// Writes `report.json`, `rounds.csv`, `ledger.csv` and, when
    /// `with_compare`, `compare.csv` into `dir`.
    pub fn write_all(&self, dir: &Path, with_compare: bool) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut files = vec![
            ("report.json", self.to_json()),
            ("rounds.csv", self.rounds_csv()),
            ("ledger.csv", self.ledger_csv()),
        ];
        if with_compare {
            files.push(("compare.csv", self.compare_csv()));
        }
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        }
        Ok(())
    }
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

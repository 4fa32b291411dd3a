//! Synthetic attack-detection data, label-skewed client partitioning,
//! feature standardization and CSV ingestion.
//!
//! Normal samples are Gaussian around per-feature base means; attacked
//! samples get a fixed mean shift on a seeded subset of features. Every
//! routine here is a pure function of its inputs and explicit seeds.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    /// 0 = normal, 1 = attack.
    pub label: u8,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: u8) -> Self {
        Sample { features, label }
    }

    pub fn is_attack(&self) -> bool {
        self.label == 1
    }
}

/// A non-empty list of samples sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    feature_dim: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyInput)?;
        let feature_dim = first.features.len();
        if feature_dim == 0 {
            return Err(Error::InvalidInput("samples have no features".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim,
                    found: s.features.len(),
                });
            }
            if s.label > 1 {
                return Err(Error::InvalidInput(format!(
                    "sample {i} has label {} outside {{0, 1}}",
                    s.label
                )));
            }
            if let Some(j) = s.features.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("sample {i} feature {j} is not finite")));
            }
        }
        Ok(Dataset { samples, feature_dim })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn attack_count(&self) -> usize {
        self.samples.iter().filter(|s| s.is_attack()).count()
    }

    pub fn attack_fraction(&self) -> f64 {
        self.attack_count() as f64 / self.len() as f64
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn refs(&self) -> Vec<&Sample> {
        self.samples.iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientShard {
    pub client_id: usize,
    pub data: Dataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub feature_dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub attack_ratio: f64,
    pub attack_shift: f64,
    pub attacked_feature_count: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            feature_dim: 13,
            n_train: 60_000,
            n_test: 10_000,
            attack_ratio: 0.2,
            attack_shift: 1.0,
            attacked_feature_count: 4,
            noise_std: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.feature_dim == 0 {
            return bad("feature_dim must be at least 1");
        }
        if self.n_train < 2 || self.n_test < 1 {
            return bad("n_train must be at least 2 and n_test at least 1");
        }
        if !(self.attack_ratio > 0.0 && self.attack_ratio < 1.0) {
            return bad("attack_ratio must lie in (0, 1)");
        }
        if !(self.attack_shift > 0.0 && self.attack_shift.is_finite()) {
            return bad("attack_shift must be positive");
        }
        if self.attacked_feature_count == 0 || self.attacked_feature_count > self.feature_dim {
            return bad("attacked_feature_count must lie in [1, feature_dim]");
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be positive");
        }
        Ok(())
    }
}

/// Generates the train and test splits described by `config`.
///
/// Both splits hold exactly `round(n * attack_ratio)` attacks. The base
/// means and the attacked feature subset are drawn once and shared by both
/// splits.
pub fn generate_synthetic(config: &SynthConfig) -> Result<(Dataset, Dataset)> {
    config.validate()?;
    let mut rng = seed::rng(config.seed);
    let dim = config.feature_dim;
    let base_means: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut order: Vec<usize> = (0..dim).collect();
    order.shuffle(&mut rng);
    let mut attacked = order[..config.attacked_feature_count].to_vec();
    attacked.sort_unstable();

    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::InvalidConfig(format!("noise_std: {e}")))?;

    let mut draw = |n: usize| -> Result<Dataset> {
        let n_attack = (n as f64 * config.attack_ratio).round() as usize;
        let mut labels = vec![0u8; n];
        labels[..n_attack].fill(1);
        labels.shuffle(&mut rng);
        let samples = labels
            .into_iter()
            .map(|label| {
                let mut features: Vec<f64> = base_means.iter().map(|m| m + noise.sample(&mut rng)).collect();
                if label == 1 {
                    for &j in &attacked {
                        features[j] += config.attack_shift;
                    }
                }
                Sample { features, label }
            })
            .collect();
        Dataset::new(samples)
    };

    let train = draw(config.n_train)?;
    let test = draw(config.n_test)?;
    Ok((train, test))
}

/// Splits `train` across `k` clients with controllable label skew.
///
/// Shard sizes differ by at most one sample. Each client gets a target
/// attack fraction `(1 - skew) * r + skew * r * w_k`, where `r` is the
/// global attack fraction and the `w_k` are seeded exponential draws
/// normalised to mean one. Integer attack counts are then reconciled so
/// that the shards use every sample exactly once.
pub fn partition_label_skew(train: &Dataset, k: usize, skew: f64, seed: u64) -> Result<Vec<ClientShard>> {
    if k == 0 {
        return Err(Error::InvalidConfig("client count k must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&skew) {
        return Err(Error::InvalidConfig("skew must lie in [0, 1]".into()));
    }
    let n = train.len();
    if n < k {
        return Err(Error::InsufficientSamples(format!(
            "{n} samples cannot fill {k} non-empty shards"
        )));
    }

    let mut attacks: Vec<usize> = Vec::new();
    let mut normals: Vec<usize> = Vec::new();
    for (i, s) in train.samples().iter().enumerate() {
        if s.is_attack() {
            attacks.push(i);
        } else {
            normals.push(i);
        }
    }
    if skew < 1.0 && (attacks.len() < k || normals.len() < k) {
        return Err(Error::InsufficientSamples(format!(
            "need at least {k} samples of each class, have {} attacks and {} normals",
            attacks.len(),
            normals.len()
        )));
    }

    let mut rng = seed::rng(seed);
    attacks.shuffle(&mut rng);
    normals.shuffle(&mut rng);

    let sizes: Vec<usize> = (0..k).map(|c| n / k + usize::from(c < n % k)).collect();
    let ratio = attacks.len() as f64 / n as f64;

    let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut rng)).collect();
    let mean_draw = draws.iter().sum::<f64>() / k as f64;
    let targets: Vec<f64> = sizes
        .iter()
        .zip(&draws)
        .map(|(&size, &d)| {
            let w = if mean_draw > 0.0 { d / mean_draw } else { 1.0 };
            let p = ((1.0 - skew) * ratio + skew * ratio * w).clamp(0.0, 1.0);
            p * size as f64
        })
        .collect();

    let counts = reconcile_counts(&targets, &sizes, attacks.len());

    let mut attack_iter = attacks.into_iter();
    let mut normal_iter = normals.into_iter();
    let mut shards = Vec::with_capacity(k);
    for (client_id, (&size, &a)) in sizes.iter().zip(&counts).enumerate() {
        let mut idx: Vec<usize> = attack_iter.by_ref().take(a).collect();
        idx.extend(normal_iter.by_ref().take(size - a));
        if idx.len() != size {
            return Err(Error::InsufficientSamples(format!(
                "client {client_id} could not be filled to {size} samples"
            )));
        }
        idx.shuffle(&mut rng);
        let samples = idx.into_iter().map(|i| train.samples()[i].clone()).collect();
        shards.push(ClientShard {
            client_id,
            data: Dataset::new(samples)?,
        });
    }
    Ok(shards)
}

/// Rounds real-valued per-client attack targets to integers that respect
/// `0 <= a_k <= size_k` and sum to `total`.
fn reconcile_counts(targets: &[f64], sizes: &[usize], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = targets
        .iter()
        .zip(sizes)
        .map(|(&t, &s)| (t.floor() as usize).min(s))
        .collect();
    let mut sum: usize = counts.iter().sum();
    while sum < total {
        // most under-served client with spare capacity; ties to lowest index
        let pick = (0..counts.len())
            .filter(|&c| counts[c] < sizes[c])
            .max_by(|&a, &b| {
                let ra = targets[a] - counts[a] as f64;
                let rb = targets[b] - counts[b] as f64;
                ra.total_cmp(&rb).then(b.cmp(&a))
            })
            .expect("total never exceeds the summed capacity");
        counts[pick] += 1;
        sum += 1;
    }
    while sum > total {
        let pick = (0..counts.len())
            .filter(|&c| counts[c] > 0)
            .min_by(|&a, &b| {
                let ra = targets[a] - counts[a] as f64;
                let rb = targets[b] - counts[b] as f64;
                ra.total_cmp(&rb).then(a.cmp(&b))
            })
            .expect("positive sum has a positive entry");
        counts[pick] -= 1;
        sum -= 1;
    }
    counts
}

/// Per-feature mean and sample variance of a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl ScalerStats {
    pub fn fit(data: &Dataset) -> Result<Self> {
        let n = data.len();
        if n < 2 {
            return Err(Error::InsufficientSamples(
                "sample variance needs at least two samples".into(),
            ));
        }
        let dim = data.feature_dim();
        let mut mean = vec![0.0; dim];
        for s in data.samples() {
            for (m, x) in mean.iter_mut().zip(&s.features) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut variance = vec![0.0; dim];
        for s in data.samples() {
            for ((v, x), m) in variance.iter_mut().zip(&s.features).zip(&mean) {
                let d = x - m;
                *v += d * d;
            }
        }
        variance.iter_mut().for_each(|v| *v /= (n - 1) as f64);
        if let Some(j) = variance.iter().position(|&v| v <= 0.0) {
            return Err(Error::ConstantFeature(j));
        }
        Ok(ScalerStats { mean, variance })
    }

    /// Maps every sample to `(x - mean) / sqrt(variance)`.
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if data.feature_dim() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: data.feature_dim(),
            });
        }
        let scale: Vec<f64> = self.variance.iter().map(|v| v.sqrt()).collect();
        let samples = data
            .samples()
            .iter()
            .map(|s| Sample {
                features: s
                    .features
                    .iter()
                    .zip(&self.mean)
                    .zip(&scale)
                    .map(|((x, m), sd)| (x - m) / sd)
                    .collect(),
                label: s.label,
            })
            .collect();
        Dataset::new(samples)
    }
}

/// Standardizes both splits with statistics fitted on `train` alone.
pub fn standardize(train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset, ScalerStats)> {
    let stats = ScalerStats::fit(train)?;
    Ok((stats.apply(train)?, stats.apply(test)?, stats))
}

/// Seeded shuffle followed by a split with `round(n * test_fraction)` test
/// samples (at least one on each side).
pub fn split_train_test(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InsufficientSamples(
            "splitting needs at least two samples".into(),
        ));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig("test_fraction must lie in (0, 1)".into()));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let pick = |ids: &[usize]| ids.iter().map(|&i| data.samples()[i].clone()).collect();
    let train = Dataset::new(pick(&idx[..n - n_test]))?;
    let test = Dataset::new(pick(&idx[n - n_test..]))?;
    Ok((train, test))
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file)
}

/// Parses the `f1,...,fF,label` CSV layout. The label column is located
/// by name; every other column is a feature.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let csv_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        Error::Parse {
            line,
            column: 0,
            reason: e.to_string(),
        }
    };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let label_col = headers
        .iter()
        .position(|h| h.trim() == "label")
        .ok_or(Error::MissingLabelColumn)?;

    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut features = Vec::with_capacity(record.len().saturating_sub(1));
        let mut label = 0u8;
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let parse_fail = |reason: String| Error::Parse {
                line,
                column: col + 1,
                reason,
            };
            if col == label_col {
                label = match cell {
                    "0" => 0,
                    "1" => 1,
                    other => return Err(parse_fail(format!("label `{other}` is not 0 or 1"))),
                };
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_fail(format!("`{cell}` is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_fail(format!("`{cell}` is not finite")));
                }
                features.push(v);
            }
        }
        samples.push(Sample { features, label });
    }
    Dataset::new(samples)
}

pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidInput(format!("CSV write failed: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=data.feature_dim()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(io)?;
    for s in data.samples() {
        let mut row: Vec<String> = s.features.iter().map(|v| v.to_string()).collect();
        row.push(s.label.to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("CSV write failed: {e}")))?;
    Ok(())
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(data, std::io::BufWriter::new(file))
}

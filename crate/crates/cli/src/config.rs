//! Experiment configuration: a single JSON document with every field
//! optional except `algorithms` and `seeds`. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fedclus_core::federation::{AssignmentPolicy, DataSource, RunConfig, StandardizeScope, Tiers};
use fedclus_core::{seed, Algorithm, Architecture, ClusterParams, SynthConfig, TrainSpec, WeightMode};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub partition: PartitionSection,
    #[serde(default)]
    pub topology: TopologySection,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub model: Architecture,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub cluster: ClusterParams,
    #[serde(default)]
    pub weight_mode: WeightMode,
    #[serde(default = "default_bandwidths")]
    pub bandwidth_profiles: BTreeMap<String, f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    #[serde(default = "default_participation")]
    pub participation: f64,
    #[serde(default)]
    pub recluster_each_round: bool,
    #[serde(default)]
    pub standardize_scope: StandardizeScope,
}

fn default_rounds() -> usize {
    400
}

fn default_bandwidths() -> BTreeMap<String, f64> {
    BTreeMap::from([("wifi".to_string(), 10e6), ("5g".to_string(), 100e6)])
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_participation() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSection {
    Synthetic(SynthSection),
    Csv(CsvSection),
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection::Synthetic(SynthSection::default())
    }
}

/// Synthetic generator settings; `seed` defaults to one derived from each
/// experiment seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub feature_dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub attack_ratio: f64,
    pub attack_shift: f64,
    pub attacked_feature_count: usize,
    pub noise_std: f64,
    pub seed: Option<u64>,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        SynthSection {
            feature_dim: d.feature_dim,
            n_train: d.n_train,
            n_test: d.n_test,
            attack_ratio: d.attack_ratio,
            attack_shift: d.attack_shift,
            attacked_feature_count: d.attacked_feature_count,
            noise_std: d.noise_std,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSection {
    pub path: PathBuf,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub split_seed: Option<u64>,
}

fn default_test_fraction() -> f64 {
    1.0 / 7.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionStrategy {
    #[default]
    LabelSkew,
    /// Every client holds a full copy of the training split.
    Replicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSection {
    pub k: usize,
    pub skew: f64,
    pub seed: Option<u64>,
    pub strategy: PartitionStrategy,
}

impl Default for PartitionSection {
    fn default() -> Self {
        PartitionSection {
            k: 100,
            skew: 0.8,
            seed: None,
            strategy: PartitionStrategy::LabelSkew,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySection {
    /// Forces every listed algorithm onto one topology when set.
    pub tiers: Option<Tiers>,
    pub q: Option<usize>,
    pub assignment: AssignmentPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainSpec::default();
        TrainSection {
            epochs: d.epochs,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
        }
    }
}

fn schema(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Schema {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Sets `value` at a dotted `path` inside a JSON object, creating
/// intermediate objects as needed.
fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(schema(path, "empty path segment in override"));
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| schema(&parts[..i].join("."), "override descends into a non-object"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Applies `key=value` overrides. Values are read as JSON when they parse,
/// as plain strings otherwise.
pub fn apply_overrides(root: &mut Value, overrides: &[String]) -> Result<(), CliError> {
    for ov in overrides {
        let (key, raw) = ov
            .split_once('=')
            .ok_or_else(|| schema(ov, "override must look like key=value"))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_path(root, key.trim(), value)?;
    }
    Ok(())
}

pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut root: Value = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
    if !root.is_object() {
        return Err(schema("$", "config must be a JSON object"));
    }
    apply_overrides(&mut root, overrides)?;
    let config: ExperimentConfig = serde_path_to_error::deserialize(root).map_err(|e| {
        let key = e.path().to_string();
        schema(&key, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: impl AsRef<Path>, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| schema("$", format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, overrides)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.algorithms.is_empty() {
            return Err(schema("algorithms", "list at least one algorithm"));
        }
        if self.seeds.is_empty() {
            return Err(schema("seeds", "list at least one seed"));
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(schema(
                    &format!("algorithms[{i}]"),
                    format!("{} listed twice", a.name()),
                ));
            }
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return Err(schema(&format!("seeds[{i}]"), format!("seed {s} listed twice")));
            }
        }
        if let Some(tiers) = self.topology.tiers {
            if tiers == Tiers::ThreeTier && self.topology.q.is_none() {
                return Err(schema("topology.q", "three_tier topology needs a sub-server count"));
            }
            if let Some(a) = self.algorithms.iter().find(|a| a.tiers() != tiers) {
                return Err(schema(
                    "topology.tiers",
                    format!("{} does not run on a {} topology", a.name(), tiers.name()),
                ));
            }
        }
        if self.algorithms.iter().any(|a| a.tiers() == Tiers::ThreeTier) && self.topology.q.is_none() {
            return Err(schema("topology.q", "three-tier algorithms need a sub-server count"));
        }
        if let Some(q) = self.topology.q {
            if q == 0 || q > self.partition.k {
                return Err(schema("topology.q", format!("must lie in [1, k={}]", self.partition.k)));
            }
        }
        if self.partition.k == 0 {
            return Err(schema("partition.k", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.partition.skew) {
            return Err(schema("partition.skew", "must lie in [0, 1]"));
        }
        let c = &self.cluster;
        if !(c.theta > 0.0 && c.theta < 1.0) {
            return Err(schema("cluster.theta", "must lie in (0, 1)"));
        }
        if c.min_samples_to_cluster < 2 {
            return Err(schema("cluster.min_samples_to_cluster", "must be at least 2"));
        }
        if c.max_centers_divisor < 1 {
            return Err(schema("cluster.max_centers_divisor", "must be at least 1"));
        }
        if !(c.gate_factor > 0.0 && c.gate_factor.is_finite()) {
            return Err(schema("cluster.gate_factor", "must be positive"));
        }
        let t = &self.train;
        if t.epochs == 0 {
            return Err(schema("train.epochs", "must be at least 1"));
        }
        if t.batch_size == 0 {
            return Err(schema("train.batch_size", "must be at least 1"));
        }
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return Err(schema("train.learning_rate", "must be positive"));
        }
        if let Architecture::Mlp { hidden: 0 } = self.model {
            return Err(schema("model.mlp.hidden", "must be at least 1"));
        }
        if !(self.participation > 0.0 && self.participation <= 1.0) {
            return Err(schema("participation", "must lie in (0, 1]"));
        }
        for (name, bw) in &self.bandwidth_profiles {
            if !(*bw > 0.0 && bw.is_finite()) {
                return Err(schema(&format!("bandwidth_profiles.{name}"), "must be positive"));
            }
        }
        match &self.data {
            DataSection::Synthetic(s) => {
                self.synth_config(s, 0)
                    .validate()
                    .map_err(|e| schema("data.synthetic", e.to_string()))?;
                if self.partition.strategy == PartitionStrategy::LabelSkew && s.n_train < self.partition.k {
                    return Err(schema("partition.k", "more clients than training samples"));
                }
            }
            DataSection::Csv(c) => {
                if !(c.test_fraction > 0.0 && c.test_fraction < 1.0) {
                    return Err(schema("data.csv.test_fraction", "must lie in (0, 1)"));
                }
            }
        }
        Ok(())
    }

    fn synth_config(&self, s: &SynthSection, run_seed: u64) -> SynthConfig {
        SynthConfig {
            feature_dim: s.feature_dim,
            n_train: s.n_train,
            n_test: s.n_test,
            attack_ratio: s.attack_ratio,
            attack_shift: s.attack_shift,
            attacked_feature_count: s.attacked_feature_count,
            noise_std: s.noise_std,
            seed: s.seed.unwrap_or_else(|| seed::derive(run_seed, seed::tags::DATA)),
        }
    }

    /// The core run configuration for one (algorithm, seed) cell. Data and
    /// partition seeds derive from the run seed unless pinned, so every
    /// algorithm sees identical data under a given seed.
    pub fn run_config(&self, algorithm: Algorithm, run_seed: u64) -> RunConfig {
        let data = match &self.data {
            DataSection::Synthetic(s) => DataSource::Synthetic(self.synth_config(s, run_seed)),
            DataSection::Csv(c) => DataSource::Csv {
                path: c.path.clone(),
                test_fraction: c.test_fraction,
                split_seed: c
                    .split_seed
                    .unwrap_or_else(|| seed::derive(run_seed, seed::tags::SPLIT)),
            },
        };
        RunConfig {
            data,
            k: self.partition.k,
            skew: self.partition.skew,
            partition_seed: self
                .partition
                .seed
                .unwrap_or_else(|| seed::derive(run_seed, seed::tags::PARTITION)),
            algorithm,
            q: self.topology.q,
            assignment: self.topology.assignment,
            architecture: self.model,
            train: TrainSpec {
                epochs: self.train.epochs,
                batch_size: self.train.batch_size,
                learning_rate: self.train.learning_rate,
                seed: run_seed,
            },
            rounds: self.rounds,
            cluster: self.cluster,
            weight_mode: self.weight_mode,
            participation: self.participation,
            recluster_each_round: self.recluster_each_round,
            standardize_scope: self.standardize_scope,
            replicate_shards: self.partition.strategy == PartitionStrategy::Replicate,
            bandwidth_profiles: self.bandwidth_profiles.clone(),
            seed: run_seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        parse_config_str(text, &[])
    }

    fn key_of(err: CliError) -> String {
        match err {
            CliError::Schema { key, .. } => key,
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse(r#"{"algorithms": ["fedavg"], "seeds": [1]}"#).unwrap();
        assert_eq!(c.partition.k, 100);
        assert_eq!(c.topology.q, None);
        assert_eq!(c.train.learning_rate, 0.01);
        assert_eq!(c.train.epochs, 10);
        assert_eq!(c.rounds, 400);
        assert_eq!(c.weight_mode, WeightMode::Inverse);
        assert_eq!(c.cluster, ClusterParams::default());
    }

    #[test]
    fn theta_out_of_range() {
        let err = parse(r#"{"algorithms": ["fedavg"], "seeds": [1], "cluster": {"theta": 1.5}}"#).unwrap_err();
        assert_eq!(key_of(err), "cluster.theta");
    }

    #[test]
    fn three_tier_needs_q() {
        let err =
            parse(r#"{"algorithms": ["fedavg_plus"], "seeds": [1], "topology": {"tiers": "three_tier"}}"#).unwrap_err();
        assert_eq!(key_of(err), "topology.q");
        let err = parse(r#"{"algorithms": ["fedclusavg_plus"], "seeds": [1]}"#).unwrap_err();
        assert_eq!(key_of(err), "topology.q");
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let err = parse(r#"{"algorithms": ["fedavg"], "seeds": [1], "cluster": {"thetta": 0.4}}"#).unwrap_err();
        assert_eq!(key_of(err), "cluster.thetta");
        let err = parse(r#"{"algorithms": ["fedavg"], "seeds": [1], "colour": 1}"#).unwrap_err();
        assert_eq!(key_of(err), "colour");
        let err = parse(r#"{"algorithms": ["fedsgd"], "seeds": [1]}"#).unwrap_err();
        assert_eq!(key_of(err), "algorithms[0]");
    }

    #[test]
    fn required_lists() {
        assert_eq!(
            key_of(parse(r#"{"algorithms": [], "seeds": [1]}"#).unwrap_err()),
            "algorithms"
        );
        assert_eq!(
            key_of(parse(r#"{"algorithms": ["fedavg"], "seeds": []}"#).unwrap_err()),
            "seeds"
        );
    }

    #[test]
    fn overrides_apply_before_validation() {
        let base = r#"{"algorithms": ["fedavg"], "seeds": [1]}"#;
        let c = parse_config_str(base, &["rounds=5".into(), "partition.k=20".into()]).unwrap();
        assert_eq!((c.rounds, c.partition.k), (5, 20));
        let c = parse_config_str(base, &["weight_mode=literal".into()]).unwrap();
        assert_eq!(c.weight_mode, WeightMode::Literal);
        let err = parse_config_str(base, &["cluster.theta=0".into()]).unwrap_err();
        assert_eq!(key_of(err), "cluster.theta");
    }

    #[test]
    fn mlp_model_section() {
        let c = parse(r#"{"algorithms": ["fedavg"], "seeds": [1], "model": {"mlp": {"hidden": 8}}}"#).unwrap();
        assert_eq!(c.model, Architecture::Mlp { hidden: 8 });
        let c = parse(r#"{"algorithms": ["fedavg"], "seeds": [1], "model": "logistic"}"#).unwrap();
        assert_eq!(c.model, Architecture::Logistic);
    }

    #[test]
    fn run_config_derives_shared_seeds() {
        let c = parse(r#"{"algorithms": ["fedavg", "fedclusavg"], "seeds": [3]}"#).unwrap();
        let a = c.run_config(Algorithm::Fedavg, 3);
        let b = c.run_config(Algorithm::Fedclusavg, 3);
        assert_eq!(a.data, b.data);
        assert_eq!(a.partition_seed, b.partition_seed);
        assert_ne!(a.data, c.run_config(Algorithm::Fedavg, 4).data);
    }
}

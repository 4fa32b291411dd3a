use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::comm::{estimate_round_latency, uniform_bandwidth, LatencyEstimate, LedgerTotals, TrafficRow};
use super::round::{Algorithm, FedState, Federation};
use super::topology::{AssignmentPolicy, Tiers, Topology};
use super::CommLedger;
use crate::aggregation::WeightMode;
use crate::clustering::ClusterParams;
use crate::datagen::{
    generate_synthetic, load_csv, partition_label_skew, split_train_test, standardize, ClientShard, Dataset,
    ScalerStats, SynthConfig,
};
use crate::error::{Error, Result};
use crate::metrics::{roc_curve, RocCurve};
use crate::model::{Architecture, Detector, TrainSpec};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SynthConfig),
    /// One CSV split into train/test with a seeded shuffle.
    Csv {
        path: PathBuf,
        test_fraction: f64,
        split_seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeScope {
    /// Train-split statistics applied to every shard and the test set.
    #[default]
    Global,
    /// Each shard scaled by its own statistics; test set by the global ones.
    PerClient,
}

/// Everything needed for one (algorithm, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: DataSource,
    pub k: usize,
    pub skew: f64,
    pub partition_seed: u64,
    pub algorithm: Algorithm,
    /// Sub-server count; required by the three-tier algorithms.
    pub q: Option<usize>,
    pub assignment: AssignmentPolicy,
    pub architecture: Architecture,
    pub train: TrainSpec,
    pub rounds: usize,
    pub cluster: ClusterParams,
    pub weight_mode: WeightMode,
    pub participation: f64,
    pub recluster_each_round: bool,
    pub standardize_scope: StandardizeScope,
    /// Give every client a full copy of the training split instead of a
    /// label-skewed share.
    pub replicate_shards: bool,
    /// Profile name -> bits per second, applied to every link class.
    pub bandwidth_profiles: BTreeMap<String, f64>,
    /// Root seed for training order, participation and MLP init.
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let DataSource::Synthetic(s) = &self.data {
            s.validate()?;
        }
        self.train.validate()?;
        self.cluster.validate()?;
        if !(0.0..=1.0).contains(&self.skew) {
            return Err(Error::InvalidConfig("skew must lie in [0, 1]".into()));
        }
        if !(self.participation > 0.0 && self.participation <= 1.0) {
            return Err(Error::InvalidConfig("participation must lie in (0, 1]".into()));
        }
        for (name, bw) in &self.bandwidth_profiles {
            if !(*bw > 0.0 && bw.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "bandwidth profile `{name}` must be positive"
                )));
            }
        }
        self.topology().map(|_| ())
    }

    pub fn topology(&self) -> Result<Topology> {
        match self.algorithm.tiers() {
            Tiers::TwoTier => Topology::two_tier(self.k),
            Tiers::ThreeTier => {
                let q = self.q.ok_or_else(|| {
                    Error::InvalidConfig(format!("{} needs a sub-server count q", self.algorithm.name()))
                })?;
                Topology::three_tier(self.k, q, self.assignment, self.seed)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub train_loss: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub traffic: Vec<TrafficRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub weight_mode: WeightMode,
    /// Group count per client; all ones for unclustered algorithms.
    pub client_groups: Vec<usize>,
    /// Round 0 holds the initial parameters.
    pub rounds: Vec<RoundRecord>,
    pub final_roc: RocCurve,
    pub auc: f64,
    pub ks: f64,
    pub ledger: LedgerTotals,
    /// Modeled per-round latency for each bandwidth profile.
    pub latency: BTreeMap<String, LatencyEstimate>,
}

impl RunReport {
    pub fn final_round(&self) -> &RoundRecord {
        self.rounds.last().expect("round 0 is always recorded")
    }
}

fn partition(train: &Dataset, config: &RunConfig) -> Result<Vec<ClientShard>> {
    if config.replicate_shards {
        if config.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        return Ok((0..config.k)
            .map(|client_id| ClientShard {
                client_id,
                data: train.clone(),
            })
            .collect());
    }
    partition_label_skew(train, config.k, config.skew, config.partition_seed)
}

fn load_data(config: &RunConfig) -> Result<(Dataset, Dataset)> {
    match &config.data {
        DataSource::Synthetic(s) => generate_synthetic(s),
        DataSource::Csv {
            path,
            test_fraction,
            split_seed,
        } => {
            let all = load_csv(path)?;
            split_train_test(&all, *test_fraction, *split_seed)
        }
    }
}

/// Builds data, partitions and clusters it, runs `rounds` federated rounds
/// and evaluates on the held-out test set after each one.
pub fn run_experiment(config: &RunConfig) -> Result<RunReport> {
    config.validate().map_err(|e| e.at_stage("config"))?;
    let topology = config.topology().map_err(|e| e.at_stage("config"))?;

    let (raw_train, raw_test) = load_data(config).map_err(|e| e.at_stage("data"))?;
    let detector = Detector::new(raw_train.feature_dim(), config.architecture)?;

    let (shards, test) = match config.standardize_scope {
        StandardizeScope::Global => {
            let (train, test, _) = standardize(&raw_train, &raw_test).map_err(|e| e.at_stage("standardize"))?;
            let shards = partition(&train, config).map_err(|e| e.at_stage("partition"))?;
            (shards, test)
        }
        StandardizeScope::PerClient => {
            let stats = ScalerStats::fit(&raw_train).map_err(|e| e.at_stage("standardize"))?;
            let test = stats.apply(&raw_test)?;
            let shards = partition(&raw_train, config)
                .map_err(|e| e.at_stage("partition"))?
                .into_iter()
                .map(|s| {
                    let local = ScalerStats::fit(&s.data)?;
                    Ok(ClientShard {
                        client_id: s.client_id,
                        data: local.apply(&s.data)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.at_stage("standardize"))?;
            (shards, test)
        }
    };

    let init = detector.init_params(seed::derive(config.seed, seed::tags::INIT));
    let clustered = config.algorithm.clustered();
    let mut state = FedState::new(shards, init, clustered.then_some(&config.cluster), config.seed)
        .map_err(|e| e.at_stage("clustering"))?;
    let client_groups = if clustered {
        state.cluster_cache.iter().map(|c| c.len()).collect()
    } else {
        vec![1; state.shards.len()]
    };

    let fed = Federation {
        detector,
        algorithm: config.algorithm,
        topology: topology.clone(),
        train: config.train,
        mode: config.weight_mode,
        cluster: config.cluster,
        participation: config.participation,
        recluster_each_round: config.recluster_each_round,
        test_set: test,
    };
    fed.check_topology().map_err(|e| e.at_stage("config"))?;

    let (loss0, m0) = fed
        .evaluate(&state.global_params, &state)
        .map_err(|e| e.at_stage("evaluate"))?;
    let mut rounds = vec![RoundRecord {
        round: 0,
        train_loss: loss0,
        accuracy: m0.accuracy,
        precision: m0.precision,
        recall: m0.recall,
        f1: m0.f1,
        traffic: Vec::new(),
    }];
    let mut ledger = CommLedger::default();
    for _ in 0..config.rounds {
        let (next, report) = fed.server_round(state).map_err(|e| e.at_stage("round"))?;
        state = next;
        rounds.push(RoundRecord {
            round: report.round,
            train_loss: report.train_loss,
            accuracy: report.test.accuracy,
            precision: report.test.precision,
            recall: report.test.recall,
            f1: report.test.f1,
            traffic: super::comm::traffic_summary(&report.messages),
        });
        ledger.push_round(report.messages);
    }

    let scores = fed
        .detector
        .scores(&state.global_params, fed.test_set.samples())
        .map_err(|e| e.at_stage("evaluate"))?;
    let final_roc = roc_curve(&scores, &fed.test_set.labels()).map_err(|e| e.at_stage("evaluate"))?;

    let mut latency = BTreeMap::new();
    if let Some(last) = ledger.rounds.last() {
        for (name, &bw) in &config.bandwidth_profiles {
            let est =
                estimate_round_latency(last, &uniform_bandwidth(bw), &topology).map_err(|e| e.at_stage("latency"))?;
            latency.insert(name.clone(), est);
        }
    }

    Ok(RunReport {
        algorithm: config.algorithm,
        seed: config.seed,
        weight_mode: config.weight_mode,
        client_groups,
        rounds,
        auc: final_roc.auc(),
        ks: final_roc.ks(),
        final_roc,
        ledger: ledger.totals(),
        latency,
    })
}

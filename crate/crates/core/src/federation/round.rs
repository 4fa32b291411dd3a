use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::comm::{Message, Node};
use super::topology::{Tiers, Topology};
use crate::aggregation::{aggregate, aggregate_plain, WeightMode, WeightedEntry};
use crate::clustering::{cluster_client, ClusterParams, ClusterSet};
use crate::datagen::{ClientShard, Dataset, Sample};
use crate::error::{Error, Result};
use crate::metrics::{classification_metrics, confusion_matrix, ClassificationMetrics, DEFAULT_THRESHOLD};
use crate::model::{Detector, ModelParams, TrainSpec};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Fedavg,
    FedavgPlus,
    Fedclusavg,
    FedclusavgPlus,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Fedavg,
        Algorithm::FedavgPlus,
        Algorithm::Fedclusavg,
        Algorithm::FedclusavgPlus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fedavg => "fedavg",
            Algorithm::FedavgPlus => "fedavg_plus",
            Algorithm::Fedclusavg => "fedclusavg",
            Algorithm::FedclusavgPlus => "fedclusavg_plus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn tiers(self) -> Tiers {
        match self {
            Algorithm::Fedavg | Algorithm::Fedclusavg => Tiers::TwoTier,
            Algorithm::FedavgPlus | Algorithm::FedclusavgPlus => Tiers::ThreeTier,
        }
    }

    /// Clients cluster their shards and every tier uses deviation weights.
    pub fn clustered(self) -> bool {
        matches!(self, Algorithm::Fedclusavg | Algorithm::FedclusavgPlus)
    }

    /// The unclustered algorithm on the same topology.
    pub fn baseline(self) -> Algorithm {
        match self {
            Algorithm::Fedclusavg => Algorithm::Fedavg,
            Algorithm::FedclusavgPlus => Algorithm::FedavgPlus,
            other => other,
        }
    }
}

/// Mutable federation state carried from round to round.
#[derive(Debug, Clone, PartialEq)]
pub struct FedState {
    pub round: usize,
    pub global_params: ModelParams,
    pub shards: Vec<ClientShard>,
    /// One clustering per client, in shard order. Empty for unclustered runs.
    pub cluster_cache: Vec<ClusterSet>,
    pub rng_seed: u64,
}

impl FedState {
    /// Builds the initial state; clusters every shard once when
    /// `cluster` is given.
    pub fn new(
        shards: Vec<ClientShard>,
        global_params: ModelParams,
        cluster: Option<&ClusterParams>,
        rng_seed: u64,
    ) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::InvalidConfig("federation needs at least one client".into()));
        }
        let cluster_cache = match cluster {
            Some(p) => {
                p.validate()?;
                shards
                    .par_iter()
                    .map(|s| cluster_client(s, p))
                    .collect::<Result<Vec<_>>>()?
            }
            None => Vec::new(),
        };
        Ok(FedState {
            round: 0,
            global_params,
            shards,
            cluster_cache,
            rng_seed,
        })
    }
}

/// One client's local work for a round.
///
/// Clustered: every group trains from `global` with the same `spec`, then
/// the group models are deviation-weighted by `mode`. Unclustered: one
/// training pass over the whole shard.
pub fn client_update(
    detector: &Detector,
    shard: &ClientShard,
    clusters: &ClusterSet,
    global: &ModelParams,
    spec: &TrainSpec,
    mode: WeightMode,
    use_clustering: bool,
) -> Result<WeightedEntry> {
    let samples = shard.data.samples();
    if !use_clustering {
        let refs: Vec<&Sample> = samples.iter().collect();
        let params = detector.local_train(global, &refs, spec)?;
        return Ok(WeightedEntry::new(params, samples.len()));
    }
    if clusters.source_size != samples.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            found: clusters.source_size,
        });
    }
    let entries = clusters
        .groups
        .iter()
        .map(|g| {
            let refs: Vec<&Sample> = g.members.iter().map(|&i| &samples[i]).collect();
            Ok(WeightedEntry::new(
                detector.local_train(global, &refs, spec)?,
                refs.len(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightedEntry::new(aggregate(&entries, mode)?, samples.len()))
}

/// Sub-server aggregation: deviation-weighted when `mode` is given, plain
/// size-weighted otherwise.
pub fn subserver_update(entries: &[WeightedEntry], mode: Option<WeightMode>) -> Result<WeightedEntry> {
    let params = match mode {
        Some(m) => aggregate(entries, m)?,
        None => aggregate_plain(entries)?,
    };
    Ok(WeightedEntry::new(params, entries.iter().map(|e| e.count).sum()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    /// Rounds completed, so the first training round reports 1.
    pub round: usize,
    pub train_loss: f64,
    pub test: ClassificationMetrics,
    pub messages: Vec<Message>,
}

/// Fixed inputs of a federated run.
#[derive(Debug, Clone)]
pub struct Federation {
    pub detector: Detector,
    pub algorithm: Algorithm,
    pub topology: Topology,
    pub train: TrainSpec,
    pub mode: WeightMode,
    pub cluster: ClusterParams,
    /// Fraction of clients drawn each round; 1.0 trains everyone.
    pub participation: f64,
    /// Recompute client clusterings every round instead of using the cache.
    pub recluster_each_round: bool,
    pub test_set: Dataset,
}

impl Federation {
    pub fn check_topology(&self) -> Result<()> {
        if self.algorithm.tiers() != self.topology.tiers {
            return Err(Error::TopologyMismatch {
                algorithm: self.algorithm.name(),
                tiers: self.topology.tiers.name(),
            });
        }
        self.topology.validate()
    }

    fn round_spec(&self, state: &FedState) -> TrainSpec {
        TrainSpec {
            seed: seed::derive(seed::derive(state.rng_seed, seed::tags::TRAIN), state.round as u64),
            ..self.train
        }
    }

    fn participants(&self, state: &FedState) -> Vec<usize> {
        let k = state.shards.len();
        if self.participation >= 1.0 {
            return (0..k).collect();
        }
        let m = ((self.participation * k as f64).round() as usize).clamp(1, k);
        let mut ids: Vec<usize> = (0..k).collect();
        let s = seed::derive(
            seed::derive(state.rng_seed, seed::tags::PARTICIPATION),
            state.round as u64,
        );
        ids.shuffle(&mut seed::rng(s));
        let mut picked = ids[..m].to_vec();
        picked.sort_unstable();
        picked
    }

    /// Mean training loss over every client sample plus test metrics at
    /// the default threshold.
    pub fn evaluate(&self, params: &ModelParams, state: &FedState) -> Result<(f64, ClassificationMetrics)> {
        let per_shard = state
            .shards
            .par_iter()
            .map(|s| {
                let refs: Vec<&Sample> = s.data.samples().iter().collect();
                Ok((self.detector.loss(params, &refs)? * refs.len() as f64, refs.len()))
            })
            .collect::<Result<Vec<_>>>()?;
        let (sum, n) = per_shard.iter().fold((0.0, 0usize), |(a, c), (l, m)| (a + l, c + m));
        let scores = self.detector.scores(params, self.test_set.samples())?;
        let cm = confusion_matrix(&scores, &self.test_set.labels(), DEFAULT_THRESHOLD)?;
        Ok((sum / n as f64, classification_metrics(&cm)))
    }

    fn client_entries(&self, state: &FedState, clients: &[usize], spec: &TrainSpec) -> Result<Vec<WeightedEntry>> {
        let clustered = self.algorithm.clustered();
        clients
            .par_iter()
            .map(|&c| {
                let shard = &state.shards[c];
                let fresh;
                let clusters = if !clustered {
                    fresh = ClusterSet::single(&[] as &[&[f64]]);
                    &fresh
                } else if self.recluster_each_round || state.cluster_cache.is_empty() {
                    fresh = cluster_client(shard, &self.cluster)?;
                    &fresh
                } else {
                    &state.cluster_cache[c]
                };
                client_update(
                    &self.detector,
                    shard,
                    clusters,
                    &state.global_params,
                    spec,
                    self.mode,
                    clustered,
                )
            })
            .collect()
    }

    fn combine(&self, entries: &[WeightedEntry]) -> Result<ModelParams> {
        if self.algorithm.clustered() {
            aggregate(entries, self.mode)
        } else {
            aggregate_plain(entries)
        }
    }

    /// Broadcast, local training, hierarchical aggregation, evaluation.
    /// Client updates run in parallel; their results are combined in
    /// client-id order, so the outcome does not depend on scheduling.
    pub fn server_round(&self, state: FedState) -> Result<(FedState, RoundReport)> {
        self.check_topology()?;
        if state.shards.len() != self.topology.k {
            return Err(Error::InvalidConfig(format!(
                "{} shards for a topology of {} clients",
                state.shards.len(),
                self.topology.k
            )));
        }
        let spec = self.round_spec(&state);
        let clients = self.participants(&state);
        let len = state.global_params.len();
        let mut messages = Vec::new();

        let new_global = match self.topology.tiers {
            Tiers::TwoTier => {
                messages.extend(
                    clients
                        .iter()
                        .map(|&c| Message::params(Node::Server, Node::Client(c), len)),
                );
                let entries = self.client_entries(&state, &clients, &spec)?;
                messages.extend(
                    clients
                        .iter()
                        .map(|&c| Message::params(Node::Client(c), Node::Server, len)),
                );
                self.combine(&entries)?
            }
            Tiers::ThreeTier => {
                // sub-servers with at least one participating client
                let groups: Vec<(usize, Vec<usize>)> = self
                    .topology
                    .members()
                    .into_iter()
                    .enumerate()
                    .map(|(q, members)| {
                        let active: Vec<usize> = members
                            .into_iter()
                            .filter(|c| clients.binary_search(c).is_ok())
                            .collect();
                        (q, active)
                    })
                    .filter(|(_, m)| !m.is_empty())
                    .collect();
                for (q, members) in &groups {
                    messages.push(Message::params(Node::Server, Node::Subserver(*q), len));
                    messages.extend(
                        members
                            .iter()
                            .map(|&c| Message::params(Node::Subserver(*q), Node::Client(c), len)),
                    );
                }
                let entries = self.client_entries(&state, &clients, &spec)?;
                let sub_mode = self.algorithm.clustered().then_some(self.mode);
                let mut sub_entries = Vec::with_capacity(groups.len());
                for (q, members) in &groups {
                    let mine: Vec<WeightedEntry> = members
                        .iter()
                        .map(|c| entries[clients.binary_search(c).expect("participant")].clone())
                        .collect();
                    messages.extend(
                        members
                            .iter()
                            .map(|&c| Message::params(Node::Client(c), Node::Subserver(*q), len)),
                    );
                    sub_entries.push(subserver_update(&mine, sub_mode)?);
                    messages.push(Message::params(Node::Subserver(*q), Node::Server, len));
                }
                self.combine(&sub_entries)?
            }
        };

        if !new_global.is_finite() {
            return Err(Error::InvalidInput(format!(
                "global parameters diverged in round {}",
                state.round + 1
            )));
        }
        let next = FedState {
            round: state.round + 1,
            global_params: new_global,
            ..state
        };
        let (train_loss, test) = self.evaluate(&next.global_params, &next)?;
        let report = RoundReport {
            round: next.round,
            train_loss,
            test,
            messages,
        };
        Ok((next, report))
    }
}

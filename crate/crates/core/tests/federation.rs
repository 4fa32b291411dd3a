use std::collections::BTreeMap;

use fedclus_core::datagen::save_csv;
use fedclus_core::federation::{
    client_update, estimate_round_latency, uniform_bandwidth, LinkClass, Message, Node, RoundReport,
};
use fedclus_core::{
    aggregate, cluster_client, generate_synthetic, partition_label_skew, run_experiment, standardize, Algorithm,
    Architecture, AssignmentPolicy, ClientShard, ClusterParams, DataSource, Dataset, Detector, Error, FedState,
    Federation, ModelParams, RunConfig, Sample, StandardizeScope, SynthConfig, Topology, TrainSpec, WeightMode,
    WeightedEntry,
};

const SPEC: TrainSpec = TrainSpec {
    epochs: 2,
    batch_size: 32,
    learning_rate: 0.05,
    seed: 0,
};

fn data(n_train: usize, seed: u64) -> (Dataset, Dataset) {
    let cfg = SynthConfig {
        n_train,
        n_test: 400,
        seed,
        ..SynthConfig::default()
    };
    let (train, test) = generate_synthetic(&cfg).unwrap();
    let (train, test, _) = standardize(&train, &test).unwrap();
    (train, test)
}

fn federation(algorithm: Algorithm, topology: Topology, test: Dataset) -> Federation {
    Federation {
        detector: Detector::logistic(13),
        algorithm,
        topology,
        train: SPEC,
        mode: WeightMode::Inverse,
        cluster: ClusterParams::default(),
        participation: 1.0,
        recluster_each_round: false,
        test_set: test,
    }
}

fn trajectory(fed: &Federation, shards: Vec<ClientShard>, rounds: usize) -> (Vec<ModelParams>, Vec<RoundReport>) {
    let init = fed.detector.init_params(1);
    let cluster = fed.algorithm.clustered().then_some(&fed.cluster);
    let mut state = FedState::new(shards, init, cluster, 42).unwrap();
    let mut params = Vec::new();
    let mut reports = Vec::new();
    for _ in 0..rounds {
        let (next, report) = fed.server_round(state).unwrap();
        params.push(next.global_params.clone());
        reports.push(report);
        state = next;
    }
    (params, reports)
}

/// Shard of two far-apart blobs, large enough to be clustered.
fn two_blob_shard(client_id: usize) -> ClientShard {
    let (train, _) = data(800, 77);
    let samples: Vec<Sample> = train
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut f = s.features.clone();
            f[0] += if i % 2 == 0 { 0.0 } else { 12.0 };
            Sample::new(f, s.label)
        })
        .collect();
    ClientShard {
        client_id,
        data: Dataset::new(samples).unwrap(),
    }
}

#[test]
fn identical_shards_reduce_to_one_client() {
    let (_, test) = data(500, 3);
    let shard = two_blob_shard(0);
    assert!(cluster_client(&shard, &ClusterParams::default()).unwrap().len() > 1);
    let many: Vec<ClientShard> = (0..6)
        .map(|c| ClientShard {
            client_id: c,
            data: shard.data.clone(),
        })
        .collect();
    for mode in [WeightMode::Inverse, WeightMode::Literal] {
        let mut fed_k = federation(Algorithm::Fedclusavg, Topology::two_tier(6).unwrap(), test.clone());
        fed_k.mode = mode;
        let mut fed_1 = federation(Algorithm::Fedclusavg, Topology::two_tier(1).unwrap(), test.clone());
        fed_1.mode = mode;
        let (pk, _) = trajectory(&fed_k, many.clone(), 10);
        let (p1, _) = trajectory(&fed_1, vec![shard.clone()], 10);
        for (a, b) in pk.iter().zip(&p1) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn one_client_per_subserver_matches_two_tier() {
    let (train, test) = data(6000, 5);
    let shards = partition_label_skew(&train, 20, 0.8, 9).unwrap();
    for (flat, plus) in [
        (Algorithm::Fedavg, Algorithm::FedavgPlus),
        (Algorithm::Fedclusavg, Algorithm::FedclusavgPlus),
    ] {
        let two = federation(flat, Topology::two_tier(20).unwrap(), test.clone());
        let three_top = Topology::three_tier(20, 20, AssignmentPolicy::Contiguous, 0).unwrap();
        let three = federation(plus, three_top, test.clone());
        let (a, _) = trajectory(&two, shards.clone(), 10);
        let (b, _) = trajectory(&three, shards.clone(), 10);
        assert_eq!(a, b, "{} vs {}", flat.name(), plus.name());
    }
}

fn hundred_clients() -> (Vec<ClientShard>, Dataset) {
    let (train, test) = data(2000, 8);
    (partition_label_skew(&train, 100, 0.5, 1).unwrap(), test)
}

fn central(messages: &[Message]) -> usize {
    messages.iter().filter(|m| m.is_central()).count()
}

#[test]
fn message_counts_per_round() {
    let (shards, test) = hundred_clients();
    let two = federation(Algorithm::Fedavg, Topology::two_tier(100).unwrap(), test.clone());
    let (_, r) = trajectory(&two, shards.clone(), 1);
    let m = &r[0].messages;
    assert_eq!(m.len(), 200);
    assert_eq!(central(m), 200);
    assert_eq!(m.iter().filter(|x| x.to == Node::Server).count(), 100);

    let top = Topology::three_tier(100, 5, AssignmentPolicy::Contiguous, 0).unwrap();
    let three = federation(Algorithm::FedavgPlus, top.clone(), test);
    let (_, r3) = trajectory(&three, shards, 1);
    let m3 = &r3[0].messages;
    assert_eq!(m3.len(), 210);
    assert_eq!(central(m3), 10);
    assert_eq!(m3.iter().filter(|x| x.link == LinkClass::Backbone).count(), 10);
    assert_eq!(m3.iter().filter(|x| x.to == Node::Server).count(), 5);

    let bw = uniform_bandwidth(10e6);
    let lat2 = estimate_round_latency(m, &bw, &Topology::two_tier(100).unwrap()).unwrap();
    let lat3 = estimate_round_latency(m3, &bw, &top).unwrap();
    assert!((lat3.central_uplink / lat2.central_uplink - 5.0 / 100.0).abs() <= 1e-12);
    assert!((lat3.central_downlink / lat2.central_downlink - 5.0 / 100.0).abs() <= 1e-12);
}

#[test]
fn rounds_do_not_depend_on_thread_count() {
    let (train, test) = data(4000, 12);
    let shards = partition_label_skew(&train, 10, 0.8, 2).unwrap();
    let fed = federation(Algorithm::Fedclusavg, Topology::two_tier(10).unwrap(), test);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| trajectory(&fed, shards.clone(), 3).0)
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn client_update_composes_group_training() {
    let shard = two_blob_shard(0);
    let clusters = cluster_client(&shard, &ClusterParams::default()).unwrap();
    assert!(clusters.len() >= 2);
    let det = Detector::logistic(13);
    let global = det.init_params(0);
    let samples = shard.data.samples();
    let by_hand: Vec<WeightedEntry> = clusters
        .groups
        .iter()
        .map(|g| {
            let refs: Vec<&Sample> = g.members.iter().map(|&i| &samples[i]).collect();
            WeightedEntry::new(det.local_train(&global, &refs, &SPEC).unwrap(), refs.len())
        })
        .collect();
    let expected = aggregate(&by_hand, WeightMode::Inverse).unwrap();
    let got = client_update(&det, &shard, &clusters, &global, &SPEC, WeightMode::Inverse, true).unwrap();
    assert_eq!(got.params, expected);
    assert_eq!(got.count, samples.len());
}

#[test]
fn topology_mismatch_is_rejected() {
    let (_, test) = data(500, 1);
    let fed = federation(Algorithm::FedavgPlus, Topology::two_tier(4).unwrap(), test);
    assert!(matches!(fed.check_topology(), Err(Error::TopologyMismatch { .. })));
}

fn run_config(algorithm: Algorithm, rounds: usize) -> RunConfig {
    RunConfig {
        data: DataSource::Synthetic(SynthConfig {
            n_train: 3000,
            n_test: 500,
            seed: 21,
            ..SynthConfig::default()
        }),
        k: 10,
        skew: 0.8,
        partition_seed: 4,
        algorithm,
        q: Some(5),
        assignment: AssignmentPolicy::Contiguous,
        architecture: Architecture::Logistic,
        train: SPEC,
        rounds,
        cluster: ClusterParams::default(),
        weight_mode: WeightMode::Inverse,
        participation: 1.0,
        recluster_each_round: false,
        standardize_scope: StandardizeScope::Global,
        replicate_shards: false,
        bandwidth_profiles: BTreeMap::from([("wifi".to_string(), 10e6)]),
        seed: 7,
    }
}

#[test]
fn zero_rounds_reports_initial_metrics_only() {
    let r = run_experiment(&run_config(Algorithm::Fedclusavg, 0)).unwrap();
    assert_eq!(r.rounds.len(), 1);
    assert_eq!(r.rounds[0].round, 0);
    assert_eq!(r.ledger.messages, 0);
    assert!(r.latency.is_empty());
    // zero init scores every sample at 0.5, i.e. all positive
    assert_eq!(r.rounds[0].recall, 1.0);
}

#[test]
fn experiments_are_reproducible() {
    for alg in Algorithm::ALL {
        let a = run_experiment(&run_config(alg, 3)).unwrap();
        let b = run_experiment(&run_config(alg, 3)).unwrap();
        assert_eq!(a, b, "{}", alg.name());
        assert_eq!(a.rounds.len(), 4);
        assert!(a.final_round().accuracy > 0.7);
    }
}

#[test]
fn csv_source_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let (train, _) = data(1200, 2);
    save_csv(&train, &path).unwrap();
    let mut cfg = run_config(Algorithm::Fedavg, 2);
    cfg.data = DataSource::Csv {
        path: path.clone(),
        test_fraction: 0.25,
        split_seed: 1,
    };
    cfg.standardize_scope = StandardizeScope::PerClient;
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.rounds.len(), 3);

    cfg.data = DataSource::Csv {
        path: dir.path().join("missing.csv"),
        test_fraction: 0.25,
        split_seed: 1,
    };
    let err = run_experiment(&cfg).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "data", .. }), "{err}");
}

#[test]
fn replicated_small_shards_make_clustering_a_no_op() {
    let mut a = run_config(Algorithm::Fedavg, 4);
    a.data = DataSource::Synthetic(SynthConfig {
        n_train: 250,
        n_test: 200,
        seed: 3,
        ..SynthConfig::default()
    });
    a.replicate_shards = true;
    let mut b = a.clone();
    b.algorithm = Algorithm::Fedclusavg;
    let ra = run_experiment(&a).unwrap();
    let rb = run_experiment(&b).unwrap();
    assert_eq!(
        ra.rounds.iter().map(|r| r.accuracy).collect::<Vec<_>>(),
        rb.rounds.iter().map(|r| r.accuracy).collect::<Vec<_>>()
    );
    assert_eq!(ra.final_roc, rb.final_roc);
}

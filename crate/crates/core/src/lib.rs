//! Clustered federated averaging for binary attack detection on
//! label-skewed clients.
//!
//! Clients split their shards into sub-client groups by farthest-point
//! clustering, train one model per group, and merge them with
//! deviation-weighted averaging. The same weighting is applied at the
//! server, and optionally at an intermediate sub-server tier. Plain FedAvg
//! over the same topologies is provided as the baseline.
//!
//! Modules, bottom-up:
//! - [`datagen`]: synthetic data, label-skew partitioning, standardization, CSV.
//! - [`clustering`]: per-client sub-client grouping.
//! - [`model`]: logistic / MLP detector and mini-batch training.
//! - [`aggregation`]: size- and deviation-weighted parameter averaging.
//! - [`metrics`]: confusion matrix, ROC, AUC, KS.
//! - [`federation`]: round protocol, topologies, communication ledger.

pub mod aggregation;
pub mod clustering;
pub mod datagen;
pub mod error;
pub mod federation;
pub mod metrics;
pub mod model;
pub mod seed;

pub use aggregation::{aggregate, aggregate_plain, deviation_weights, size_weighted_mean, WeightMode, WeightedEntry};
pub use clustering::{assign_nearest, cluster_client, select_centers, ClusterParams, ClusterSet, Group};
pub use datagen::{
    generate_synthetic, load_csv, partition_label_skew, split_train_test, standardize, ClientShard, Dataset, Sample,
    ScalerStats, SynthConfig,
};
pub use error::{Error, Result};
pub use federation::{
    run_experiment, Algorithm, AssignmentPolicy, DataSource, FedState, Federation, RunConfig, RunReport,
    StandardizeScope, Tiers, Topology,
};
pub use metrics::{
    auc, classification_metrics, confusion_matrix, ks_statistic, roc_curve, ClassificationMetrics, ConfusionMatrix,
    RocCurve, RocPoint,
};
pub use model::{Architecture, Detector, ModelParams, TrainSpec};

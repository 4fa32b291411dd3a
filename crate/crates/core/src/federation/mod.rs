//! Round orchestration for FedAvg, FedClusAvg and their three-tier
//! variants, with the communication ledger and latency model.

mod comm;
mod experiment;
mod round;
mod topology;

pub use comm::{
    estimate_round_latency, payload_bytes, traffic_summary, uniform_bandwidth, CommLedger, Direction, LatencyEstimate,
    LedgerTotals, LinkClass, Message, Node, TrafficRow, HEADER_BYTES,
};
pub use experiment::{run_experiment, DataSource, RoundRecord, RunConfig, RunReport, StandardizeScope};
pub use round::{client_update, subserver_update, Algorithm, FedState, Federation, RoundReport};
pub use topology::{AssignmentPolicy, Tiers, Topology};

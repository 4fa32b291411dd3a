//! Communication ledger and the per-round latency model.
//!
//! Every parameter message costs `8 * len + 64` bytes. Transfers into one
//! receiving node are serialized; independent branches of the tree run in
//! parallel. A round's latency is the uplink critical path plus the
//! downlink critical path.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::topology::{Tiers, Topology};
use crate::error::{Error, Result};

pub const HEADER_BYTES: u64 = 64;

pub fn payload_bytes(param_len: usize) -> u64 {
    8 * param_len as u64 + HEADER_BYTES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Server,
    Subserver(usize),
    Client(usize),
}

impl Node {
    fn level(self) -> u8 {
        match self {
            Node::Client(_) => 0,
            Node::Subserver(_) => 1,
            Node::Server => 2,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Server => write!(f, "server"),
            Node::Subserver(q) => write!(f, "subserver{q}"),
            Node::Client(k) => write!(f, "client{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkClass {
    /// Client to its parent (sub-server or server).
    Access,
    /// Sub-server to central server.
    Backbone,
}

impl LinkClass {
    pub fn name(self) -> &'static str {
        match self {
            LinkClass::Access => "access",
            LinkClass::Backbone => "backbone",
        }
    }

    pub fn between(a: Node, b: Node) -> LinkClass {
        match (a, b) {
            (Node::Client(_), _) | (_, Node::Client(_)) => LinkClass::Access,
            _ => LinkClass::Backbone,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Uplink,
    Downlink,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Uplink => "uplink",
            Direction::Downlink => "downlink",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub from: Node,
    pub to: Node,
    pub link: LinkClass,
    pub payload_bytes: u64,
}

impl Message {
    pub fn params(from: Node, to: Node, param_len: usize) -> Self {
        Message {
            from,
            to,
            link: LinkClass::between(from, to),
            payload_bytes: payload_bytes(param_len),
        }
    }

    pub fn direction(&self) -> Direction {
        if self.to.level() > self.from.level() {
            Direction::Uplink
        } else {
            Direction::Downlink
        }
    }

    /// Touches the central server.
    pub fn is_central(&self) -> bool {
        self.from == Node::Server || self.to == Node::Server
    }
}

/// Every message of every round, in emission order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommLedger {
    pub rounds: Vec<Vec<Message>>,
}

impl CommLedger {
    pub fn push_round(&mut self, messages: Vec<Message>) {
        self.rounds.push(messages);
    }

    pub fn totals(&self) -> LedgerTotals {
        let mut t = LedgerTotals::default();
        for m in self.rounds.iter().flatten() {
            t.add(m);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LedgerTotals {
    pub messages: u64,
    pub bytes: u64,
    pub central_messages: u64,
    pub central_bytes: u64,
}

impl LedgerTotals {
    pub fn add(&mut self, m: &Message) {
        self.messages += 1;
        self.bytes += m.payload_bytes;
        if m.is_central() {
            self.central_messages += 1;
            self.central_bytes += m.payload_bytes;
        }
    }

    pub fn of(messages: &[Message]) -> Self {
        let mut t = LedgerTotals::default();
        messages.iter().for_each(|m| t.add(m));
        t
    }
}

/// Message count and volume per (link class, direction) for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficRow {
    pub link: LinkClass,
    pub direction: Direction,
    pub messages: u64,
    pub bytes: u64,
}

pub fn traffic_summary(messages: &[Message]) -> Vec<TrafficRow> {
    let mut acc: BTreeMap<(LinkClass, Direction), (u64, u64)> = BTreeMap::new();
    for m in messages {
        let e = acc.entry((m.link, m.direction())).or_default();
        e.0 += 1;
        e.1 += m.payload_bytes;
    }
    acc.into_iter()
        .map(|((link, direction), (messages, bytes))| TrafficRow {
            link,
            direction,
            messages,
            bytes,
        })
        .collect()
}

/// Modeled wall time of one round, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyEstimate {
    pub uplink: f64,
    pub downlink: f64,
    /// Serialized uplink transfers into the central server.
    pub central_uplink: f64,
    /// Serialized downlink transfers out of the central server.
    pub central_downlink: f64,
    pub total: f64,
}

/// Same bandwidth on every link class.
pub fn uniform_bandwidth(bits_per_second: f64) -> BTreeMap<String, f64> {
    [LinkClass::Access, LinkClass::Backbone]
        .into_iter()
        .map(|l| (l.name().to_string(), bits_per_second))
        .collect()
}

/// Latency of one round's messages. `bandwidths` maps link class names
/// (`access`, `backbone`) to bits per second.
pub fn estimate_round_latency(
    messages: &[Message],
    bandwidths: &BTreeMap<String, f64>,
    topology: &Topology,
) -> Result<LatencyEstimate> {
    if messages.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut up_in: BTreeMap<Node, f64> = BTreeMap::new();
    let mut down_out: BTreeMap<Node, f64> = BTreeMap::new();
    for m in messages {
        let bw = *bandwidths
            .get(m.link.name())
            .ok_or_else(|| Error::UnknownLinkClass(m.link.name().to_string()))?;
        if bw.is_nan() || bw <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "bandwidth for `{}` must be positive",
                m.link.name()
            )));
        }
        let secs = (m.payload_bytes * 8) as f64 / bw;
        match m.direction() {
            Direction::Uplink => *up_in.entry(m.to).or_default() += secs,
            Direction::Downlink => *down_out.entry(m.from).or_default() += secs,
        }
    }
    let central_uplink = up_in.get(&Node::Server).copied().unwrap_or(0.0);
    let central_downlink = down_out.get(&Node::Server).copied().unwrap_or(0.0);
    let (uplink, downlink) = match topology.tiers {
        Tiers::TwoTier => (central_uplink, central_downlink),
        Tiers::ThreeTier => {
            let branch = |map: &BTreeMap<Node, f64>| {
                (0..topology.subserver_count())
                    .map(|q| map.get(&Node::Subserver(q)).copied().unwrap_or(0.0))
                    .fold(0.0, f64::max)
            };
            (branch(&up_in) + central_uplink, central_downlink + branch(&down_out))
        }
    };
    Ok(LatencyEstimate {
        uplink,
        downlink,
        central_uplink,
        central_downlink,
        total: uplink + downlink,
    })
}

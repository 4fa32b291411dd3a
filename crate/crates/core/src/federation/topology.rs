use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tiers {
    TwoTier,
    ThreeTier,
}

impl Tiers {
    pub fn name(self) -> &'static str {
        match self {
            Tiers::TwoTier => "two_tier",
            Tiers::ThreeTier => "three_tier",
        }
    }
}

/// How clients are mapped onto sub-servers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentPolicy {
    /// Equal contiguous blocks by client id.
    #[default]
    Contiguous,
    /// Contiguous blocks over a seeded permutation of client ids.
    Shuffled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub tiers: Tiers,
    pub k: usize,
    pub q: Option<usize>,
    /// `assignment[client] = subserver`; empty for two tiers.
    pub assignment: Vec<usize>,
}

impl Topology {
    pub fn two_tier(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("client count k must be at least 1".into()));
        }
        Ok(Topology {
            tiers: Tiers::TwoTier,
            k,
            q: None,
            assignment: Vec::new(),
        })
    }

    pub fn three_tier(k: usize, q: usize, policy: AssignmentPolicy, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("client count k must be at least 1".into()));
        }
        if q == 0 || q > k {
            return Err(Error::InvalidConfig(format!(
                "sub-server count q={q} must lie in [1, k={k}]"
            )));
        }
        let mut order: Vec<usize> = (0..k).collect();
        if policy == AssignmentPolicy::Shuffled {
            order.shuffle(&mut seed::rng(seed::derive(seed, seed::tags::ASSIGNMENT)));
        }
        let mut assignment = vec![0; k];
        for (pos, &client) in order.iter().enumerate() {
            assignment[client] = pos * q / k;
        }
        Ok(Topology {
            tiers: Tiers::ThreeTier,
            k,
            q: Some(q),
            assignment,
        })
    }

    pub fn subserver_count(&self) -> usize {
        self.q.unwrap_or(0)
    }

    /// Clients of each sub-server in ascending id order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.subserver_count()];
        for (client, &sub) in self.assignment.iter().enumerate() {
            out[sub].push(client);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.tiers {
            Tiers::TwoTier => {
                if self.q.is_some() || !self.assignment.is_empty() {
                    return Err(Error::InvalidConfig("two-tier topology takes no sub-servers".into()));
                }
            }
            Tiers::ThreeTier => {
                let q = self
                    .q
                    .ok_or_else(|| Error::InvalidConfig("three-tier topology needs q".into()))?;
                if q == 0 || q > self.k || self.assignment.len() != self.k {
                    return Err(Error::InvalidConfig("three-tier assignment is inconsistent".into()));
                }
                if self.assignment.iter().any(|&s| s >= q) {
                    return Err(Error::InvalidConfig("client assigned to unknown sub-server".into()));
                }
                if self.members().iter().any(Vec::is_empty) {
                    return Err(Error::InvalidConfig("every sub-server needs a client".into()));
                }
            }
        }
        Ok(())
    }
}

//! Sample-level clustering of a client shard into sub-client groups.
//!
//! Centers are picked farthest-point first: the first sample, then the
//! sample farthest from it, then repeatedly the sample whose distance to
//! its nearest center is largest, for as long as that distance exceeds
//! `theta` times the distance between the first two centers and the
//! center budget `max(2, n / max_centers_divisor)` is not exhausted.
//! Samples then join their nearest center. A clustering is kept only if
//! its loosest group is tighter than `gate_factor` times the whole shard.
//!
//! Nothing in this module is random.

use serde::{Deserialize, Serialize};

use crate::datagen::ClientShard;
use crate::error::{Error, Result};

/// Above this many points, mean pairwise distances are estimated on an
/// evenly strided subsample of this size.
pub const PAIRWISE_EXACT_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    pub theta: f64,
    pub min_samples_to_cluster: usize,
    pub max_centers_divisor: usize,
    pub gate_factor: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            theta: 0.5,
            min_samples_to_cluster: 300,
            max_centers_divisor: 50,
            gate_factor: 1.2,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidConfig("theta must lie in (0, 1)".into()));
        }
        if self.min_samples_to_cluster < 2 {
            return Err(Error::InvalidConfig("min_samples_to_cluster must be at least 2".into()));
        }
        if self.max_centers_divisor < 1 {
            return Err(Error::InvalidConfig("max_centers_divisor must be at least 1".into()));
        }
        if !(self.gate_factor > 0.0 && self.gate_factor.is_finite()) {
            return Err(Error::InvalidConfig("gate_factor must be positive".into()));
        }
        Ok(())
    }

    /// Center budget for a shard of `n` samples.
    pub fn max_centers(&self, n: usize) -> usize {
        (n / self.max_centers_divisor).max(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub center: Vec<f64>,
    /// Indices into the source shard, ascending.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub groups: Vec<Group>,
    pub source_size: usize,
}

impl ClusterSet {
    /// The trivial clustering: every sample in one group centered on the
    /// first sample.
    pub fn single<S: AsRef<[f64]>>(samples: &[S]) -> Self {
        ClusterSet {
            groups: vec![Group {
                center: samples.first().map(|s| s.as_ref().to_vec()).unwrap_or_default(),
                members: (0..samples.len()).collect(),
            }],
            source_size: samples.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.members.len()).collect()
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn check_dims<S: AsRef<[f64]>>(samples: &[S]) -> Result<usize> {
    let dim = samples.first().ok_or(Error::EmptyInput)?.as_ref().len();
    for s in samples {
        if s.as_ref().len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.as_ref().len(),
            });
        }
    }
    Ok(dim)
}

/// Farthest-point center selection. Returns indices into `samples` in
/// admission order.
pub fn select_centers<S: AsRef<[f64]>>(samples: &[S], params: &ClusterParams) -> Result<Vec<usize>> {
    check_dims(samples)?;
    let n = samples.len();
    let first = samples[0].as_ref();

    // nearest-center distance for every sample; NaN-free since inputs are finite
    let mut nearest: Vec<f64> = samples.iter().map(|s| euclidean(s.as_ref(), first)).collect();
    let mut is_center = vec![false; n];
    is_center[0] = true;
    let mut centers = vec![0];

    let Some((second, d12)) = farthest(&nearest, &is_center) else {
        return Ok(centers);
    };
    if d12 <= 0.0 {
        return Ok(centers);
    }
    admit(samples, second, &mut centers, &mut is_center, &mut nearest);

    let budget = params.max_centers(n);
    while centers.len() < budget {
        let Some((s, ds)) = farthest(&nearest, &is_center) else {
            break;
        };
        if ds > params.theta * d12 {
            admit(samples, s, &mut centers, &mut is_center, &mut nearest);
        } else {
            break;
        }
    }
    Ok(centers)
}

/// Non-center with the largest nearest-center distance, lowest index on ties.
fn farthest(nearest: &[f64], is_center: &[bool]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &d) in nearest.iter().enumerate() {
        if is_center[i] {
            continue;
        }
        if best.is_none_or(|(_, bd)| d > bd) {
            best = Some((i, d));
        }
    }
    best
}

fn admit<S: AsRef<[f64]>>(
    samples: &[S],
    idx: usize,
    centers: &mut Vec<usize>,
    is_center: &mut [bool],
    nearest: &mut [f64],
) {
    centers.push(idx);
    is_center[idx] = true;
    let c = samples[idx].as_ref();
    for (d, s) in nearest.iter_mut().zip(samples) {
        let dc = euclidean(s.as_ref(), c);
        if dc < *d {
            *d = dc;
        }
    }
}

/// Assigns every sample to its nearest center (lowest center index on
/// ties). Centers that attract no sample are dropped.
pub fn assign_nearest<S: AsRef<[f64]>, C: AsRef<[f64]>>(samples: &[S], centers: &[C]) -> Result<ClusterSet> {
    let dim = check_dims(samples)?;
    if centers.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(c) = centers.iter().find(|c| c.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: c.as_ref().len(),
        });
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
    for (i, s) in samples.iter().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, c) in centers.iter().enumerate() {
            let d = euclidean(s.as_ref(), c.as_ref());
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        members[best].push(i);
    }
    let groups = centers
        .iter()
        .zip(members)
        .filter(|(_, m)| !m.is_empty())
        .map(|(c, members)| Group {
            center: c.as_ref().to_vec(),
            members,
        })
        .collect();
    Ok(ClusterSet {
        groups,
        source_size: samples.len(),
    })
}

/// Mean Euclidean distance over unordered pairs of the given points. Zero
/// for fewer than two points; strided subsample above
/// [`PAIRWISE_EXACT_LIMIT`].
pub fn mean_pairwise_distance<S: AsRef<[f64]>>(samples: &[S], indices: &[usize]) -> f64 {
    let picked: Vec<usize> = if indices.len() > PAIRWISE_EXACT_LIMIT {
        (0..PAIRWISE_EXACT_LIMIT)
            .map(|i| indices[i * indices.len() / PAIRWISE_EXACT_LIMIT])
            .collect()
    } else {
        indices.to_vec()
    };
    let m = picked.len();
    if m < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for a in 0..m {
        let pa = samples[picked[a]].as_ref();
        for &b in &picked[a + 1..] {
            total += euclidean(pa, samples[b].as_ref());
        }
    }
    total / (m * (m - 1) / 2) as f64
}

/// Outcome of the acceptance gate, kept for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateCheck {
    pub max_group_spread: f64,
    pub shard_spread: f64,
    pub accepted: bool,
}

pub fn gate_check<S: AsRef<[f64]>>(samples: &[S], set: &ClusterSet, gate_factor: f64) -> GateCheck {
    let all: Vec<usize> = (0..samples.len()).collect();
    let shard_spread = mean_pairwise_distance(samples, &all);
    let max_group_spread = set
        .groups
        .iter()
        .map(|g| mean_pairwise_distance(samples, &g.members))
        .fold(0.0, f64::max);
    GateCheck {
        max_group_spread,
        shard_spread,
        accepted: max_group_spread < gate_factor * shard_spread,
    }
}

/// Clusters a raw feature list: threshold check, centers, assignment, gate.
pub fn cluster_samples<S: AsRef<[f64]>>(samples: &[S], params: &ClusterParams) -> Result<ClusterSet> {
    check_dims(samples)?;
    if samples.len() <= params.min_samples_to_cluster {
        return Ok(ClusterSet::single(samples));
    }
    let centers = select_centers(samples, params)?;
    if centers.len() < 2 {
        return Ok(ClusterSet::single(samples));
    }
    let center_vecs: Vec<&[f64]> = centers.iter().map(|&i| samples[i].as_ref()).collect();
    let set = assign_nearest(samples, &center_vecs)?;
    if gate_check(samples, &set, params.gate_factor).accepted {
        Ok(set)
    } else {
        Ok(ClusterSet::single(samples))
    }
}

pub fn cluster_client(shard: &ClientShard, params: &ClusterParams) -> Result<ClusterSet> {
    let features: Vec<&[f64]> = shard.data.samples().iter().map(|s| s.features.as_slice()).collect();
    cluster_samples(&features, params)
}

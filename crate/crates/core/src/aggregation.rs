//! Parameter aggregation shared by every tier (group -> client,
//! client -> sub-server, sub-server -> server).
//!
//! Each entry's deviation is its Euclidean distance to the size-weighted
//! mean of all entries. `WeightMode::Literal` weights entries in
//! proportion to that deviation; `WeightMode::Inverse` weights them in
//! proportion to its reciprocal, so outlying updates count less.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Below this summed deviation the entries are treated as coincident and
/// weights fall back to sample counts.
pub const ZERO_DEVIATION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEntry {
    pub params: ModelParams,
    pub count: usize,
}

impl WeightedEntry {
    pub fn new(params: ModelParams, count: usize) -> Self {
        WeightedEntry { params, count }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Literal,
    #[default]
    Inverse,
}

impl WeightMode {
    pub fn name(self) -> &'static str {
        match self {
            WeightMode::Literal => "literal",
            WeightMode::Inverse => "inverse",
        }
    }
}

fn validate(entries: &[WeightedEntry]) -> Result<usize> {
    let first = entries.first().ok_or(Error::EmptyInput)?;
    let len = first.params.len();
    for e in entries {
        if e.params.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: e.params.len(),
            });
        }
        if e.count == 0 {
            return Err(Error::InvalidInput("aggregation entry with zero samples".into()));
        }
    }
    Ok(len)
}

fn size_weights(entries: &[WeightedEntry]) -> Vec<f64> {
    let total: usize = entries.iter().map(|e| e.count).sum();
    entries.iter().map(|e| e.count as f64 / total as f64).collect()
}

/// `sum_m weights[m] * params[m]`. Bitwise-identical inputs short-circuit to
/// the shared vector so that fixed points stay exact.
fn combine(entries: &[WeightedEntry], weights: &[f64], len: usize) -> ModelParams {
    let first = &entries[0].params;
    if entries[1..].iter().all(|e| e.params == *first) {
        return first.clone();
    }
    let mut out = vec![0.0; len];
    for (e, &w) in entries.iter().zip(weights) {
        for (o, p) in out.iter_mut().zip(e.params.as_slice()) {
            *o += w * p;
        }
    }
    ModelParams(out)
}

/// Sample-count weighted mean; the FedAvg rule.
pub fn size_weighted_mean(entries: &[WeightedEntry]) -> Result<ModelParams> {
    let len = validate(entries)?;
    Ok(combine(entries, &size_weights(entries), len))
}

/// Plain FedAvg aggregation, an alias for [`size_weighted_mean`].
pub fn aggregate_plain(entries: &[WeightedEntry]) -> Result<ModelParams> {
    size_weighted_mean(entries)
}

/// Euclidean distance of each entry from the size-weighted mean.
pub fn deviations(entries: &[WeightedEntry]) -> Result<Vec<f64>> {
    let mean = size_weighted_mean(entries)?;
    Ok(entries.iter().map(|e| e.params.distance(&mean)).collect())
}

/// Normalised aggregation weights. They are non-negative and sum to one.
pub fn deviation_weights(entries: &[WeightedEntry], mode: WeightMode) -> Result<Vec<f64>> {
    let d = deviations(entries)?;
    let total: f64 = d.iter().sum();
    if total < ZERO_DEVIATION {
        return Ok(size_weights(entries));
    }
    let raw: Vec<f64> = match mode {
        WeightMode::Literal => d,
        WeightMode::Inverse => {
            // floor keeps an entry sitting on the mean from taking all the mass
            let eps = 1e-8 * (1.0 + total / entries.len() as f64);
            d.iter().map(|&x| 1.0 / x.max(eps)).collect()
        }
    };
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|x| x / sum).collect())
}

/// Deviation-weighted aggregation; the FedClusAvg rule at every tier.
pub fn aggregate(entries: &[WeightedEntry], mode: WeightMode) -> Result<ModelParams> {
    let len = validate(entries)?;
    let weights = deviation_weights(entries, mode)?;
    Ok(combine(entries, &weights, len))
}

//! Local detector: logistic regression or a one-hidden-layer tanh MLP,
//! trained with plain mini-batch gradient descent on mean binary
//! cross-entropy.
//!
//! Parameters are a flat vector so that every aggregation tier can treat
//! them uniformly. Layouts:
//! - logistic: `[w (F), b]`
//! - mlp: `[W1 (H x F, row-major), b1 (H), w2 (H), b2]`

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::Sample;
use crate::error::{Error, Result};
use crate::seed;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside the loss.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelParams(pub Vec<f64>);

impl ModelParams {
    pub fn zeros(len: usize) -> Self {
        ModelParams(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn distance(&self, other: &ModelParams) -> f64 {
        crate::clustering::euclidean(&self.0, &other.0)
    }
}

impl From<Vec<f64>> for ModelParams {
    fn from(v: Vec<f64>) -> Self {
        ModelParams(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Architecture {
    #[default]
    Logistic,
    Mlp {
        hidden: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSpec {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec {
            epochs: 10,
            batch_size: 32,
            learning_rate: 0.01,
            seed: 0,
        }
    }
}

impl TrainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A detector shape: input width plus architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detector {
    pub feature_dim: usize,
    pub architecture: Architecture,
}

impl Detector {
    pub fn new(feature_dim: usize, architecture: Architecture) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::InvalidConfig("feature_dim must be at least 1".into()));
        }
        if let Architecture::Mlp { hidden: 0 } = architecture {
            return Err(Error::InvalidConfig("mlp hidden width must be at least 1".into()));
        }
        Ok(Detector {
            feature_dim,
            architecture,
        })
    }

    pub fn logistic(feature_dim: usize) -> Self {
        Detector {
            feature_dim,
            architecture: Architecture::Logistic,
        }
    }

    pub fn param_len(&self) -> usize {
        let f = self.feature_dim;
        match self.architecture {
            Architecture::Logistic => f + 1,
            Architecture::Mlp { hidden: h } => h * f + h + h + 1,
        }
    }

    /// Logistic starts from zero. The MLP draws uniform(-0.1, 0.1) since a
    /// zero start leaves every hidden unit identical forever.
    pub fn init_params(&self, seed: u64) -> ModelParams {
        match self.architecture {
            Architecture::Logistic => ModelParams::zeros(self.param_len()),
            Architecture::Mlp { .. } => {
                let mut rng = seed::rng(seed);
                ModelParams((0..self.param_len()).map(|_| rng.random_range(-0.1..0.1)).collect())
            }
        }
    }

    pub fn check(&self, params: &ModelParams) -> Result<()> {
        if params.len() != self.param_len() {
            return Err(Error::DimensionMismatch {
                expected: self.param_len(),
                found: params.len(),
            });
        }
        Ok(())
    }

    fn check_sample(&self, s: &Sample) -> Result<()> {
        if s.features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                found: s.features.len(),
            });
        }
        Ok(())
    }

    /// Pre-sigmoid output. `hidden` receives tanh activations for the MLP.
    fn logit(&self, p: &[f64], x: &[f64], hidden: &mut Vec<f64>) -> f64 {
        let f = self.feature_dim;
        match self.architecture {
            Architecture::Logistic => p[f] + dot(&p[..f], x),
            Architecture::Mlp { hidden: h } => {
                let (w1, rest) = p.split_at(h * f);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(h);
                hidden.clear();
                hidden.extend((0..h).map(|u| (b1[u] + dot(&w1[u * f..(u + 1) * f], x)).tanh()));
                b2[0] + dot(w2, hidden)
            }
        }
    }

    pub fn predict_proba(&self, params: &ModelParams, x: &[f64]) -> Result<f64> {
        self.check(params)?;
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                found: x.len(),
            });
        }
        Ok(sigmoid(self.logit(&params.0, x, &mut Vec::new())))
    }

    /// Scores for a batch of samples, in order.
    pub fn scores(&self, params: &ModelParams, samples: &[Sample]) -> Result<Vec<f64>> {
        self.check(params)?;
        let mut hidden = Vec::new();
        samples
            .iter()
            .map(|s| {
                self.check_sample(s)?;
                Ok(sigmoid(self.logit(&params.0, &s.features, &mut hidden)))
            })
            .collect()
    }

    /// Mean binary cross-entropy with clamped probabilities.
    pub fn loss(&self, params: &ModelParams, batch: &[&Sample]) -> Result<f64> {
        self.check(params)?;
        if batch.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut hidden = Vec::new();
        let mut total = 0.0;
        for s in batch {
            self.check_sample(s)?;
            let p = sigmoid(self.logit(&params.0, &s.features, &mut hidden)).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            total -= if s.is_attack() { p.ln() } else { (1.0 - p).ln() };
        }
        Ok(total / batch.len() as f64)
    }

    /// Analytic gradient of [`Detector::loss`]. Samples whose probability
    /// sits on the clamp contribute nothing, matching the flat loss there.
    pub fn gradient(&self, params: &ModelParams, batch: &[&Sample]) -> Result<Vec<f64>> {
        self.check(params)?;
        if batch.is_empty() {
            return Err(Error::EmptyInput);
        }
        for s in batch {
            self.check_sample(s)?;
        }
        let mut grad = vec![0.0; params.len()];
        self.accumulate_gradient(&params.0, batch, &mut grad);
        Ok(grad)
    }

    fn accumulate_gradient(&self, p: &[f64], batch: &[&Sample], grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let f = self.feature_dim;
        let mut hidden = Vec::new();
        for s in batch {
            let x = &s.features;
            let prob = sigmoid(self.logit(p, x, &mut hidden));
            if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&prob) {
                continue;
            }
            let delta = prob - f64::from(s.label);
            match self.architecture {
                Architecture::Logistic => {
                    for (g, xi) in grad[..f].iter_mut().zip(x) {
                        *g += delta * xi;
                    }
                    grad[f] += delta;
                }
                Architecture::Mlp { hidden: h } => {
                    let w2 = &p[h * f + h..h * f + 2 * h];
                    let (gw1, rest) = grad.split_at_mut(h * f);
                    let (gb1, rest) = rest.split_at_mut(h);
                    let (gw2, gb2) = rest.split_at_mut(h);
                    for u in 0..h {
                        let a = hidden[u];
                        gw2[u] += delta * a;
                        let dz = delta * w2[u] * (1.0 - a * a);
                        gb1[u] += dz;
                        for (g, xi) in gw1[u * f..(u + 1) * f].iter_mut().zip(x) {
                            *g += dz * xi;
                        }
                    }
                    gb2[0] += delta;
                }
            }
        }
        let n = batch.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
    }

    /// Mini-batch gradient descent over `group`: a seeded shuffle per
    /// epoch, `ceil(n / B)` batches with the ragged tail kept, one step
    /// `w <- w - lr * grad` per batch.
    ///
    /// Each batch is evaluated in ascending sample order, so a single
    /// batch covering the whole group reproduces a full-batch step bit for
    /// bit.
    pub fn local_train(&self, start: &ModelParams, group: &[&Sample], spec: &TrainSpec) -> Result<ModelParams> {
        self.check(start)?;
        if group.is_empty() {
            return Err(Error::EmptyInput);
        }
        if spec.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        for s in group {
            self.check_sample(s)?;
        }
        let mut rng = seed::rng(spec.seed);
        let mut w = start.0.clone();
        let mut grad = vec![0.0; w.len()];
        let mut order: Vec<usize> = (0..group.len()).collect();
        let mut batch: Vec<&Sample> = Vec::with_capacity(spec.batch_size);
        let mut idx: Vec<usize> = Vec::with_capacity(spec.batch_size);
        for _ in 0..spec.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(spec.batch_size) {
                idx.clear();
                idx.extend_from_slice(chunk);
                idx.sort_unstable();
                batch.clear();
                batch.extend(idx.iter().map(|&i| group[i]));
                self.accumulate_gradient(&w, &batch, &mut grad);
                for (wi, gi) in w.iter_mut().zip(&grad) {
                    *wi -= spec.learning_rate * gi;
                }
            }
        }
        Ok(ModelParams(w))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

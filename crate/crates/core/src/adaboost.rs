//! AdaBoost over 1-nearest-neighbor weak classifiers.
//!
//! Each weak learner is a resample (with replacement, proportional to the
//! current sample weights) of the training set and classifies a frame by
//! the label of its Euclidean nearest neighbor in that resample. The strong
//! classifier is the `ln(1/β)`-weighted vote.

use std::sync::Arc;

use rand::Rng;

use crate::dataset::LabeledDataset;
use crate::model::{ModelBlob, ModelKind};
use crate::modulation::ModulationScheme;
use crate::{seed, Decision, Demodulator, Error, Result};

pub const DEFAULT_LEARNERS: usize = 20;
/// Vote odds assigned to a learner with zero weighted error.
pub const BETA_MIN: f64 = 1e-10;
/// Resampling attempts allowed per round after the first when `e ≥ 0.5`.
pub const MAX_RETRIES: usize = 10;

/// Squared distance, or `None` once the partial sum exceeds `bound`.
fn dist2_bounded(a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    let mut s = 0.0;
    for (chunk_a, chunk_b) in a.chunks(8).zip(b.chunks(8)) {
        for (x, y) in chunk_a.iter().zip(chunk_b) {
            let d = x - y;
            s += d * d;
        }
        if s > bound {
            return None;
        }
    }
    Some(s)
}

/// Position in `candidates` of the frame of `train` nearest to `query`;
/// equal distances keep the earliest candidate.
fn nearest(train: &LabeledDataset, candidates: &[u32], query: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (pos, &idx) in candidates.iter().enumerate() {
        if let Some(d) = dist2_bounded(train.frame(idx as usize), query, best_d) {
            if d < best_d {
                best_d = d;
                best = pos;
            }
        }
    }
    best
}

/// Label of the training frame closest to `query` in Euclidean distance,
/// ties going to the lowest training index.
pub fn knn_classify(train: &LabeledDataset, query: &[f64]) -> Result<u16> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("nearest-neighbor set is empty".into()));
    }
    if query.len() != train.n() {
        return Err(Error::DimensionMismatch {
            expected: train.n(),
            actual: query.len(),
        });
    }
    let all: Vec<u32> = (0..train.len() as u32).collect();
    Ok(train.label(nearest(train, &all, query)))
}

/// `e = Σ d_i · [predicted_i ≠ truth_i]`.
pub fn weighted_error(predicted: &[u16], truth: &[u16], d: &[f64]) -> f64 {
    predicted
        .iter()
        .zip(truth)
        .zip(d)
        .filter(|((p, t), _)| p != t)
        .map(|(_, w)| w)
        .sum()
}

/// Divide the weight of every misclassified sample by `beta` and
/// renormalize to unit sum.
pub fn reweight(d: &[f64], correct: &[bool], beta: f64) -> Vec<f64> {
    let mut out: Vec<f64> = d
        .iter()
        .zip(correct)
        .map(|(&w, &ok)| if ok { w } else { w / beta })
        .collect();
    let total: f64 = out.iter().sum();
    for w in &mut out {
        *w /= total;
    }
    out
}

/// Draw `k` indices with replacement, index `i` with probability `d_i`,
/// by inverting the cumulative distribution.
pub fn resample(d: &[f64], k: usize, rng: &mut impl Rng) -> Vec<u32> {
    let mut cdf = Vec::with_capacity(d.len());
    let mut acc = 0.0;
    for &w in d {
        acc += w;
        cdf.push(acc);
    }
    let last = d.len() - 1;
    (0..k)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cdf.partition_point(|&c| c <= u).min(last) as u32
        })
        .collect()
}

/// Index of the largest vote total, ties to the smallest class.
pub fn weighted_vote(votes: &[(u16, f64)], classes: usize) -> u16 {
    let mut totals = vec![0.0; classes];
    for &(label, alpha) in votes {
        totals[usize::from(label) - 1] += alpha;
    }
    crate::argmax_first(&totals) as u16 + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakLearner {
    /// Resampled training indices, in draw order.
    pub indices: Vec<u32>,
    /// First occurrence of each distinct index, in draw order.
    distinct: Vec<u32>,
    pub beta: f64,
}

impl WeakLearner {
    pub fn new(indices: Vec<u32>, beta: f64) -> Self {
        let mut seen = std::collections::HashSet::with_capacity(indices.len());
        let distinct = indices.iter().copied().filter(|i| seen.insert(*i)).collect();
        WeakLearner { indices, distinct, beta }
    }

    /// Vote coefficient `ln(1/β)`.
    pub fn alpha(&self) -> f64 {
        (1.0 / self.beta).ln()
    }

    /// 1-NN label within the learner's resample. Duplicate draws share one
    /// frame, so scanning first occurrences preserves the tie rule.
    pub fn predict(&self, train: &LabeledDataset, frame: &[f64]) -> u16 {
        train.label(self.distinct[nearest(train, &self.distinct, frame)] as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaBoostConfig {
    pub learners: usize,
    pub seed: u64,
}

impl AdaBoostConfig {
    pub fn new(learners: usize, seed: u64) -> Self {
        AdaBoostConfig { learners, seed }
    }
}

#[derive(Debug, Clone)]
pub struct AdaBoostEnsemble {
    train: Arc<LabeledDataset>,
    learners: Vec<WeakLearner>,
    /// Sample weights `d_q` each learner was drawn from.
    weights: Vec<Vec<f64>>,
}

impl PartialEq for AdaBoostEnsemble {
    fn eq(&self, other: &Self) -> bool {
        self.learners == other.learners
            && self.weights == other.weights
            && (Arc::ptr_eq(&self.train, &other.train) || *self.train == *other.train)
    }
}

impl AdaBoostEnsemble {
    /// Boost up to `cfg.learners` rounds on `train`.
    pub fn train(train: Arc<LabeledDataset>, cfg: &AdaBoostConfig) -> Result<Self> {
        let k = train.len();
        if k < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 training frames, got {k}")));
        }
        if cfg.learners == 0 {
            return Err(Error::InvalidArgument("need at least one learner".into()));
        }
        let mut rng = seed::rng(seed::derive_str(cfg.seed, "adaboost-resample"));
        let mut d = vec![1.0 / k as f64; k];
        let mut learners = Vec::new();
        let mut weights = Vec::new();
        let mut predicted = vec![0u16; k];
        'rounds: for _ in 0..cfg.learners {
            let mut attempt = 0;
            loop {
                let candidate = WeakLearner::new(resample(&d, k, &mut rng), 1.0);
                for (i, p) in predicted.iter_mut().enumerate() {
                    *p = candidate.predict(&train, train.frame(i));
                }
                let e = weighted_error(&predicted, train.labels(), &d);
                if e == 0.0 {
                    learners.push(WeakLearner { beta: BETA_MIN, ..candidate });
                    weights.push(d);
                    break 'rounds;
                }
                if e >= 0.5 {
                    attempt += 1;
                    if attempt > MAX_RETRIES {
                        break 'rounds;
                    }
                    continue;
                }
                let beta = e / (1.0 - e);
                let correct: Vec<bool> = predicted.iter().zip(train.labels()).map(|(p, t)| p == t).collect();
                let next = reweight(&d, &correct, beta);
                learners.push(WeakLearner { beta, ..candidate });
                weights.push(std::mem::replace(&mut d, next));
                break;
            }
        }
        if learners.is_empty() {
            return Err(Error::TrainingFailure(format!(
                "no weak learner reached weighted error below 0.5 in {} attempts",
                MAX_RETRIES + 1
            )));
        }
        Ok(AdaBoostEnsemble { train, learners, weights })
    }

    /// Ensemble from explicit learners over `train`.
    pub fn from_learners(train: Arc<LabeledDataset>, learners: Vec<WeakLearner>) -> Result<Self> {
        if learners.is_empty() {
            return Err(Error::InvalidArgument("an ensemble needs at least one learner".into()));
        }
        for l in &learners {
            if l.indices.is_empty() || l.indices.iter().any(|&i| i as usize >= train.len()) {
                return Err(Error::InvalidArgument("learner index outside the training set".into()));
            }
            if !(l.beta > 0.0 && l.beta.is_finite()) {
                return Err(Error::InvalidArgument(format!("beta {} must be positive", l.beta)));
            }
        }
        Ok(AdaBoostEnsemble {
            train,
            learners,
            weights: Vec::new(),
        })
    }

    pub fn learners(&self) -> &[WeakLearner] {
        &self.learners
    }

    pub fn weight_history(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn training_set(&self) -> &LabeledDataset {
        &self.train
    }

    /// Labels the individual learners assign to `frame`.
    pub fn learner_votes(&self, frame: &[f64]) -> Vec<u16> {
        self.learners.iter().map(|l| l.predict(&self.train, frame)).collect()
    }

    pub fn to_blob(&self) -> ModelBlob {
        let mut blob = ModelBlob::new(ModelKind::AdaBoost, self.train.scheme(), self.train.n());
        let digest: Vec<u32> = self.train.digest().iter().map(|&b| u32::from(b)).collect();
        blob.push_u32("train.sha256", &[32], digest);
        blob.push_f64("betas", &[self.learners.len()], self.learners.iter().map(|l| l.beta).collect());
        let k = self.learners[0].indices.len();
        let mut idx = Vec::with_capacity(self.learners.len() * k);
        for l in &self.learners {
            idx.extend_from_slice(&l.indices);
        }
        blob.push_u32("indices", &[self.learners.len(), k], idx);
        blob
    }

    /// Rebuild from a blob; `train` must be the dataset the ensemble was
    /// trained on.
    pub fn from_blob(blob: &ModelBlob, train: &LabeledDataset) -> Result<Self> {
        let (_, digest) = blob.u32("train.sha256")?;
        let expected: Vec<u32> = train.digest().iter().map(|&b| u32::from(b)).collect();
        if digest != expected.as_slice() {
            return Err(Error::InvalidArgument(
                "training dataset does not match the one the ensemble was trained on".into(),
            ));
        }
        if blob.scheme != train.scheme() || usize::from(blob.n) != train.n() {
            return Err(Error::SchemeMismatch {
                expected: blob.scheme.name(),
                actual: train.scheme().name(),
            });
        }
        let (_, betas) = blob.f64("betas")?;
        let (dims, idx) = blob.u32("indices")?;
        let [q, k] = dims[..] else {
            return Err(Error::Parse {
                offset: 0,
                message: "indices must be 2-D".into(),
            });
        };
        if q != betas.len() {
            return Err(Error::Parse {
                offset: 0,
                message: format!("{} betas for {q} learners", betas.len()),
            });
        }
        let learners = betas
            .iter()
            .zip(idx.chunks_exact(k.max(1)))
            .map(|(&b, ix)| WeakLearner::new(ix.to_vec(), b))
            .collect();
        Self::from_learners(Arc::new(train.clone()), learners)
    }
}

impl Demodulator for AdaBoostEnsemble {
    fn scheme(&self) -> ModulationScheme {
        self.train.scheme()
    }

    fn classify(&self, frame: &[f64]) -> Result<Decision> {
        if frame.len() != self.train.n() {
            return Err(Error::DimensionMismatch {
                expected: self.train.n(),
                actual: frame.len(),
            });
        }
        let votes: Vec<(u16, f64)> = self
            .learners
            .iter()
            .map(|l| (l.predict(&self.train, frame), l.alpha()))
            .collect();
        Ok(Decision::from_label(weighted_vote(
            &votes,
            self.train.scheme().alphabet_size(),
        )))
    }
}

//! One-vs-rest linear SVMs trained with Pegasos-style subgradient descent.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{stable_seed, SparseVector};
use crate::ontology::{ConceptId, OntologyError, OntologyGraph};

pub const LINEAR_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("corpus of {0} documents is too small to split")]
    CorpusTooSmall(usize),
    #[error("feature index {found} outside dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("{features} feature vectors but {labels} label sets")]
    LengthMismatch { features: usize, labels: usize },
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u32),
}

impl From<OntologyError> for ClassifierError {
    fn from(e: OntologyError) -> Self {
        match e {
            OntologyError::UnknownClass(id) | OntologyError::UnknownConcept(id) => ClassifierError::UnknownClass(id),
            other => ClassifierError::Malformed(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub epochs: u32,
    pub seed: u64,
    pub split_ratio: f64,
    pub level: u32,
    /// Decision threshold on the margin.
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 20,
            seed: 42,
            split_ratio: 0.67,
            level: 1,
            threshold: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidConfig(m.to_owned()));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split_ratio must lie strictly between 0 and 1");
        }
        if self.level == 0 {
            return bad("level must be at least 1");
        }
        if !self.threshold.is_finite() {
            return bad("threshold must be finite");
        }
        Ok(())
    }
}

/// Number of training items for `n` items: `ceil(ratio * n)` kept inside
/// `1..=n-1` so both sides are non-empty.
pub fn train_size(n: usize, ratio: f64) -> usize {
    let raw = (ratio * n as f64 - 1e-9).ceil().max(0.0) as usize;
    raw.clamp(1, n - 1)
}

/// Seeded shuffle of `0..n`, then the first `train_size` indices train.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), ClassifierError> {
    if n < 2 {
        return Err(ClassifierError::CorpusTooSmall(n));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(ClassifierError::InvalidConfig("split ratio must lie strictly between 0 and 1".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order.split_off(train_size(n, ratio));
    Ok((order, test))
}

/// Splits items into (train, test) by [`split_indices`].
pub fn split_corpus<T: Clone>(items: &[T], ratio: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), ClassifierError> {
    let (train, test) = split_indices(items.len(), ratio, seed)?;
    Ok((
        train.into_iter().map(|i| items[i].clone()).collect(),
        test.into_iter().map(|i| items[i].clone()).collect(),
    ))
}

/// Maps each class to its ancestor at `level`; shallower classes are
/// dropped, duplicates collapsed.
pub fn project_labels(
    classes: &[ConceptId],
    ontology: &OntologyGraph,
    level: u32,
) -> Result<Vec<ConceptId>, ClassifierError> {
    if level == 0 {
        return Err(ClassifierError::InvalidConfig("level must be at least 1".into()));
    }
    let mut out = BTreeSet::new();
    for c in classes {
        if let Some(a) = ontology.ancestor_at_level(c.as_str(), level)? {
            out.insert(a.clone());
        }
    }
    Ok(out.into_iter().collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedClass {
    pub class: ConceptId,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub version: u32,
    pub dimension: usize,
    pub classes: Vec<ConceptId>,
    pub weights: Vec<SparseVector>,
    pub biases: Vec<f64>,
    pub config: TrainConfig,
    pub skipped: Vec<SkippedClass>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredLabel {
    pub class: ConceptId,
    pub margin: f64,
}

fn check_dimension(x: &SparseVector, dimension: usize) -> Result<(), ClassifierError> {
    if x.min_dimension() > dimension {
        return Err(ClassifierError::DimensionMismatch {
            expected: dimension,
            found: x.min_dimension() - 1,
        });
    }
    Ok(())
}

/// Trains one binary model per class found in `labels`.
pub fn train_ovr(
    features: &[SparseVector],
    labels: &[Vec<ConceptId>],
    dimension: usize,
    cfg: &TrainConfig,
) -> Result<LinearModel, ClassifierError> {
    cfg.validate()?;
    if features.len() != labels.len() {
        return Err(ClassifierError::LengthMismatch {
            features: features.len(),
            labels: labels.len(),
        });
    }
    for x in features {
        check_dimension(x, dimension)?;
    }
    let label_sets: Vec<BTreeSet<&ConceptId>> = labels.iter().map(|l| l.iter().collect()).collect();
    let all: BTreeSet<&ConceptId> = label_sets.iter().flatten().copied().collect();
    let n = features.len();

    let mut trainable = Vec::new();
    let mut skipped = Vec::new();
    for class in all {
        let positives = label_sets.iter().filter(|s| s.contains(class)).count();
        if positives == 0 || positives == n {
            log::warn!("class {class}: {positives} positives of {n} documents, skipped");
            skipped.push(SkippedClass {
                class: class.clone(),
                positives,
                negatives: n - positives,
            });
        } else {
            trainable.push(class);
        }
    }

    let trained: Vec<(SparseVector, f64)> = trainable
        .par_iter()
        .map(|class| {
            let y: Vec<f64> = label_sets
                .iter()
                .map(|s| if s.contains(*class) { 1.0 } else { -1.0 })
                .collect();
            pegasos(features, &y, dimension, cfg, stable_seed(cfg.seed, class.as_str()))
        })
        .collect();

    let (weights, biases) = trained.into_iter().unzip();
    Ok(LinearModel {
        version: LINEAR_FORMAT_VERSION,
        dimension,
        classes: trainable.into_iter().cloned().collect(),
        weights,
        biases,
        config: cfg.clone(),
        skipped,
    })
}

/// Binary hinge-loss SGD with step `1 / (lambda * t)`. The bias is the
/// weight of an implicit constant-1 feature at index `dimension`.
fn pegasos(xs: &[SparseVector], y: &[f64], dimension: usize, cfg: &TrainConfig, seed: u64) -> (SparseVector, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // w = scale * v, so the shrink step is O(1).
    let mut v = vec![0.0f64; dimension + 1];
    let mut scale = 1.0f64;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut t: u64 = 0;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (cfg.lambda * t as f64);
            let margin = y[i] * scale * (xs[i].dot_dense(&v) + v[dimension]);
            let shrink = 1.0 - eta * cfg.lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * y[i] / scale;
                for (j, xj) in xs[i].iter() {
                    v[j as usize] += step * xj;
                }
                v[dimension] += step;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
    }
    let bias = v[dimension] * scale;
    let w: Vec<f64> = v[..dimension].iter().map(|w| w * scale).collect();
    (SparseVector::from_dense(&w), bias)
}

impl LinearModel {
    /// Margin `w.x + b` of every class, in class-list order.
    pub fn margins(&self, x: &SparseVector) -> Result<Vec<f64>, ClassifierError> {
        check_dimension(x, self.dimension)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| sparse_dot(w, x) + b)
            .collect())
    }

    /// Classes whose margin exceeds the threshold, highest margin first.
    pub fn predict(&self, x: &SparseVector) -> Result<Vec<ScoredLabel>, ClassifierError> {
        let mut out: Vec<ScoredLabel> = self
            .margins(x)?
            .into_iter()
            .zip(&self.classes)
            .filter(|(m, _)| *m > self.config.threshold)
            .map(|(margin, class)| ScoredLabel {
                class: class.clone(),
                margin,
            })
            .collect();
        out.sort_by(|a, b| b.margin.total_cmp(&a.margin).then_with(|| a.class.cmp(&b.class)));
        Ok(out)
    }

    /// Structural checks applied after loading.
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.weights.len() != self.classes.len() || self.biases.len() != self.classes.len() {
            return Err(ClassifierError::Malformed("one weight vector and bias per class required".into()));
        }
        for w in &self.weights {
            check_dimension(w, self.dimension)?;
        }
        let unique: BTreeSet<&ConceptId> = self.classes.iter().collect();
        if unique.len() != self.classes.len() {
            return Err(ClassifierError::Malformed("duplicate class".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ClassifierError::Malformed(e.to_string()))?;
        let version = value.get("version").and_then(serde_json::Value::as_u64);
        if version != Some(u64::from(LINEAR_FORMAT_VERSION)) {
            return Err(ClassifierError::UnsupportedVersion(version.unwrap_or(0) as u32));
        }
        let model: Self = serde_json::from_value(value).map_err(|e| ClassifierError::Malformed(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

fn sparse_dot(a: &SparseVector, b: &SparseVector) -> f64 {
    let (ai, av) = (a.indices(), a.values());
    let (bi, bv) = (b.indices(), b.values());
    let (mut i, mut j, mut sum) = (0, 0, 0.0);
    while i < ai.len() && j < bi.len() {
        match ai[i].cmp(&bi[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                sum += av[i] * bv[j];
                i += 1;
                j += 1;
            }
        }
    }
    sum
}

//! Softmax classifier head over precomputed feature vectors.
//!
//! A single fully connected layer maps a feature vector to class scores,
//! trained with plain mini-batch gradient descent on the mean cross-entropy.

pub mod io;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Length of a feature vector in the on-disk format.
pub const FEATURE_DIM: usize = 2048;
pub const CLASSES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("no records")]
    Empty,
    #[error("class {0} has no training records")]
    EmptyClass(usize),
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("feature vector has {got} values, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("training diverged at epoch {0}")]
    Diverged(usize),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}

/// Which enhancement the source image went through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Original,
    He,
    Ahe,
    Clahe,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::Original, Condition::He, Condition::Ahe, Condition::Clahe];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Original => "original",
            Condition::He => "he",
            Condition::Ahe => "ahe",
            Condition::Clahe => "clahe",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown condition {s:?}"))
    }
}

/// One labelled feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord<F> {
    pub features: Vec<F>,
    pub label: usize,
    pub condition: Condition,
}

impl<F: Real> FeatureRecord<F> {
    pub fn new(features: Vec<F>, label: usize, condition: Condition) -> Result<Self, ClassifyError> {
        if features.is_empty() {
            return Err(ClassifyError::Dimension { expected: FEATURE_DIM, got: 0 });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFinite("features"));
        }
        Ok(Self {
            features,
            label,
            condition,
        })
    }
}

/// Fully connected layer `inputs -> classes` followed by softmax.
///
/// `weights` is row-major `inputs x classes`: the weight from feature `d` to
/// class `c` is `weights[d * classes + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier<F> {
    inputs: usize,
    classes: usize,
    weights: Vec<F>,
    bias: Vec<F>,
}

impl<F: Real> LinearClassifier<F> {
    pub fn zeros(inputs: usize, classes: usize) -> Self {
        Self {
            inputs,
            classes,
            weights: vec![F::zero(); inputs * classes],
            bias: vec![F::zero(); classes],
        }
    }

    pub fn from_parts(weights: Vec<F>, bias: Vec<F>) -> Result<Self, ClassifyError> {
        let classes = bias.len();
        if classes == 0 || weights.is_empty() || weights.len() % classes != 0 {
            return Err(ClassifyError::Dimension {
                expected: classes.max(1),
                got: weights.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFinite("model"));
        }
        Ok(Self {
            inputs: weights.len() / classes,
            classes,
            weights,
            bias,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn bias(&self) -> &[F] {
        &self.bias
    }

    pub fn logits(&self, features: &[F]) -> Vec<F> {
        let mut out = self.bias.clone();
        for (row, &x) in self.weights.chunks_exact(self.classes).zip(features) {
            if x != F::zero() {
                for (o, &w) in out.iter_mut().zip(row) {
                    *o = *o + w * x;
                }
            }
        }
        out
    }

    pub fn probabilities(&self, features: &[F]) -> Vec<F> {
        softmax(&self.logits(features))
    }

    /// Index of the largest score, lowest index on ties.
    pub fn predict(&self, features: &[F]) -> usize {
        argmax(&self.logits(features))
    }

    /// Weights then biases, as one flat parameter vector.
    fn param_mut(&mut self, idx: usize) -> &mut F {
        let nw = self.weights.len();
        if idx < nw {
            &mut self.weights[idx]
        } else {
            &mut self.bias[idx - nw]
        }
    }

    fn check(&self, records: &[FeatureRecord<F>]) -> Result<(), ClassifyError> {
        for r in records {
            if r.features.len() != self.inputs {
                return Err(ClassifyError::Dimension {
                    expected: self.inputs,
                    got: r.features.len(),
                });
            }
            if r.label >= self.classes {
                return Err(ClassifyError::Label {
                    label: r.label,
                    classes: self.classes,
                });
            }
        }
        Ok(())
    }
}

fn argmax<F: Real>(v: &[F]) -> usize {
    v.iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x > v[best] { i } else { best })
}

/// Normalized exponentials, computed after subtracting the largest logit.
pub fn softmax<F: Real>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum = exps.iter().copied().fold(F::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig<F> {
    /// Step size. Zero is accepted and leaves the initial weights in place.
    pub learning_rate: F,
    pub epochs: usize,
    pub batch_size: usize,
    /// Weight decay on the weights (not the bias).
    pub l2: F,
    pub seed: u64,
    pub classes: usize,
}

impl<F: Real> Default for TrainConfig<F> {
    fn default() -> Self {
        Self {
            learning_rate: F::of(0.01),
            epochs: 100,
            batch_size: 32,
            l2: F::zero(),
            seed: 0,
            classes: CLASSES,
        }
    }
}

impl<F: Real> TrainConfig<F> {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::InvalidConfig(m.to_owned()));
        if !(self.learning_rate >= F::zero()) || !self.learning_rate.is_finite() {
            return bad("learning rate must be finite and non-negative");
        }
        if !(self.l2 >= F::zero()) || !self.l2.is_finite() {
            return bad("l2 must be finite and non-negative");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch size must be positive");
        }
        if self.classes < 2 {
            return bad("need at least two classes");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Training<F> {
    pub model: LinearClassifier<F>,
    /// Full-dataset objective after every epoch.
    pub loss_trace: Vec<F>,
}

/// Gradient of the objective, laid out like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<F> {
    pub weights: Vec<F>,
    pub bias: Vec<F>,
}

fn log_sum_exp<F: Real>(logits: &[F]) -> F {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    max + logits.iter().fold(F::zero(), |a, &z| a + (z - max).exp()).ln()
}

/// Mean cross-entropy plus `l2 / 2 * |W|^2`.
pub fn loss<F: Real>(model: &LinearClassifier<F>, records: &[FeatureRecord<F>], l2: F) -> F {
    let n = F::from_usize(records.len()).expect("count fits");
    let ce = records.iter().fold(F::zero(), |acc, r| {
        let z = model.logits(&r.features);
        acc + log_sum_exp(&z) - z[r.label]
    }) / n;
    let sq = model.weights.iter().fold(F::zero(), |a, &w| a + w * w);
    ce + l2 * F::of(0.5) * sq
}

/// Analytic gradient of [`loss`].
pub fn gradient<F: Real>(model: &LinearClassifier<F>, records: &[FeatureRecord<F>], l2: F) -> Gradient<F> {
    let c = model.classes;
    let n = F::from_usize(records.len()).expect("count fits");
    let mut gw = vec![F::zero(); model.weights.len()];
    let mut gb = vec![F::zero(); c];
    for r in records {
        let mut err = model.probabilities(&r.features);
        err[r.label] = err[r.label] - F::one();
        for (b, &e) in gb.iter_mut().zip(&err) {
            *b = *b + e / n;
        }
        for (row, &x) in gw.chunks_exact_mut(c).zip(&r.features) {
            if x != F::zero() {
                let s = x / n;
                for (g, &e) in row.iter_mut().zip(&err) {
                    *g = *g + s * e;
                }
            }
        }
    }
    if l2 != F::zero() {
        for (g, &w) in gw.iter_mut().zip(&model.weights) {
            *g = *g + l2 * w;
        }
    }
    Gradient { weights: gw, bias: gb }
}

/// Mini-batch gradient descent on the mean cross-entropy.
///
/// The seed drives the initial weights (uniform in `[-0.01, 0.01]`, biases
/// zero) and the per-epoch shuffle, so equal inputs give bit-identical models.
pub fn train<F: Real>(records: &[FeatureRecord<F>], config: &TrainConfig<F>) -> Result<Training<F>, ClassifyError> {
    config.validate()?;
    let first = records.first().ok_or(ClassifyError::Empty)?;
    let mut model = LinearClassifier::zeros(first.features.len(), config.classes);
    model.check(records)?;
    for class in 0..config.classes {
        if !records.iter().any(|r| r.label == class) {
            return Err(ClassifyError::EmptyClass(class));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for w in &mut model.weights {
        *w = F::of(rng.random_range(-0.01..=0.01));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size);
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| records[i].clone()));
            let g = gradient(&model, &batch, config.l2);
            for (w, gw) in model.weights.iter_mut().zip(&g.weights) {
                *w = *w - config.learning_rate * *gw;
            }
            for (b, gb) in model.bias.iter_mut().zip(&g.bias) {
                *b = *b - config.learning_rate * *gb;
            }
        }
        let l = loss(&model, records, config.l2);
        if !l.is_finite() {
            return Err(ClassifyError::Diverged(epoch));
        }
        loss_trace.push(l);
    }
    Ok(Training { model, loss_trace })
}

/// Largest relative disagreement between [`gradient`] and central
/// differences (step 1e-5) over `samples` distinct parameters picked with
/// `seed` (at least 50, or all of them for small models).
///
/// Relative error is `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps
/// parameters with a vanishing gradient from reporting round-off as error.
pub fn gradient_check<F: Real>(
    model: &LinearClassifier<F>,
    records: &[FeatureRecord<F>],
    l2: F,
    samples: usize,
    seed: u64,
) -> Result<F, ClassifyError> {
    if records.is_empty() {
        return Err(ClassifyError::Empty);
    }
    model.check(records)?;
    let analytic = gradient(model, records, l2);
    let total = model.weights.len() + model.bias.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, total, samples.max(50).min(total));
    let h = F::of(1e-5);
    let floor = F::of(1e-6);
    let mut probe = model.clone();
    let mut worst = F::zero();
    for idx in picks {
        let a = if idx < analytic.weights.len() {
            analytic.weights[idx]
        } else {
            analytic.bias[idx - analytic.weights.len()]
        };
        let original = *probe.param_mut(idx);
        *probe.param_mut(idx) = original + h;
        let plus = loss(&probe, records, l2);
        *probe.param_mut(idx) = original - h;
        let minus = loss(&probe, records, l2);
        *probe.param_mut(idx) = original;
        let numeric = (plus - minus) / (h + h);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl Accuracy {
    fn new(correct: usize, total: usize) -> Self {
        Self {
            correct,
            total,
            accuracy: correct as f64 / total as f64,
        }
    }
}

/// Accuracy per enhancement condition, in [`Condition::ALL`] order, for the
/// conditions present in the evaluated records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyTable {
    pub conditions: Vec<(Condition, Accuracy)>,
    pub overall: Accuracy,
}

impl AccuracyTable {
    pub fn get(&self, condition: Condition) -> Option<Accuracy> {
        self.conditions.iter().find(|(c, _)| *c == condition).map(|(_, a)| *a)
    }
}

pub fn evaluate<F: Real>(model: &LinearClassifier<F>, records: &[FeatureRecord<F>]) -> Result<AccuracyTable, ClassifyError> {
    if records.is_empty() {
        return Err(ClassifyError::Empty);
    }
    model.check(records)?;
    let mut counts = [(0usize, 0usize); 4];
    for r in records {
        let slot = &mut counts[r.condition as usize];
        slot.1 += 1;
        if model.predict(&r.features) == r.label {
            slot.0 += 1;
        }
    }
    let conditions = Condition::ALL
        .into_iter()
        .zip(counts)
        .filter(|(_, (_, total))| *total > 0)
        .map(|(c, (ok, total))| (c, Accuracy::new(ok, total)))
        .collect();
    let (ok, total) = counts.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(AccuracyTable {
        conditions,
        overall: Accuracy::new(ok, total),
    })
}

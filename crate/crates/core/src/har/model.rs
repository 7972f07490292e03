//! Multinomial linear classifier trained by mini-batch gradient descent on
//! softmax cross-entropy with optional L2 weight decay.
//!
//! Training is seeded and bit-reproducible: batch order derives from one
//! generator, and the generator state is part of a training outcome so a
//! finetuning stage continues the exact stream a single longer run would
//! have used.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::Rng;

use super::features::FeatureVector;

/// One training example: features plus a label.
pub type Example = (FeatureVector, String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Stop after this many epochs without full-loss improvement, if set.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 1e-4,
            weight_decay: 0.0,
            batch_size: 32,
            seed: 0,
            patience: None,
        }
    }
}

/// Softmax linear classifier over a fixed label vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub labels: Vec<String>,
    pub dim: usize,
    /// Row-major `labels x dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training data is empty")]
    EmptyData,
    #[error("training needs at least 2 distinct labels, got {0}")]
    SingleLabel(usize),
    #[error("real data set is empty")]
    EmptyReal,
    #[error("feature dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label {0:?} is not in the model vocabulary")]
    UnknownLabel(String),
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

impl LinearModel {
    pub fn zeros(labels: Vec<String>, dim: usize) -> LinearModel {
        let n = labels.len();
        LinearModel {
            labels,
            dim,
            weights: vec![0.0; n * dim],
            bias: vec![0.0; n],
        }
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Raw scores `Wx + b`.
    pub fn scores(&self, x: &FeatureVector) -> Vec<f64> {
        let xs = x.as_slice();
        self.bias
            .iter()
            .enumerate()
            .map(|(c, &b)| {
                let row = &self.weights[c * self.dim..(c + 1) * self.dim];
                b + row.iter().zip(xs).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    /// Class probabilities (numerically stable softmax).
    pub fn softmax(&self, x: &FeatureVector) -> Vec<f64> {
        softmax_of(&self.scores(x))
    }

    /// Index of the best class; score ties break toward the lower index.
    pub fn predict_index(&self, x: &FeatureVector) -> usize {
        let scores = self.scores(x);
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        best
    }

    pub fn predict_label(&self, x: &FeatureVector) -> &str {
        &self.labels[self.predict_index(x)]
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

fn softmax_of(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn encode_labels(model: &LinearModel, data: &[Example]) -> Result<Vec<usize>, TrainError> {
    data.iter()
        .map(|(x, label)| {
            if x.dim() != model.dim {
                return Err(TrainError::DimensionMismatch {
                    expected: model.dim,
                    got: x.dim(),
                });
            }
            model
                .label_index(label)
                .ok_or_else(|| TrainError::UnknownLabel(label.clone()))
        })
        .collect()
}

/// Mean softmax cross-entropy over `data` plus `weight_decay * ||W||^2`,
/// with the analytic gradient in the same parameter layout as the model.
pub fn batch_loss_and_grad(
    model: &LinearModel,
    data: &[Example],
    weight_decay: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let ys = encode_labels(model, data)?;
    let n_labels = model.labels.len();
    let dim = model.dim;
    let mut grad_w = vec![0.0; n_labels * dim];
    let mut grad_b = vec![0.0; n_labels];
    let mut loss = 0.0;
    let inv_n = 1.0 / data.len() as f64;
    for ((x, _), &y) in data.iter().zip(&ys) {
        let probs = model.softmax(x);
        loss -= probs[y].ln();
        let xs = x.as_slice();
        for c in 0..n_labels {
            let delta = (probs[c] - if c == y { 1.0 } else { 0.0 }) * inv_n;
            grad_b[c] += delta;
            if delta != 0.0 {
                let row = &mut grad_w[c * dim..(c + 1) * dim];
                for (g, &v) in row.iter_mut().zip(xs) {
                    *g += delta * v;
                }
            }
        }
    }
    loss *= inv_n;
    if weight_decay != 0.0 {
        let norm_sq: f64 = model.weights.iter().map(|w| w * w).sum();
        loss += weight_decay * norm_sq;
        for (g, &w) in grad_w.iter_mut().zip(&model.weights) {
            *g += 2.0 * weight_decay * w;
        }
    }
    Ok((loss, grad_w, grad_b))
}

/// A finished training stage: the model, the full-data loss after each
/// epoch, and the generator state for exact continuation.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearModel,
    pub epoch_losses: Vec<f64>,
    pub rng: Rng,
}

fn validate_config(config: &TrainConfig) -> Result<(), TrainError> {
    if config.epochs == 0 {
        return Err(TrainError::InvalidConfig("epochs must be positive".into()));
    }
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(TrainError::InvalidConfig(
            "learning_rate must be positive".into(),
        ));
    }
    if config.batch_size == 0 {
        return Err(TrainError::InvalidConfig(
            "batch_size must be positive".into(),
        ));
    }
    Ok(())
}

fn train_loop(
    mut model: LinearModel,
    data: &[Example],
    config: &TrainConfig,
    mut rng: Rng,
) -> Result<TrainOutcome, TrainError> {
    let ys = encode_labels(&model, data)?;
    let n_labels = model.labels.len();
    let dim = model.dim;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0usize;
    for epoch in 0..config.epochs {
        // Shuffle from identity each epoch so a continued run reproduces the
        // exact batch stream of one longer run with the same generator.
        let mut order: Vec<usize> = (0..data.len()).collect();
        rng.shuffle(&mut order);
        for batch in order.chunks(config.batch_size) {
            let inv_b = 1.0 / batch.len() as f64;
            let mut grad_w = vec![0.0; n_labels * dim];
            let mut grad_b = vec![0.0; n_labels];
            for &i in batch {
                let (x, _) = &data[i];
                let probs = model.softmax(x);
                let xs = x.as_slice();
                for c in 0..n_labels {
                    let delta = (probs[c] - if c == ys[i] { 1.0 } else { 0.0 }) * inv_b;
                    grad_b[c] += delta;
                    if delta != 0.0 {
                        let row = &mut grad_w[c * dim..(c + 1) * dim];
                        for (g, &v) in row.iter_mut().zip(xs) {
                            *g += delta * v;
                        }
                    }
                }
            }
            if config.weight_decay != 0.0 {
                for (g, &w) in grad_w.iter_mut().zip(&model.weights) {
                    *g += 2.0 * config.weight_decay * w;
                }
            }
            for (w, g) in model.weights.iter_mut().zip(&grad_w) {
                *w -= config.learning_rate * g;
            }
            for (b, g) in model.bias.iter_mut().zip(&grad_b) {
                *b -= config.learning_rate * g;
            }
        }
        let (loss, _, _) = batch_loss_and_grad(&model, data, config.weight_decay)?;
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch });
        }
        epoch_losses.push(loss);
        if let Some(patience) = config.patience {
            if loss < best - 1e-12 {
                best = loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok(TrainOutcome {
        model,
        epoch_losses,
        rng,
    })
}

fn label_vocabulary(data: &[Example]) -> Vec<String> {
    let mut labels: Vec<String> = data.iter().map(|(_, l)| l.clone()).collect();
    labels.sort();
    labels.dedup();
    labels
}

/// Train a fresh model; the label vocabulary is the sorted distinct labels
/// of the data.
pub fn train(data: &[Example], config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    let labels = label_vocabulary(data);
    train_with_labels(data, labels, config)
}

/// Train a fresh model over a fixed label vocabulary (which may include
/// labels absent from this data set).
pub fn train_with_labels(
    data: &[Example],
    labels: Vec<String>,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    validate_config(config)?;
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    if labels.len() < 2 {
        return Err(TrainError::SingleLabel(labels.len()));
    }
    let dim = data[0].0.dim();
    let model = LinearModel::zeros(labels, dim);
    train_loop(model, data, config, Rng::new(config.seed))
}

/// Continue training an existing model (all parameters updated), resuming
/// the provided generator state.
pub fn continue_training(
    model: LinearModel,
    rng: Rng,
    data: &[Example],
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    validate_config(config)?;
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    train_loop(model, data, config, rng)
}

/// Pretrain on virtual data, then finetune on real data with all weights
/// updated. The label vocabulary is the union of both sets, so pretraining
/// with `virtual == real` is exactly a single run of twice the epochs.
/// An empty virtual set degenerates to plain training on the real set.
pub fn pretrain_finetune(
    virtual_data: &[Example],
    real_data: &[Example],
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if real_data.is_empty() {
        return Err(TrainError::EmptyReal);
    }
    if virtual_data.is_empty() {
        return train(real_data, config);
    }
    let mut labels = label_vocabulary(virtual_data);
    labels.extend(label_vocabulary(real_data));
    labels.sort();
    labels.dedup();
    let pretrained = train_with_labels(virtual_data, labels, config)?;
    continue_training(pretrained.model, pretrained.rng, real_data, config)
}

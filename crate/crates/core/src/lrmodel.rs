//! Logistic regression, written out rather than imported: the hypothesis,
//! loss, and gradient are the quantities under test here, and the gradient is
//! independently checked against finite differences. Training is full-batch
//! gradient descent from a zero vector — no stochastic element anywhere, so a
//! given dataset and configuration always produce bit-identical parameters.
//!
//! A trained model owns its feature scaling: the z-score statistics fitted on
//! the training set are stored in the model file and applied to every input
//! at prediction time. Callers always hand raw feature vectors to the model.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::evidence::Label;
use crate::featurizer::{
    apply_norm, dataset_digest, fit_norm_stats, FeatureError, FeatureVector, NormStats,
    FEATURE_COUNT, FEATURE_SCHEMA_VERSION, NORMALIZED_FEATURES,
};

/// Probabilities are clamped this far from 0 and 1 so the log-loss stays
/// finite even for saturated inputs.
const PROB_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LrError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training needs both classes; dataset has only {0} examples")]
    SingleClassDataset(Label),
    #[error("vector {key} has no label")]
    Unlabeled { key: String },
    #[error("parameter/feature mismatch: {theta_len} parameters cannot score {feature_len} features")]
    SchemaMismatch { theta_len: usize, feature_len: usize },
    #[error("training diverged at epoch {epoch}: loss rose {streak} epochs in a row")]
    DivergenceDetected { epoch: usize, streak: usize },
    #[error("vector is already normalized; raw features expected (the model scales internally)")]
    AlreadyNormalized,
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("model file {path} is invalid: {reason}")]
    ModelInvalid { path: String, reason: String },
    #[error("model i/o failure at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Gradient-descent settings. The defaults converge on every corpus this
/// repository generates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop when the epoch-over-epoch loss change falls below this.
    pub tolerance: f64,
    /// L2 penalty weight; 0 disables regularization. The bias is never
    /// penalized.
    pub l2: f64,
    /// Decision threshold: phishing when probability >= threshold.
    pub threshold: f64,
    /// Recorded for provenance only. Full-batch descent from zeros is
    /// deterministic and never draws a random number.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            max_epochs: 5000,
            tolerance: 1e-10,
            l2: 0.0,
            threshold: 0.5,
            seed: 0,
        }
    }
}

/// Sigmoid of the affine score `theta[0] + theta[1..] . x`, clamped away
/// from exact 0 and 1.
pub fn hypothesis(theta: &[f64], features: &[f64]) -> Result<f64, LrError> {
    if theta.len() != features.len() + 1 {
        return Err(LrError::SchemaMismatch {
            theta_len: theta.len(),
            feature_len: features.len(),
        });
    }
    let z = theta[0]
        + theta[1..]
            .iter()
            .zip(features)
            .map(|(w, x)| w * x)
            .sum::<f64>();
    let p = 1.0 / (1.0 + (-z).exp());
    Ok(p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON))
}

fn check_labeled(data: &[FeatureVector]) -> Result<(), LrError> {
    if data.is_empty() {
        return Err(LrError::EmptyDataset);
    }
    for v in data {
        if v.label.is_none() {
            return Err(LrError::Unlabeled { key: v.key.clone() });
        }
    }
    Ok(())
}

/// Mean binary cross-entropy over the dataset plus, when `l2 > 0`, the ridge
/// penalty `l2/(2m) * sum(theta[1..]^2)`.
pub fn loss(theta: &[f64], data: &[FeatureVector], l2: f64) -> Result<f64, LrError> {
    check_labeled(data)?;
    let m = data.len() as f64;
    let mut total = 0.0;
    for v in data {
        let h = hypothesis(theta, &v.values)?;
        let y = v.label.expect("checked above").as_f64();
        total += y * h.ln() + (1.0 - y) * (1.0 - h).ln();
    }
    let penalty = if l2 > 0.0 {
        l2 / (2.0 * m) * theta[1..].iter().map(|w| w * w).sum::<f64>()
    } else {
        0.0
    };
    Ok(-total / m + penalty)
}

/// Gradient of [`loss`] with respect to every parameter, bias first:
/// `(1/m) * sum((h - y) * x_j)` with `x_0 = 1`, plus `(l2/m) * theta[j]`
/// for the non-bias parameters.
pub fn gradient(theta: &[f64], data: &[FeatureVector], l2: f64) -> Result<Vec<f64>, LrError> {
    check_labeled(data)?;
    let m = data.len() as f64;
    let mut grad = vec![0.0; theta.len()];
    for v in data {
        let h = hypothesis(theta, &v.values)?;
        let residual = h - v.label.expect("checked above").as_f64();
        grad[0] += residual;
        for (g, x) in grad[1..].iter_mut().zip(&v.values) {
            *g += residual * x;
        }
    }
    for g in grad.iter_mut() {
        *g /= m;
    }
    if l2 > 0.0 {
        for (g, w) in grad[1..].iter_mut().zip(&theta[1..]) {
            *g += l2 / m * w;
        }
    }
    Ok(grad)
}

/// A classification with its underlying probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub label: Label,
}

/// Trained classifier plus everything needed to apply and audit it: the
/// fitted scaling, the schema it expects, the training configuration, and a
/// digest of the dataset it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    /// Bias followed by one weight per feature (14 parameters).
    pub theta: Vec<f64>,
    pub norm_stats: NormStats,
    pub feature_schema_version: String,
    pub threshold: f64,
    pub config: TrainConfig,
    pub trained_epochs: usize,
    pub final_loss: f64,
    /// Digest of the raw training dataset (see `featurizer::dataset_digest`).
    pub training_digest: String,
}

impl LrModel {
    /// Score one raw vector: apply the stored scaling, then the hypothesis.
    pub fn predict(&self, vector: &FeatureVector) -> Result<Prediction, LrError> {
        if vector.normalized {
            return Err(LrError::AlreadyNormalized);
        }
        let mut x = vector.values;
        for idx in NORMALIZED_FEATURES {
            x[idx] = (x[idx] - self.norm_stats.mean[idx]) / self.norm_stats.std[idx];
        }
        let probability = hypothesis(&self.theta, &x)?;
        let label = if probability >= self.threshold {
            Label::Phishing
        } else {
            Label::Benign
        };
        Ok(Prediction { probability, label })
    }

    pub fn save(&self, path: &Path) -> Result<(), LrError> {
        let io_err = |source| LrError::Io {
            path: path.display().to_string(),
            source,
        };
        let json = serde_json::to_string_pretty(self).map_err(|e| LrError::ModelInvalid {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        std::fs::write(path, json + "\n").map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<LrModel, LrError> {
        let text = std::fs::read_to_string(path).map_err(|source| LrError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let invalid = |reason: String| LrError::ModelInvalid {
            path: path.display().to_string(),
            reason,
        };
        let model: LrModel =
            serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
        if model.feature_schema_version != FEATURE_SCHEMA_VERSION {
            return Err(invalid(format!(
                "feature schema {:?} does not match this build's {:?}",
                model.feature_schema_version, FEATURE_SCHEMA_VERSION
            )));
        }
        if model.theta.len() != FEATURE_COUNT + 1 {
            return Err(invalid(format!(
                "expected {} parameters, found {}",
                FEATURE_COUNT + 1,
                model.theta.len()
            )));
        }
        if !model.theta.iter().all(|w| w.is_finite()) {
            return Err(invalid("non-finite parameter".to_owned()));
        }
        if !(model.threshold > 0.0 && model.threshold < 1.0) {
            return Err(invalid(format!("threshold {} outside (0, 1)", model.threshold)));
        }
        Ok(model)
    }
}

/// [`train_with_trace`] without the trace.
pub fn train(data: &[FeatureVector], cfg: &TrainConfig) -> Result<LrModel, LrError> {
    train_with_trace(data, cfg).map(|(model, _)| model)
}

/// Fit scaling, then run full-batch gradient descent from a zero parameter
/// vector. Returns the model and the loss value per epoch (index 0 is the
/// loss at the zero vector, before the first update).
pub fn train_with_trace(
    data: &[FeatureVector],
    cfg: &TrainConfig,
) -> Result<(LrModel, Vec<f64>), LrError> {
    check_labeled(data)?;
    if data.iter().any(|v| v.normalized) {
        return Err(LrError::AlreadyNormalized);
    }
    let first = data[0].label.expect("checked above");
    if data.iter().all(|v| v.label == Some(first)) {
        return Err(LrError::SingleClassDataset(first));
    }

    let training_digest = dataset_digest(data);
    let norm_stats = fit_norm_stats(data)?;
    let mut scaled = data.to_vec();
    apply_norm(&mut scaled, &norm_stats)?;

    let mut theta = vec![0.0; FEATURE_COUNT + 1];
    let mut trace = vec![loss(&theta, &scaled, cfg.l2)?];
    let mut rising_streak = 0usize;
    let mut epochs_run = 0usize;
    for epoch in 1..=cfg.max_epochs {
        let grad = gradient(&theta, &scaled, cfg.l2)?;
        for (w, g) in theta.iter_mut().zip(&grad) {
            *w -= cfg.learning_rate * g;
        }
        let current = loss(&theta, &scaled, cfg.l2)?;
        let previous = *trace.last().expect("trace starts non-empty");
        trace.push(current);
        epochs_run = epoch;
        if current > previous {
            rising_streak += 1;
            if rising_streak >= 10 {
                return Err(LrError::DivergenceDetected {
                    epoch,
                    streak: rising_streak,
                });
            }
        } else {
            rising_streak = 0;
        }
        if (current - previous).abs() < cfg.tolerance {
            break;
        }
    }

    let final_loss = *trace.last().expect("non-empty");
    let model = LrModel {
        theta,
        norm_stats,
        feature_schema_version: FEATURE_SCHEMA_VERSION.to_owned(),
        threshold: cfg.threshold,
        config: cfg.clone(),
        trained_epochs: epochs_run,
        final_loss,
        training_digest,
    };
    Ok((model, trace))
}

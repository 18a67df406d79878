//! Training objective: contrastive label smoothing targets, cross
//! entropy, the overconfidence penalty, and their combination.
//!
//! All functions here are pure and operate on f64 probability vectors at
//! the single scoring position. The predicted distribution entering both
//! the cross entropy and the penalty is the softmax of the backend
//! logits; inference aggregates raw logits instead (see
//! [`crate::inference`]).

use serde::{Deserialize, Serialize};

use crate::backend::LogitVector;
use crate::error::{Error, Result};
use crate::verbalizer::TrainingVerbalizer;

/// Floor inside `log` so a zero predicted probability cannot produce an
/// infinite loss; gradient contributions at or below the floor are
/// clamped to zero.
pub const LOG_FLOOR: f64 = 1e-12;

/// Smoothing mass and penalty coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Collective probability moved off the true-class label tokens,
    /// in `[0, 1)`.
    pub epsilon: f64,
    /// Penalty coefficient, `>= 0`.
    pub alpha: f64,
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be in [0, 1), got {}",
                self.epsilon
            )));
        }
        if self.alpha < 0.0 || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            alpha: 1.0,
        }
    }
}

/// Target probability vector over the full vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution {
    probs: Vec<f64>,
    true_class: usize,
}

impl TargetDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn true_class(&self) -> usize {
        self.true_class
    }
}

/// Softmax output of the model logits.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedDistribution {
    probs: Vec<f64>,
}

impl PredictedDistribution {
    /// Numerically stable softmax of the logits.
    pub fn from_logits(logits: &LogitVector) -> Self {
        Self {
            probs: softmax(logits.values()),
        }
    }

    /// Wraps an explicit probability vector; entries must be
    /// non-negative, finite, and sum to one within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidConfig("empty probability vector".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidConfig(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Contrastive label smoothing target for one sample.
///
/// With `T_c` the per-class label token sets and `c*` the true class,
/// the target places `(1 - epsilon) / |T_c*|` on each true-class token,
/// exactly zero on every other class's tokens, and spreads `epsilon`
/// uniformly over the tokens outside every label set.
pub fn smooth_targets(
    verbalizer: &TrainingVerbalizer,
    true_class: usize,
    epsilon: f64,
    vocab_size: usize,
) -> Result<TargetDistribution> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be in [0, 1), got {epsilon}"
        )));
    }
    if true_class >= verbalizer.classes().len() {
        return Err(Error::UnknownClass {
            class: format!("#{true_class}"),
        });
    }
    let label_tokens = verbalizer.total_label_tokens();
    if vocab_size <= label_tokens {
        return Err(Error::DegenerateSmoothing {
            vocab_size,
            label_tokens,
        });
    }
    let max_id = verbalizer
        .classes()
        .iter()
        .enumerate()
        .flat_map(|(i, _)| verbalizer.token_set(i).iter())
        .map(|id| id.index())
        .max()
        .unwrap_or(0);
    if max_id >= vocab_size {
        return Err(Error::DimensionMismatch {
            expected: vocab_size,
            got: max_id + 1,
        });
    }

    let true_set = verbalizer.token_set(true_class);
    let true_mass = (1.0 - epsilon) / true_set.len() as f64;
    let rest_mass = epsilon / (vocab_size - label_tokens) as f64;

    let mut probs = vec![rest_mass; vocab_size];
    for (idx, _) in verbalizer.classes().iter().enumerate() {
        for id in verbalizer.token_set(idx) {
            probs[id.index()] = if idx == true_class { true_mass } else { 0.0 };
        }
    }
    Ok(TargetDistribution {
        probs,
        true_class,
    })
}

/// Cross entropy `-sum_t y_t log(max(yhat_t, LOG_FLOOR))`, summed over
/// the target's support only.
pub fn cross_entropy(predicted: &PredictedDistribution, target: &TargetDistribution) -> Result<f64> {
    if predicted.probs.len() != target.probs.len() {
        return Err(Error::DimensionMismatch {
            expected: target.probs.len(),
            got: predicted.probs.len(),
        });
    }
    let mut total = 0.0;
    for (y, p) in target.probs.iter().zip(&predicted.probs) {
        if *y > 0.0 {
            total -= y * p.max(LOG_FLOOR).ln();
        }
    }
    Ok(total)
}

/// Overconfidence penalty: the pooled mean predicted probability of all
/// other classes' label tokens divided by the mean over the true class's
/// tokens. The numerator pools every non-true token into one division by
/// the total count, not a mean of per-class means.
pub fn overconfidence_penalty(
    predicted: &PredictedDistribution,
    verbalizer: &TrainingVerbalizer,
    true_class: usize,
) -> Result<f64> {
    if verbalizer.classes().len() < 2 {
        return Err(Error::PenaltyUndefined);
    }
    if true_class >= verbalizer.classes().len() {
        return Err(Error::UnknownClass {
            class: format!("#{true_class}"),
        });
    }
    let mut other_sum = 0.0;
    let mut other_count = 0usize;
    let mut true_sum = 0.0;
    let true_set = verbalizer.token_set(true_class);
    for (idx, _) in verbalizer.classes().iter().enumerate() {
        for id in verbalizer.token_set(idx) {
            let p = predicted.probs[id.index()];
            if idx == true_class {
                true_sum += p;
            } else {
                other_sum += p;
                other_count += 1;
            }
        }
    }
    let numerator = other_sum / other_count as f64;
    let denominator = true_sum / true_set.len() as f64;
    Ok(numerator / denominator)
}

/// Cross entropy, penalty, and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossParts {
    pub total: f64,
    pub cross_entropy: f64,
    pub penalty: f64,
}

/// Full training loss `CE + alpha * penalty`; the parts are returned
/// separately for logging and ablations.
pub fn composite_loss(
    predicted: &PredictedDistribution,
    target: &TargetDistribution,
    verbalizer: &TrainingVerbalizer,
    config: &LossConfig,
) -> Result<LossParts> {
    config.validate()?;
    let ce = cross_entropy(predicted, target)?;
    let penalty = overconfidence_penalty(predicted, verbalizer, target.true_class)?;
    Ok(LossParts {
        total: ce + config.alpha * penalty,
        cross_entropy: ce,
        penalty,
    })
}

/// Computes the loss and its exact gradient with respect to the logits.
///
/// Both the cross entropy and the penalty are functions of the softmax
/// probabilities; the chain rule through softmax uses
/// `dL/dz_j = p_j (v_j - sum_t v_t p_t)` where `v = dL/dp`.
pub fn loss_and_logit_gradient(
    logits: &LogitVector,
    target: &TargetDistribution,
    verbalizer: &TrainingVerbalizer,
    config: &LossConfig,
) -> Result<(LossParts, Vec<f64>)> {
    if logits.len() != target.probs.len() {
        return Err(Error::DimensionMismatch {
            expected: target.probs.len(),
            got: logits.len(),
        });
    }
    let predicted = PredictedDistribution::from_logits(logits);
    let parts = composite_loss(&predicted, target, verbalizer, config)?;
    let p = predicted.probs();
    let true_class = target.true_class;

    // v = d loss / d p
    let mut v = vec![0f64; p.len()];
    for (t, y) in target.probs.iter().enumerate() {
        // clamp: no gradient through the log floor
        if *y > 0.0 && p[t] > LOG_FLOOR {
            v[t] -= y / p[t];
        }
    }
    if config.alpha != 0.0 {
        let true_set = verbalizer.token_set(true_class);
        let mut other_sum = 0.0;
        let mut other_count = 0usize;
        let mut true_sum = 0.0;
        for (idx, _) in verbalizer.classes().iter().enumerate() {
            for id in verbalizer.token_set(idx) {
                if idx == true_class {
                    true_sum += p[id.index()];
                } else {
                    other_sum += p[id.index()];
                    other_count += 1;
                }
            }
        }
        let a = other_sum / other_count as f64;
        let b = true_sum / true_set.len() as f64;
        for (idx, _) in verbalizer.classes().iter().enumerate() {
            for id in verbalizer.token_set(idx) {
                if idx == true_class {
                    v[id.index()] += config.alpha * (-a / (b * b * true_set.len() as f64));
                } else {
                    v[id.index()] += config.alpha / (other_count as f64 * b);
                }
            }
        }
    }

    let dot: f64 = v.iter().zip(p).map(|(vi, pi)| vi * pi).sum();
    let grad: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi * (vi - dot)).collect();
    Ok((parts, grad))
}

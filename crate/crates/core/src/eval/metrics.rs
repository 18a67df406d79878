//! Classification metrics.

use serde::Serialize;

use crate::error::{Error, Result};

/// Fraction of predictions exactly matching gold.
pub fn accuracy(predictions: &[String], gold: &[String]) -> Result<f64> {
    if predictions.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            got: predictions.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::InvalidConfig("empty prediction set".into()));
    }
    let correct = predictions
        .iter()
        .zip(gold)
        .filter(|(p, g)| p == g)
        .count();
    Ok(correct as f64 / gold.len() as f64)
}

/// Per-class precision/recall/F1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassF1 {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences of the class.
    pub support: usize,
    /// True when the class appears in neither gold nor predictions; its
    /// F1 is 0 by convention and should be read with that flag in mind.
    pub degenerate: bool,
}

/// Per-class F1 over the given catalog plus the unweighted macro
/// average. Precision, recall, and F1 fall back to 0 where undefined.
pub fn macro_f1(
    predictions: &[String],
    gold: &[String],
    classes: &[String],
) -> Result<(Vec<ClassF1>, f64)> {
    if predictions.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            got: predictions.len(),
        });
    }
    if classes.is_empty() {
        return Err(Error::InvalidConfig("empty class catalog".into()));
    }
    let mut per_class = Vec::with_capacity(classes.len());
    for class in classes {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (p, g) in predictions.iter().zip(gold) {
            match (p == class, g == class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            tp as f64 / (tp + fn_) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassF1 {
            class: class.clone(),
            precision,
            recall,
            f1,
            support: tp + fn_,
            degenerate: tp + fp + fn_ == 0,
        });
    }
    let macro_avg = per_class.iter().map(|c| c.f1).sum::<f64>() / per_class.len() as f64;
    Ok((per_class, macro_avg))
}

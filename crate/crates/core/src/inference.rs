//! Nonparametric zero-shot prediction.
//!
//! A class score is the weighted sum of the model's outputs over that
//! class's inference neighborhood, and the prediction is the argmax with
//! ties broken by class order. By default the weights apply to raw
//! logits; `AggregateOn::Probs` switches to softmax probabilities, under
//! which k = 1 reduces to the classic single-token verbalizer argmax.

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, LogitVector, ScoringRequest};
use crate::error::{Error, Result};
use crate::eval::corpus::LabeledCorpus;
use crate::eval::metrics::accuracy;
use crate::objective::softmax;
use crate::prompt::SoftPrompt;
use crate::verbalizer::{build_inference_verbalizer, InferenceVerbalizer};

/// What the neighborhood weights are applied to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateOn {
    #[default]
    Logits,
    Probs,
}

/// Per-class aggregated scores, in class order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    entries: Vec<(String, f64)>,
}

impl ClassScores {
    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    /// Scores as an ordered JSON object, for prediction records.
    pub fn to_json_map(&self) -> serde_json::Map<String, serde_json::Value> {
        self.entries
            .iter()
            .map(|(c, s)| (c.clone(), serde_json::json!(s)))
            .collect()
    }
}

/// Weighted aggregation of the scoring output over each class's
/// neighborhood.
pub fn aggregate_scores(
    logits: &LogitVector,
    verbalizer: &InferenceVerbalizer,
    mode: AggregateOn,
) -> Result<ClassScores> {
    for class_idx in 0..verbalizer.classes().len() {
        for entry in verbalizer.neighborhood(class_idx) {
            if entry.token.index() >= logits.len() {
                return Err(Error::DimensionMismatch {
                    expected: logits.len(),
                    got: entry.token.index() + 1,
                });
            }
        }
    }
    let values: Vec<f64> = match mode {
        AggregateOn::Logits => logits.values().to_vec(),
        AggregateOn::Probs => softmax(logits.values()),
    };
    let entries = verbalizer
        .classes()
        .iter()
        .enumerate()
        .map(|(idx, class)| {
            let score = verbalizer
                .neighborhood(idx)
                .iter()
                .map(|w| w.weight * values[w.token.index()])
                .sum();
            (class.clone(), score)
        })
        .collect();
    Ok(ClassScores { entries })
}

/// Class with the maximal score; exact ties go to the earlier class.
pub fn predict(scores: &ClassScores) -> Result<&str> {
    let mut best: Option<(&str, f64)> = None;
    for (class, score) in &scores.entries {
        match best {
            Some((_, s)) if *score <= s => {}
            _ => best = Some((class, *score)),
        }
    }
    best.map(|(c, _)| c)
        .ok_or_else(|| Error::InvalidConfig("no class scores".into()))
}

/// Full pipeline for one document: tokenize, score with the prompt
/// appended, aggregate, argmax. Inputs longer than the backend budget
/// are truncated from the tail.
pub fn classify(
    text: &str,
    prompt: &SoftPrompt,
    verbalizer: &InferenceVerbalizer,
    backend: &dyn Backend,
    mode: AggregateOn,
) -> Result<(String, ClassScores)> {
    let descriptor = backend.descriptor();
    let mut input = backend.tokenizer().tokenize(text);
    if input.is_empty() {
        return Err(Error::UnknownSurface {
            surface: text.to_string(),
        });
    }
    if descriptor.max_length <= prompt.len() {
        return Err(Error::InputTooLong {
            got: prompt.len() + 1,
            limit: descriptor.max_length,
            prompt_len: prompt.len(),
        });
    }
    input.truncate(descriptor.max_length - prompt.len());
    let request = ScoringRequest::new(&input, prompt, descriptor.kind);
    let logits = backend.score(&request)?;
    let scores = aggregate_scores(&logits, verbalizer, mode)?;
    let predicted = predict(&scores)?.to_string();
    Ok((predicted, scores))
}

/// Predictions for every example of a corpus, aligned with
/// `corpus.examples`.
pub fn classify_corpus(
    corpus: &LabeledCorpus,
    prompt: &SoftPrompt,
    verbalizer: &InferenceVerbalizer,
    backend: &dyn Backend,
    mode: AggregateOn,
) -> Result<Vec<String>> {
    corpus
        .examples
        .iter()
        .map(|ex| classify(&ex.text, prompt, verbalizer, backend, mode).map(|(p, _)| p))
        .collect()
}

/// One prediction output line: `{"id", "predicted_class", "scores"}`.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionRecord {
    pub id: String,
    pub predicted_class: String,
    pub scores: serde_json::Map<String, serde_json::Value>,
}

impl PredictionRecord {
    pub fn new(id: impl Into<String>, predicted: impl Into<String>, scores: &ClassScores) -> Self {
        Self {
            id: id.into(),
            predicted_class: predicted.into(),
            scores: scores.to_json_map(),
        }
    }
}

/// Accuracy of one candidate neighborhood size on each development set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSweepOutcome {
    pub k: usize,
    pub per_set_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSweepResult {
    pub outcomes: Vec<KSweepOutcome>,
    /// Candidate with the highest mean accuracy; ties go to the
    /// smallest k.
    pub chosen_k: usize,
}

/// Evaluates each candidate neighborhood size on the development sets
/// (one per language) and picks the best mean accuracy.
pub fn sweep_k(
    candidates: &[usize],
    dev_sets: &[&LabeledCorpus],
    prompt: &SoftPrompt,
    backend: &dyn Backend,
    class_labels: &[(String, String)],
    mode: AggregateOn,
) -> Result<KSweepResult> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no k candidates".into()));
    }
    if dev_sets.is_empty() || dev_sets.iter().any(|c| c.examples.is_empty()) {
        return Err(Error::InvalidConfig("development sets must be non-empty".into()));
    }
    let table = backend.embedding_table();
    let tokenizer = backend.tokenizer();
    let mut outcomes = Vec::with_capacity(candidates.len());
    for &k in candidates {
        let verbalizer = build_inference_verbalizer(class_labels, table, tokenizer, k)?;
        let mut per_set = Vec::with_capacity(dev_sets.len());
        for corpus in dev_sets {
            let mut predictions = Vec::with_capacity(corpus.examples.len());
            let mut gold = Vec::with_capacity(corpus.examples.len());
            for ex in &corpus.examples {
                let (predicted, _) = classify(&ex.text, prompt, &verbalizer, backend, mode)?;
                predictions.push(predicted);
                gold.push(ex.label.clone());
            }
            per_set.push(accuracy(&predictions, &gold)?);
        }
        let mean = per_set.iter().sum::<f64>() / per_set.len() as f64;
        outcomes.push(KSweepOutcome {
            k,
            per_set_accuracy: per_set,
            mean_accuracy: mean,
        });
    }
    let mut chosen = &outcomes[0];
    for outcome in &outcomes[1..] {
        let better = outcome.mean_accuracy > chosen.mean_accuracy
            || (outcome.mean_accuracy == chosen.mean_accuracy && outcome.k < chosen.k);
        if better {
            chosen = outcome;
        }
    }
    let chosen_k = chosen.k;
    Ok(KSweepResult { outcomes, chosen_k })
}

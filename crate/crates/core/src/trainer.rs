//! Few-shot soft prompt training.
//!
//! Only the prompt matrix receives gradients; the backend stays frozen
//! throughout. Optimization is AdamW over the flattened prompt with f64
//! moment state, updating the f32-stored parameters each step. Runs are
//! deterministic: identical config, samples and backend produce an
//! identical final prompt.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, ScoringRequest};
use crate::defaults::DEFAULT_INIT_TEXT;
use crate::embedding::TokenId;
use crate::error::{Error, Result};
use crate::eval::corpus::LabeledCorpus;
use crate::objective::{smooth_targets, loss_and_logit_gradient, LossConfig, TargetDistribution};
use crate::prompt::SoftPrompt;
use crate::seeds::{derive_seed, seeded_rng};
use crate::verbalizer::TrainingVerbalizer;

/// How the prompt matrix is initialized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptInit {
    /// Embedding rows of the tokenized text, in order. The tokenized
    /// length wins over the configured prompt length.
    Text(String),
    /// `prompt_length` rows drawn from N(0, 0.02).
    Random,
}

impl Default for PromptInit {
    fn default() -> Self {
        PromptInit::Text(DEFAULT_INIT_TEXT.to_string())
    }
}

/// First-order optimizer settings. AdamW with decoupled weight decay is
/// the only supported method; only the prompt parameters are registered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub method: String,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Max-norm gradient clipping; off by default, useful for real
    /// backends.
    pub clip_norm: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: "adamw".into(),
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            clip_norm: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.method.eq_ignore_ascii_case("adamw") {
            return Err(Error::InvalidConfig(format!(
                "unsupported optimizer {:?}, only \"adamw\" is available",
                self.method
            )));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be in [0, 1), got {beta}"
                )));
            }
        }
        if self.eps <= 0.0 || self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig(
                "eps must be positive and weight_decay non-negative".into(),
            ));
        }
        if let Some(c) = self.clip_norm {
            if c <= 0.0 {
                return Err(Error::InvalidConfig("clip_norm must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub loss: LossConfig,
    /// Advisory when initializing from text: the tokenized length wins
    /// and is recorded on the prompt. Binding for random initialization.
    pub prompt_length: usize,
    pub shots_per_class: usize,
    pub seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub prompt_init: PromptInit,
    /// Optional cap on the total number of optimization steps; `None`
    /// runs the full `epochs * ceil(N / batch_size)`.
    #[serde(default)]
    pub max_steps: Option<u64>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.prompt_length == 0 || self.shots_per_class == 0 {
            return Err(Error::InvalidConfig(
                "batch_size, prompt_length and shots_per_class must be >= 1".into(),
            ));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        self.loss.validate()?;
        self.optimizer.validate()?;
        if let PromptInit::Text(text) = &self.prompt_init {
            if text.trim().is_empty() {
                return Err(Error::InvalidConfig("prompt init text is empty".into()));
            }
        }
        Ok(())
    }
}

/// One training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotSample {
    pub id: String,
    pub text: String,
    pub class: String,
    pub language: String,
}

/// Per-step loss record. Serialized to JSON lines as
/// `{"step", "ce", "omega", "total"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub ce: f64,
    #[serde(rename = "omega")]
    pub penalty: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub steps: Vec<StepRecord>,
}

impl TrainingLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.steps {
            out.push_str(&serde_json::to_string(record).expect("step record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    /// Mean total loss over a step range (0-based, half-open).
    pub fn mean_total(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.steps[range];
        slice.iter().map(|s| s.total).sum::<f64>() / slice.len() as f64
    }
}

/// Prompt rows from the embedding rows of the tokenized text, in order.
/// The prompt length is the token count; unknown words contribute the
/// unknown token's row.
pub fn init_prompt_from_text(text: &str, backend: &dyn Backend) -> Result<SoftPrompt> {
    let ids = backend.tokenizer().tokenize(text);
    if ids.is_empty() {
        return Err(Error::UnknownSurface {
            surface: text.to_string(),
        });
    }
    let table = backend.embedding_table();
    let rows = ids.iter().map(|id| table.row(*id).to_vec()).collect();
    SoftPrompt::from_rows(rows, text)
}

/// Random prompt of `length` rows drawn from N(0, 0.02).
pub fn random_prompt(length: usize, backend: &dyn Backend, seed: u64) -> Result<SoftPrompt> {
    let dim = backend.descriptor().dim;
    let mut rng = seeded_rng(seed, "prompt-init");
    let normal = Normal::new(0.0f64, 0.02).expect("valid distribution");
    let rows = (0..length)
        .map(|_| (0..dim).map(|_| normal.sample(&mut rng) as f32).collect())
        .collect();
    SoftPrompt::from_rows(rows, "random")
}

/// Initial prompt per the configured strategy.
pub fn initialize_prompt(config: &TrainConfig, backend: &dyn Backend) -> Result<SoftPrompt> {
    match &config.prompt_init {
        PromptInit::Text(text) => init_prompt_from_text(text, backend),
        PromptInit::Random => random_prompt(
            config.prompt_length,
            backend,
            derive_seed(config.seed, "random-prompt"),
        ),
    }
}

/// Draws `shots` examples per class without replacement, deterministic
/// per seed. Per-class selections use independent derived streams, so
/// the draw for one class is unaffected by the others.
pub fn sample_few_shot(
    corpus: &LabeledCorpus,
    shots: usize,
    seed: u64,
) -> Result<Vec<FewShotSample>> {
    let mut selected = Vec::with_capacity(shots * corpus.classes.len());
    for class in &corpus.classes {
        let mut indices: Vec<usize> = corpus
            .examples
            .iter()
            .enumerate()
            .filter(|(_, ex)| &ex.label == class)
            .map(|(i, _)| i)
            .collect();
        if indices.len() < shots {
            return Err(Error::NotEnoughShots {
                class: class.clone(),
                available: indices.len(),
                requested: shots,
            });
        }
        let mut rng = seeded_rng(seed, &format!("few-shot/{class}"));
        indices.shuffle(&mut rng);
        for i in indices.into_iter().take(shots) {
            let ex = &corpus.examples[i];
            selected.push(FewShotSample {
                id: ex.id.clone(),
                text: ex.text.clone(),
                class: ex.label.clone(),
                language: ex.language.clone(),
            });
        }
    }
    let mut rng = seeded_rng(seed, "few-shot/order");
    selected.shuffle(&mut rng);
    Ok(selected)
}

struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
    config: OptimizerConfig,
}

impl AdamW {
    fn new(param_count: usize, lr: f64, config: OptimizerConfig) -> Self {
        Self {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
            lr,
            config,
        }
    }

    fn step(&mut self, params: &mut [f32], grad: &[f64]) {
        let mut scale = 1.0;
        if let Some(max_norm) = self.config.clip_norm {
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > max_norm {
                scale = max_norm / norm;
            }
        }
        self.t += 1;
        let bc1 = 1.0 - self.config.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.config.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i] * scale;
            self.m[i] = self.config.beta1 * self.m[i] + (1.0 - self.config.beta1) * g;
            self.v[i] = self.config.beta2 * self.v[i] + (1.0 - self.config.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            let p = params[i] as f64;
            let updated =
                p - self.lr * (m_hat / (v_hat.sqrt() + self.config.eps) + self.config.weight_decay * p);
            params[i] = updated as f32;
        }
    }
}

struct PreparedSample {
    input: Vec<TokenId>,
    class_idx: usize,
}

/// Trains the soft prompt on the given samples.
///
/// Runs `epochs * ceil(N / batch_size)` optimization steps (capped by
/// `max_steps` when set), each averaging loss and prompt gradient over
/// one batch. Returns the trained prompt and the per-step loss log.
/// A non-finite batch loss aborts with the last good prompt attached.
pub fn train(
    config: &TrainConfig,
    samples: &[FewShotSample],
    verbalizer: &TrainingVerbalizer,
    backend: &dyn Backend,
) -> Result<(SoftPrompt, TrainingLog)> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidConfig("no training samples".into()));
    }
    let mut distinct = std::collections::BTreeSet::new();
    for sample in samples {
        let idx = verbalizer
            .class_index(&sample.class)
            .ok_or_else(|| Error::UnknownClass {
                class: sample.class.clone(),
            })?;
        distinct.insert(idx);
    }
    if distinct.len() < 2 {
        return Err(Error::PenaltyUndefined);
    }

    let descriptor = backend.descriptor();
    let vocab_size = descriptor.vocab_size;
    let mut prompt = initialize_prompt(config, backend)?;
    if descriptor.max_length <= prompt.len() {
        return Err(Error::InputTooLong {
            got: prompt.len() + 1,
            limit: descriptor.max_length,
            prompt_len: prompt.len(),
        });
    }
    let input_budget = descriptor.max_length - prompt.len();

    // one target distribution per class, shared across samples
    let targets: Vec<TargetDistribution> = (0..verbalizer.classes().len())
        .map(|c| smooth_targets(verbalizer, c, config.loss.epsilon, vocab_size))
        .collect::<Result<_>>()?;

    let prepared: Vec<PreparedSample> = samples
        .iter()
        .map(|sample| {
            let mut input = backend.tokenizer().tokenize(&sample.text);
            if input.is_empty() {
                return Err(Error::UnknownSurface {
                    surface: sample.text.clone(),
                });
            }
            input.truncate(input_budget);
            let class_idx = verbalizer
                .class_index(&sample.class)
                .expect("validated above");
            Ok(PreparedSample { input, class_idx })
        })
        .collect::<Result<_>>()?;

    let param_count = prompt.len() * prompt.dim();
    let mut optimizer = AdamW::new(param_count, config.learning_rate, config.optimizer.clone());
    let mut shuffle_rng = seeded_rng(config.seed, "train-shuffle");
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut log = TrainingLog::default();
    let mut step: u64 = 0;

    'epochs: for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(config.batch_size) {
            if let Some(cap) = config.max_steps {
                if step >= cap {
                    break 'epochs;
                }
            }
            let mut grad_acc = vec![0f64; param_count];
            let mut ce_acc = 0.0;
            let mut penalty_acc = 0.0;
            let mut total_acc = 0.0;
            for &i in batch {
                let sample = &prepared[i];
                let request = ScoringRequest::new(&sample.input, &prompt, descriptor.kind);
                let logits = backend.score(&request)?;
                let (parts, logit_grad) = loss_and_logit_gradient(
                    &logits,
                    &targets[sample.class_idx],
                    verbalizer,
                    &config.loss,
                )?;
                let prompt_grad = backend.grad_prompt(&request, &logit_grad)?;
                for (row_idx, row) in prompt_grad.iter().enumerate() {
                    let offset = row_idx * prompt.dim();
                    for (k, g) in row.iter().enumerate() {
                        grad_acc[offset + k] += g;
                    }
                }
                ce_acc += parts.cross_entropy;
                penalty_acc += parts.penalty;
                total_acc += parts.total;
            }
            let n = batch.len() as f64;
            let record = StepRecord {
                step: step + 1,
                ce: ce_acc / n,
                penalty: penalty_acc / n,
                total: total_acc / n,
            };
            if !record.total.is_finite() {
                let mut last_good = prompt.clone();
                last_good.set_trained_steps(step);
                return Err(Error::DivergenceDetected {
                    step: step + 1,
                    last_good: Box::new(last_good),
                });
            }
            for g in grad_acc.iter_mut() {
                *g /= n;
            }
            optimizer.step(prompt.data_mut(), &grad_acc);
            step += 1;
            log.steps.push(record);
        }
    }
    prompt.set_trained_steps(step);
    Ok((prompt, log))
}

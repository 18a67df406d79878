//! Experiment protocols and structured reports.
//!
//! `run_protocol` repeats sample-train-evaluate over a seed list and
//! averages; `gzsl_protocol` trains on a rotating subset of seen classes
//! and reports seen/unseen F1 separately. Reports serialize to pretty
//! JSON plus a flat CSV, and are byte-identical across reruns with the
//! same inputs and master seed: every collection is order-stable and no
//! wall-clock data is recorded.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::eval::corpus::LabeledCorpus;
use crate::eval::metrics::{accuracy, macro_f1, ClassF1};
use crate::inference::{classify_corpus, AggregateOn};
use crate::seeds::derive_seed;
use crate::trainer::{sample_few_shot, train, TrainConfig};
use crate::verbalizer::{build_inference_verbalizer, InferenceVerbalizer, TrainingVerbalizer};

/// Everything an experiment needs besides the data: the frozen backend,
/// the training verbalizer, the inference labels, and the knobs.
pub struct ExperimentSetup<'a> {
    pub backend: &'a dyn Backend,
    pub verbalizer: &'a TrainingVerbalizer,
    /// Class name to label word, in class order.
    pub class_labels: &'a [(String, String)],
    pub train: &'a TrainConfig,
    /// Neighborhood number for the inference verbalizer.
    pub k: usize,
    pub aggregate_on: AggregateOn,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanguageMetrics {
    pub language: String,
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanClassF1 {
    pub class: String,
    pub f1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub per_language: Vec<LanguageMetrics>,
    pub per_class_f1: Vec<ClassF1>,
    /// Ids of the few-shot examples this run trained on.
    pub training_sample_ids: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GzslRepetition {
    pub index: usize,
    pub seed: u64,
    pub seen_classes: Vec<String>,
    pub unseen_classes: Vec<String>,
    pub seen_f1: f64,
    pub unseen_f1: f64,
    pub per_class_f1: Vec<ClassF1>,
    pub training_sample_ids: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GzslSummary {
    pub repetitions: Vec<GzslRepetition>,
    pub seen_f1_mean: f64,
    pub unseen_f1_mean: f64,
    /// Absolute difference between the seen and unseen means, reported
    /// as a first-class balance metric.
    pub balance_gap: f64,
}

/// Structured record of one experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub variant: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub runs: Vec<SeedRun>,
    pub mean_per_language: Vec<LanguageMetrics>,
    pub mean_per_class_f1: Vec<MeanClassF1>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gzsl: Option<GzslSummary>,
}

impl RunReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_json_pretty())?;
        Ok(())
    }

    /// Flat rows `(variant, seed, language, metric, value)`.
    pub fn csv_rows(&self) -> Vec<(String, String, String, String, f64)> {
        let mut rows = Vec::new();
        for run in &self.runs {
            for lm in &run.per_language {
                rows.push((
                    self.variant.clone(),
                    run.seed.to_string(),
                    lm.language.clone(),
                    "accuracy".to_string(),
                    lm.accuracy,
                ));
                rows.push((
                    self.variant.clone(),
                    run.seed.to_string(),
                    lm.language.clone(),
                    "macro_f1".to_string(),
                    lm.macro_f1,
                ));
            }
        }
        if let Some(gzsl) = &self.gzsl {
            for rep in &gzsl.repetitions {
                rows.push((
                    self.variant.clone(),
                    rep.index.to_string(),
                    "all".to_string(),
                    "seen_f1".to_string(),
                    rep.seen_f1,
                ));
                rows.push((
                    self.variant.clone(),
                    rep.index.to_string(),
                    "all".to_string(),
                    "unseen_f1".to_string(),
                    rep.unseen_f1,
                ));
            }
            rows.push((
                self.variant.clone(),
                "mean".to_string(),
                "all".to_string(),
                "seen_f1".to_string(),
                gzsl.seen_f1_mean,
            ));
            rows.push((
                self.variant.clone(),
                "mean".to_string(),
                "all".to_string(),
                "unseen_f1".to_string(),
                gzsl.unseen_f1_mean,
            ));
            rows.push((
                self.variant.clone(),
                "mean".to_string(),
                "all".to_string(),
                "balance_gap".to_string(),
                gzsl.balance_gap,
            ));
        }
        rows
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["variant", "seed", "language", "metric", "value"])?;
        for (variant, seed, language, metric, value) in self.csv_rows() {
            writer.write_record([variant, seed, language, metric, value.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Plain-text summary for terminal output.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("variant: {}\n", self.variant));
        if !self.mean_per_language.is_empty() {
            out.push_str(&format!(
                "{:<12} {:>10} {:>10}\n",
                "language", "accuracy", "macro_f1"
            ));
            for lm in &self.mean_per_language {
                out.push_str(&format!(
                    "{:<12} {:>10.4} {:>10.4}\n",
                    lm.language, lm.accuracy, lm.macro_f1
                ));
            }
        }
        if let Some(gzsl) = &self.gzsl {
            out.push_str(&format!(
                "gzsl: seen_f1 {:.4}, unseen_f1 {:.4}, balance_gap {:.4} over {} repetitions\n",
                gzsl.seen_f1_mean,
                gzsl.unseen_f1_mean,
                gzsl.balance_gap,
                gzsl.repetitions.len()
            ));
        }
        out
    }
}

/// Union class catalog over eval corpora, in first-appearance order.
fn union_catalog(corpora: &[LabeledCorpus]) -> Vec<String> {
    let mut out = Vec::new();
    for corpus in corpora {
        for class in &corpus.classes {
            if !out.contains(class) {
                out.push(class.clone());
            }
        }
    }
    out
}

struct EvalOutcome {
    per_language: Vec<LanguageMetrics>,
    per_class_f1: Vec<ClassF1>,
}

/// Classifies every example and reduces to per-language metrics plus
/// pooled per-class F1 against the union catalog.
fn evaluate_corpora(
    setup: &ExperimentSetup,
    inference: &InferenceVerbalizer,
    prompt: &crate::prompt::SoftPrompt,
    corpora: &[LabeledCorpus],
    catalog: &[String],
) -> Result<EvalOutcome> {
    let mut by_language: Vec<(String, (Vec<String>, Vec<String>))> = Vec::new();
    let mut all_preds = Vec::new();
    let mut all_gold = Vec::new();
    for corpus in corpora {
        let predictions =
            classify_corpus(corpus, prompt, inference, setup.backend, setup.aggregate_on)?;
        for (ex, predicted) in corpus.examples.iter().zip(predictions) {
            let slot = match by_language.iter_mut().find(|(l, _)| l == &ex.language) {
                Some((_, slot)) => slot,
                None => {
                    by_language.push((ex.language.clone(), (Vec::new(), Vec::new())));
                    &mut by_language.last_mut().expect("just pushed").1
                }
            };
            slot.0.push(predicted.clone());
            slot.1.push(ex.label.clone());
            all_preds.push(predicted);
            all_gold.push(ex.label.clone());
        }
    }
    let mut per_language = Vec::with_capacity(by_language.len());
    for (language, (preds, gold)) in &by_language {
        let (_, macro_avg) = macro_f1(preds, gold, catalog)?;
        per_language.push(LanguageMetrics {
            language: language.clone(),
            accuracy: accuracy(preds, gold)?,
            macro_f1: macro_avg,
        });
    }
    let (per_class_f1, _) = macro_f1(&all_preds, &all_gold, catalog)?;
    Ok(EvalOutcome {
        per_language,
        per_class_f1,
    })
}

fn mean_language_metrics(runs: &[SeedRun]) -> Vec<LanguageMetrics> {
    let mut order: Vec<String> = Vec::new();
    for run in runs {
        for lm in &run.per_language {
            if !order.contains(&lm.language) {
                order.push(lm.language.clone());
            }
        }
    }
    order
        .into_iter()
        .map(|language| {
            let values: Vec<&LanguageMetrics> = runs
                .iter()
                .flat_map(|r| r.per_language.iter().filter(|lm| lm.language == language))
                .collect();
            let n = values.len() as f64;
            LanguageMetrics {
                language,
                accuracy: values.iter().map(|v| v.accuracy).sum::<f64>() / n,
                macro_f1: values.iter().map(|v| v.macro_f1).sum::<f64>() / n,
            }
        })
        .collect()
}

fn mean_class_f1(runs: &[SeedRun], catalog: &[String]) -> Vec<MeanClassF1> {
    catalog
        .iter()
        .map(|class| {
            let values: Vec<f64> = runs
                .iter()
                .flat_map(|r| r.per_class_f1.iter().filter(|c| &c.class == class))
                .map(|c| c.f1)
                .collect();
            MeanClassF1 {
                class: class.clone(),
                f1: values.iter().sum::<f64>() / values.len().max(1) as f64,
            }
        })
        .collect()
}

/// Evaluation of an existing prompt, no training involved. The report's
/// means are the single evaluation.
pub fn evaluate_prompt(
    setup: &ExperimentSetup,
    prompt: &crate::prompt::SoftPrompt,
    eval_corpora: &[LabeledCorpus],
    variant: &str,
    config_snapshot: serde_json::Value,
) -> Result<RunReport> {
    if eval_corpora.is_empty() {
        return Err(Error::InvalidConfig("no evaluation corpora".into()));
    }
    let catalog = union_catalog(eval_corpora);
    let inference = build_inference_verbalizer(
        setup.class_labels,
        setup.backend.embedding_table(),
        setup.backend.tokenizer(),
        setup.k,
    )?;
    let outcome = evaluate_corpora(setup, &inference, prompt, eval_corpora, &catalog)?;
    Ok(RunReport {
        variant: variant.to_string(),
        config: config_snapshot,
        seeds: Vec::new(),
        runs: Vec::new(),
        mean_per_language: outcome.per_language,
        mean_per_class_f1: outcome
            .per_class_f1
            .into_iter()
            .map(|c| MeanClassF1 {
                class: c.class,
                f1: c.f1,
            })
            .collect(),
        gzsl: None,
    })
}

/// Per-seed sample-train-evaluate, averaged across seeds.
pub fn run_protocol(
    setup: &ExperimentSetup,
    train_corpus: &LabeledCorpus,
    eval_corpora: &[LabeledCorpus],
    seeds: &[u64],
    variant: &str,
    config_snapshot: serde_json::Value,
) -> Result<RunReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("seed list is empty".into()));
    }
    if eval_corpora.is_empty() {
        return Err(Error::InvalidConfig("no evaluation corpora".into()));
    }
    let catalog = union_catalog(eval_corpora);
    let inference = build_inference_verbalizer(
        setup.class_labels,
        setup.backend.embedding_table(),
        setup.backend.tokenizer(),
        setup.k,
    )?;
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut config = setup.train.clone();
        config.seed = seed;
        let samples = sample_few_shot(train_corpus, config.shots_per_class, seed)?;
        let (prompt, _log) = train(&config, &samples, setup.verbalizer, setup.backend)?;
        let outcome = evaluate_corpora(setup, &inference, &prompt, eval_corpora, &catalog)?;
        runs.push(SeedRun {
            seed,
            per_language: outcome.per_language,
            per_class_f1: outcome.per_class_f1,
            training_sample_ids: samples.into_iter().map(|s| s.id).collect(),
        });
    }
    let mean_per_language = mean_language_metrics(&runs);
    let mean_per_class = mean_class_f1(&runs, &catalog);
    Ok(RunReport {
        variant: variant.to_string(),
        config: config_snapshot,
        seeds: seeds.to_vec(),
        runs,
        mean_per_language,
        mean_per_class_f1: mean_per_class,
        gzsl: None,
    })
}

/// Generalized zero-shot protocol: per repetition, draw a seen-class
/// subset deterministically from the master seed, train on seen classes
/// only, evaluate everything, and report seen and unseen F1 separately.
///
/// The evaluation pool is the corpus minus the sampled training
/// examples; unseen-class examples can never enter training because
/// sampling happens on the seen-only restriction of the corpus.
pub fn gzsl_protocol(
    setup: &ExperimentSetup,
    corpus: &LabeledCorpus,
    repetitions: usize,
    seen_fraction: f64,
    master_seed: u64,
    config_snapshot: serde_json::Value,
) -> Result<RunReport> {
    if repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&seen_fraction) {
        return Err(Error::InvalidConfig(format!(
            "seen_fraction must be in [0, 1], got {seen_fraction}"
        )));
    }
    let catalog = corpus.classes.clone();
    if catalog.len() < 2 {
        return Err(Error::InvalidConfig(
            "gzsl needs a catalog of at least 2 classes".into(),
        ));
    }
    let seen_count = ((catalog.len() as f64 * seen_fraction).ceil() as usize)
        .clamp(1, catalog.len() - 1);
    if seen_count < 2 {
        // training on fewer than two classes leaves the penalty undefined
        return Err(Error::PenaltyUndefined);
    }
    let inference = build_inference_verbalizer(
        setup.class_labels,
        setup.backend.embedding_table(),
        setup.backend.tokenizer(),
        setup.k,
    )?;
    let mut reps = Vec::with_capacity(repetitions);
    for rep in 0..repetitions {
        let mut shuffled = catalog.clone();
        let mut rng = crate::seeds::seeded_rng(master_seed, &format!("gzsl-split/{rep}"));
        shuffled.shuffle(&mut rng);
        let chosen: HashSet<String> = shuffled[..seen_count].iter().cloned().collect();
        // keep catalog order inside the seen/unseen lists
        let seen: Vec<String> = catalog.iter().filter(|c| chosen.contains(*c)).cloned().collect();
        let unseen: Vec<String> = catalog
            .iter()
            .filter(|c| !chosen.contains(*c))
            .cloned()
            .collect();

        let rep_seed = derive_seed(master_seed, &format!("gzsl-train/{rep}"));
        let seen_corpus = corpus.filter_classes(&seen);
        let samples = sample_few_shot(&seen_corpus, setup.train.shots_per_class, rep_seed)?;
        assert!(
            samples.iter().all(|s| seen.contains(&s.class)),
            "unseen-class example reached a training batch"
        );
        let restricted = setup.verbalizer.restrict_to(&seen)?;
        let mut config = setup.train.clone();
        config.seed = rep_seed;
        let (prompt, _log) = train(&config, &samples, &restricted, setup.backend)?;

        let sampled_ids: HashSet<String> = samples.iter().map(|s| s.id.clone()).collect();
        let eval_pool = corpus.without_ids(&sampled_ids);
        let outcome = evaluate_corpora(setup, &inference, &prompt, &[eval_pool], &catalog)?;

        let mean_over = |names: &[String]| -> f64 {
            let values: Vec<f64> = outcome
                .per_class_f1
                .iter()
                .filter(|c| names.contains(&c.class))
                .map(|c| c.f1)
                .collect();
            values.iter().sum::<f64>() / values.len().max(1) as f64
        };
        reps.push(GzslRepetition {
            index: rep,
            seed: rep_seed,
            seen_f1: mean_over(&seen),
            unseen_f1: mean_over(&unseen),
            seen_classes: seen,
            unseen_classes: unseen,
            per_class_f1: outcome.per_class_f1,
            training_sample_ids: samples.into_iter().map(|s| s.id).collect(),
        });
    }
    let n = reps.len() as f64;
    let seen_f1_mean = reps.iter().map(|r| r.seen_f1).sum::<f64>() / n;
    let unseen_f1_mean = reps.iter().map(|r| r.unseen_f1).sum::<f64>() / n;
    Ok(RunReport {
        variant: "gzsl".to_string(),
        config: config_snapshot,
        seeds: vec![master_seed],
        runs: Vec::new(),
        mean_per_language: Vec::new(),
        mean_per_class_f1: Vec::new(),
        gzsl: Some(GzslSummary {
            repetitions: reps,
            seen_f1_mean,
            unseen_f1_mean,
            balance_gap: (seen_f1_mean - unseen_f1_mean).abs(),
        }),
    })
}

/// The ablation grid: the full objective and the four reduced variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationVariant {
    Full,
    WithoutPenalty,
    WithoutSmoothing,
    WithoutPenaltyAndSmoothing,
    EnglishOnlyLabels,
}

impl AblationVariant {
    pub fn tag(&self) -> &'static str {
        match self {
            AblationVariant::Full => "full",
            AblationVariant::WithoutPenalty => "wo-penalty",
            AblationVariant::WithoutSmoothing => "wo-smoothing",
            AblationVariant::WithoutPenaltyAndSmoothing => "wo-penalty-smoothing",
            AblationVariant::EnglishOnlyLabels => "wo-multilingual-labels",
        }
    }

    /// Applies the variant's loss settings to a base configuration.
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        let mut config = base.clone();
        match self {
            AblationVariant::Full | AblationVariant::EnglishOnlyLabels => {}
            AblationVariant::WithoutPenalty => config.loss.alpha = 0.0,
            AblationVariant::WithoutSmoothing => config.loss.epsilon = 0.0,
            AblationVariant::WithoutPenaltyAndSmoothing => {
                config.loss.alpha = 0.0;
                config.loss.epsilon = 0.0;
            }
        }
        config
    }

    /// Whether the variant swaps the multilingual token sets for the
    /// single English label token per class.
    pub fn english_only_labels(&self) -> bool {
        matches!(self, AblationVariant::EnglishOnlyLabels)
    }
}

/// The five configurations of the ablation study.
pub fn ablation_matrix(base: &TrainConfig) -> Vec<(AblationVariant, TrainConfig)> {
    [
        AblationVariant::Full,
        AblationVariant::WithoutPenalty,
        AblationVariant::WithoutSmoothing,
        AblationVariant::WithoutPenaltyAndSmoothing,
        AblationVariant::EnglishOnlyLabels,
    ]
    .into_iter()
    .map(|v| (v, v.apply(base)))
    .collect()
}

/// Generic group-by-tag mean reduction over `(key, value)` pairs. Keys
/// missing from `tags` group under their own name. Group order follows
/// first appearance in `values`.
pub fn group_by_tag(
    values: &[(String, f64)],
    tags: &BTreeMap<String, String>,
) -> Vec<(String, f64)> {
    let mut order: Vec<String> = Vec::new();
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (key, value) in values {
        let tag = tags.get(key).cloned().unwrap_or_else(|| key.clone());
        if !order.contains(&tag) {
            order.push(tag.clone());
        }
        let entry = sums.entry(tag).or_insert((0.0, 0));
        entry.0 += value;
        entry.1 += 1;
    }
    order
        .into_iter()
        .map(|tag| {
            let (sum, count) = sums[&tag];
            (tag, sum / count as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::LossConfig;
    use crate::trainer::{OptimizerConfig, PromptInit};

    fn base_config() -> TrainConfig {
        TrainConfig {
            batch_size: 8,
            learning_rate: 0.01,
            epochs: 10,
            loss: LossConfig {
                epsilon: 0.2,
                alpha: 100.0,
            },
            prompt_length: 8,
            shots_per_class: 8,
            seed: 0,
            optimizer: OptimizerConfig::default(),
            prompt_init: PromptInit::default(),
            max_steps: None,
        }
    }

    #[test]
    fn ablation_matrix_has_five_variants() {
        let matrix = ablation_matrix(&base_config());
        assert_eq!(matrix.len(), 5);
        let tags: Vec<&str> = matrix.iter().map(|(v, _)| v.tag()).collect();
        assert_eq!(
            tags,
            vec![
                "full",
                "wo-penalty",
                "wo-smoothing",
                "wo-penalty-smoothing",
                "wo-multilingual-labels"
            ]
        );
    }

    #[test]
    fn ablation_variants_adjust_only_their_knob() {
        let base = base_config();
        let matrix = ablation_matrix(&base);
        let by_tag: BTreeMap<&str, &TrainConfig> =
            matrix.iter().map(|(v, c)| (v.tag(), c)).collect();
        assert_eq!(by_tag["full"], &base);
        assert_eq!(by_tag["wo-penalty"].loss.alpha, 0.0);
        assert_eq!(by_tag["wo-penalty"].loss.epsilon, base.loss.epsilon);
        assert_eq!(by_tag["wo-smoothing"].loss.epsilon, 0.0);
        assert_eq!(by_tag["wo-smoothing"].loss.alpha, base.loss.alpha);
        assert_eq!(by_tag["wo-penalty-smoothing"].loss.alpha, 0.0);
        assert_eq!(by_tag["wo-penalty-smoothing"].loss.epsilon, 0.0);
        // english-only keeps the loss untouched; the verbalizer changes
        assert_eq!(by_tag["wo-multilingual-labels"], &base);
        assert!(AblationVariant::EnglishOnlyLabels.english_only_labels());
    }

    #[test]
    fn group_by_tag_means_and_order() {
        let values = vec![
            ("de".to_string(), 0.8),
            ("fr".to_string(), 0.6),
            ("sw".to_string(), 0.4),
            ("es".to_string(), 0.7),
        ];
        let mut tags = BTreeMap::new();
        tags.insert("de".to_string(), "indo-european".to_string());
        tags.insert("fr".to_string(), "indo-european".to_string());
        tags.insert("es".to_string(), "indo-european".to_string());
        let grouped = group_by_tag(&values, &tags);
        assert_eq!(grouped.len(), 2);
        assert_eq!(grouped[0].0, "indo-european");
        assert!((grouped[0].1 - 0.7).abs() < 1e-12);
        assert_eq!(grouped[1], ("sw".to_string(), 0.4));
    }
}

//! Experiment configuration: bundled defaults, config file, CLI
//! overrides, in ascending precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use softprompt::backend::{BackendConfig, BackendKind};
use softprompt::defaults::{default_neighborhood_size, train_defaults, PromptRegime};
use softprompt::inference::AggregateOn;
use softprompt::trainer::TrainConfig;

use crate::CliError;

/// Environment variable naming the directory searched for
/// `default.json` when `--config` is not given.
pub const CONFIG_DIR_ENV: &str = "SOFTPROMPT_CONFIG_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub backend: BackendConfig,
    /// Dataset tag (e.g. "sib-200") used to look up bundled k defaults.
    #[serde(default)]
    pub dataset_tag: Option<String>,
    /// Prompt regime the bundled k table is keyed by.
    #[serde(default = "default_regime")]
    pub regime: PromptRegime,
    pub train: TrainConfig,
    #[serde(default)]
    pub inference: InferenceSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub data: DataSection,
}

fn default_regime() -> PromptRegime {
    PromptRegime::Robust
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceSection {
    /// Neighborhood number; falls back to the bundled table keyed by
    /// (regime, dataset_tag, backend kind).
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub aggregate_on: AggregateOn,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    /// Seeds for the repetition protocol.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Restrict evaluation to these language tags.
    #[serde(default)]
    pub languages: Option<Vec<String>>,
    /// Optional language-to-group map; adds a grouped accuracy table.
    #[serde(default)]
    pub language_groups: Option<BTreeMap<String, String>>,
    #[serde(default = "default_repetitions")]
    pub gzsl_repetitions: usize,
    #[serde(default = "default_seen_fraction")]
    pub gzsl_seen_fraction: f64,
    /// Candidates for the neighborhood-number sweep.
    #[serde(default = "default_k_candidates")]
    pub k_candidates: Vec<usize>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            seeds: default_seeds(),
            languages: None,
            language_groups: None,
            gzsl_repetitions: default_repetitions(),
            gzsl_seen_fraction: default_seen_fraction(),
            k_candidates: default_k_candidates(),
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3]
}

fn default_repetitions() -> usize {
    4
}

fn default_seen_fraction() -> f64 {
    0.5
}

fn default_k_candidates() -> Vec<usize> {
    (1..=15).collect()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default)]
    pub train_corpus: Option<PathBuf>,
    #[serde(default)]
    pub eval_corpora: Vec<PathBuf>,
    /// Development sets for `sweep-k`; falls back to `eval_corpora`.
    #[serde(default)]
    pub dev_corpora: Vec<PathBuf>,
    /// Training verbalizer document.
    #[serde(default)]
    pub verbalizer: Option<PathBuf>,
    /// Inference label document (`{class: word}`).
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Unlabeled documents for `classify`.
    #[serde(default)]
    pub documents: Option<PathBuf>,
    /// Prompt checkpoint consumed by `classify`, `eval`, `sweep-k`.
    #[serde(default)]
    pub prompt: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn defaults_for(kind: BackendKind) -> Self {
        Self {
            backend: BackendConfig {
                kind,
                ..BackendConfig::default()
            },
            dataset_tag: None,
            regime: PromptRegime::Robust,
            train: train_defaults(kind),
            inference: InferenceSection::default(),
            eval: EvalSection::default(),
            data: DataSection::default(),
        }
    }

    /// Neighborhood number: explicit config wins, then the bundled table.
    pub fn resolve_k(&self) -> Result<usize, CliError> {
        if let Some(k) = self.inference.k {
            return Ok(k);
        }
        if let Some(tag) = &self.dataset_tag {
            if let Some(k) = default_neighborhood_size(self.regime, tag, self.backend.kind) {
                return Ok(k);
            }
        }
        Err(CliError::validation(
            "K_UNRESOLVED",
            "set inference.k, or a dataset_tag covered by the bundled k table",
        ))
    }
}

/// Recursive JSON merge: objects merge key-wise, overlay wins elsewhere.
fn deep_merge(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(base_map), serde_json::Value::Object(overlay_map)) => {
            for (key, value) in overlay_map {
                match base_map.get_mut(&key) {
                    Some(slot) => deep_merge(slot, value),
                    None => {
                        base_map.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

/// Applies one `dotted.key=value` override; the value parses as JSON
/// and falls back to a plain string.
fn apply_override(target: &mut serde_json::Value, spec: &str) -> Result<(), CliError> {
    let (path, raw_value) = spec.split_once('=').ok_or_else(|| {
        CliError::validation(
            "BAD_OVERRIDE",
            format!("override {spec:?} is not of the form key=value"),
        )
    })?;
    let value: serde_json::Value = serde_json::from_str(raw_value)
        .unwrap_or_else(|_| serde_json::Value::String(raw_value.to_string()));
    let mut cursor = target;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        if segment.is_empty() {
            return Err(CliError::validation(
                "BAD_OVERRIDE",
                format!("override key {path:?} has an empty segment"),
            ));
        }
        let map = cursor.as_object_mut().ok_or_else(|| {
            CliError::validation(
                "BAD_OVERRIDE",
                format!("override key {path:?} descends into a non-object"),
            )
        })?;
        if i + 1 == segments.len() {
            map.insert(segment.to_string(), value);
            return Ok(());
        }
        cursor = map
            .entry(segment.to_string())
            .or_insert_with(|| serde_json::Value::Object(serde_json::Map::new()));
    }
    unreachable!("loop always returns on the last segment")
}

/// Loads and resolves the configuration: bundled defaults for the
/// backend kind, the config file over them, `--set` overrides on top.
pub fn resolve_config(
    config_path: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<ExperimentConfig, CliError> {
    let path = match config_path {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = std::env::var_os(CONFIG_DIR_ENV).ok_or_else(|| {
                CliError::validation(
                    "CONFIG_NOT_FOUND",
                    format!("pass --config or set ${CONFIG_DIR_ENV}"),
                )
            })?;
            PathBuf::from(dir).join("default.json")
        }
    };
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::validation(
            "CONFIG_NOT_FOUND",
            format!("cannot read config {}: {e}", path.display()),
        )
    })?;
    let mut file_value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
        CliError::validation("CONFIG_INVALID", format!("config does not parse: {e}"))
    })?;
    for spec in overrides {
        apply_override(&mut file_value, spec)?;
    }
    let kind: BackendKind = file_value
        .pointer("/backend/kind")
        .cloned()
        .map(serde_json::from_value)
        .transpose()
        .map_err(|e| CliError::validation("CONFIG_INVALID", format!("bad backend.kind: {e}")))?
        .unwrap_or(BackendKind::DecoderOnly);
    let mut merged = serde_json::to_value(ExperimentConfig::defaults_for(kind))
        .expect("defaults serialize");
    deep_merge(&mut merged, file_value);
    let mut config: ExperimentConfig = serde_json::from_value(merged).map_err(|e| {
        CliError::validation("CONFIG_INVALID", format!("config does not validate: {e}"))
    })?;
    if let Some(seed) = seed {
        config.train.seed = seed;
    }
    config.train.validate().map_err(CliError::from)?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_json_and_fall_back_to_strings() {
        let mut value = serde_json::json!({"train": {"seed": 1}});
        apply_override(&mut value, "train.learning_rate=0.5").unwrap();
        apply_override(&mut value, "backend.name=toy").unwrap();
        assert_eq!(value["train"]["learning_rate"], serde_json::json!(0.5));
        assert_eq!(value["backend"]["name"], serde_json::json!("toy"));
        assert!(apply_override(&mut value, "no-equals-sign").is_err());
    }

    #[test]
    fn deep_merge_prefers_overlay_leaves() {
        let mut base = serde_json::json!({"a": {"x": 1, "y": 2}, "b": 3});
        deep_merge(&mut base, serde_json::json!({"a": {"y": 9}, "c": 4}));
        assert_eq!(base, serde_json::json!({"a": {"x": 1, "y": 9}, "b": 3, "c": 4}));
    }

    #[test]
    fn defaults_flow_through_resolution() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"backend": {"name": "toy", "kind": "encoder-decoder"}}"#,
        )
        .unwrap();
        let config = resolve_config(Some(&path), &[], None).unwrap();
        // the encoder-decoder column of the bundled defaults
        assert_eq!(config.train.learning_rate, 0.3);
        assert_eq!(config.train.loss.alpha, 200.0);
        assert_eq!(config.train.prompt_length, 9);

        let config = resolve_config(
            Some(&path),
            &["train.learning_rate=0.07".to_string()],
            Some(99),
        )
        .unwrap();
        assert_eq!(config.train.learning_rate, 0.07);
        assert_eq!(config.train.seed, 99);
    }

    #[test]
    fn k_resolution_uses_bundled_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"backend": {"name": "toy", "kind": "decoder-only"}, "dataset_tag": "sib-200"}"#,
        )
        .unwrap();
        let config = resolve_config(Some(&path), &[], None).unwrap();
        assert_eq!(config.resolve_k().unwrap(), 3);

        let config =
            resolve_config(Some(&path), &["inference.k=7".to_string()], None).unwrap();
        assert_eq!(config.resolve_k().unwrap(), 7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"backend": {"name": "toy", "kind": "decoder-only"}, "trian": {}}"#).unwrap();
        let err = resolve_config(Some(&path), &[], None).unwrap_err();
        assert_eq!(err.code(), "CONFIG_INVALID");
    }
}

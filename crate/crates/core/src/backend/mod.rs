//! Contract between the method and any frozen scoring model.
//!
//! A backend exposes exactly what training and inference need: a
//! tokenizer, the input embedding table, logit scoring at a single
//! position, and the gradient of those logits with respect to the soft
//! prompt. Backend parameters are frozen by construction — the trait
//! offers no mutation surface, and `score` must return identical logits
//! for identical requests regardless of interleaved prompt updates.
//!
//! Implementations register under a name in [`BackendRegistry`] and are
//! selected at runtime from configuration. The bundled [`toy::ToyBackend`]
//! is the reference implementation; integrating a real pretrained model
//! means implementing [`Backend`] over its frozen weights and registering
//! a factory (see `docs/backend_integration.md` in the repository root).

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingTable, TokenId};
use crate::error::{Error, Result};
use crate::prompt::SoftPrompt;

pub mod toy;

/// Pluggable text segmentation.
///
/// Tokenization must be deterministic and total: text that cannot be
/// matched maps to the tokenizer's unknown id rather than failing.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<TokenId>;
    fn unknown_id(&self) -> TokenId;
}

/// Model architecture family. Defaults for hyperparameters and
/// neighborhood sizes are keyed by this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    EncoderOnly,
    DecoderOnly,
    EncoderDecoder,
}

impl BackendKind {
    /// Where the scored slot sits: encoder-only models fill a mask slot
    /// after the prompt, generative kinds predict the next token there.
    pub fn scoring_position(self) -> ScoringPosition {
        match self {
            BackendKind::EncoderOnly => ScoringPosition::MaskSlot,
            BackendKind::DecoderOnly | BackendKind::EncoderDecoder => ScoringPosition::NextToken,
        }
    }
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BackendKind::EncoderOnly => "encoder-only",
            BackendKind::DecoderOnly => "decoder-only",
            BackendKind::EncoderDecoder => "encoder-decoder",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoringPosition {
    MaskSlot,
    NextToken,
}

/// Static facts about a backend instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    pub vocab_size: usize,
    pub dim: usize,
    pub max_length: usize,
}

/// One scoring call: input token ids with the soft prompt appended after
/// them, scored at the position given by the backend kind.
#[derive(Debug, Clone, Copy)]
pub struct ScoringRequest<'a> {
    pub input_tokens: &'a [TokenId],
    pub prompt: &'a SoftPrompt,
    pub position: ScoringPosition,
}

impl<'a> ScoringRequest<'a> {
    pub fn new(input_tokens: &'a [TokenId], prompt: &'a SoftPrompt, kind: BackendKind) -> Self {
        Self {
            input_tokens,
            prompt,
            position: kind.scoring_position(),
        }
    }

    /// Checks the request against a descriptor: non-empty input, prompt
    /// dimension match, combined length within the backend limit.
    pub fn validate(&self, descriptor: &BackendDescriptor) -> Result<()> {
        if self.input_tokens.is_empty() {
            return Err(Error::InvalidConfig("scoring input is empty".into()));
        }
        if self.prompt.dim() != descriptor.dim {
            return Err(Error::IncompatiblePrompt {
                prompt_dim: self.prompt.dim(),
                backend_dim: descriptor.dim,
            });
        }
        let combined = self.input_tokens.len() + self.prompt.len();
        if combined > descriptor.max_length {
            return Err(Error::InputTooLong {
                got: combined,
                limit: descriptor.max_length,
                prompt_len: self.prompt.len(),
            });
        }
        if let Some(bad) = self
            .input_tokens
            .iter()
            .find(|id| id.index() >= descriptor.vocab_size)
        {
            return Err(Error::InvalidConfig(format!(
                "token id {bad} out of range for vocabulary of {}",
                descriptor.vocab_size
            )));
        }
        Ok(())
    }
}

/// Logits over the full vocabulary at the scoring position.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector {
    values: Vec<f64>,
}

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("logit vector has non-finite entries".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A frozen scoring model.
pub trait Backend: Send + Sync {
    fn descriptor(&self) -> &BackendDescriptor;

    /// Input embedding table; rows seed text-initialized prompts and feed
    /// neighborhood construction.
    fn embedding_table(&self) -> &EmbeddingTable;

    fn tokenizer(&self) -> &dyn Tokenizer;

    /// Logits at the scoring position. Deterministic for identical
    /// requests; never mutates backend parameters.
    fn score(&self, request: &ScoringRequest) -> Result<LogitVector>;

    /// Exact gradient of `loss` with respect to the prompt matrix, given
    /// `upstream = d loss / d logits`. Returns one row per prompt row.
    fn grad_prompt(&self, request: &ScoringRequest, upstream: &[f64]) -> Result<Vec<Vec<f64>>>;
}

/// Configuration a factory consumes to construct a backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    /// Registry key, e.g. `"toy"`.
    pub name: String,
    pub kind: BackendKind,
    /// Path to an embedding table file (text or binary layout).
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    #[serde(default = "default_max_length")]
    pub max_length: usize,
}

fn default_max_length() -> usize {
    256
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            name: "toy".into(),
            kind: BackendKind::DecoderOnly,
            embeddings: None,
            max_length: default_max_length(),
        }
    }
}

type BackendFactory = Box<dyn Fn(&BackendConfig) -> Result<Box<dyn Backend>> + Send + Sync>;

/// Name-keyed registry of backend factories.
pub struct BackendRegistry {
    factories: BTreeMap<String, BackendFactory>,
}

impl BackendRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// Registry with the built-in `toy` backend registered.
    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        registry.register("toy", |config| {
            let path = config.embeddings.as_ref().ok_or_else(|| {
                Error::InvalidConfig("toy backend requires backend.embeddings".into())
            })?;
            let table = EmbeddingTable::read_from_path(path)?;
            Ok(Box::new(toy::ToyBackend::new(
                std::sync::Arc::new(table),
                config.kind,
                config.max_length,
            )) as Box<dyn Backend>)
        });
        registry
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&BackendConfig) -> Result<Box<dyn Backend>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn create(&self, config: &BackendConfig) -> Result<Box<dyn Backend>> {
        let factory = self
            .factories
            .get(&config.name)
            .ok_or_else(|| Error::UnknownBackend {
                name: config.name.clone(),
            })?;
        factory(config)
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(|s| s.as_str()).collect()
    }
}

impl Default for BackendRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_creates_toy_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.emb");
        let table = EmbeddingTable::new(vec![
            ("a".into(), vec![1.0, 0.0]),
            ("b".into(), vec![0.0, 1.0]),
        ])
        .unwrap();
        table.write_text_path(&path).unwrap();

        let registry = BackendRegistry::with_builtins();
        assert_eq!(registry.names(), vec!["toy"]);
        let config = BackendConfig {
            name: "toy".into(),
            kind: BackendKind::DecoderOnly,
            embeddings: Some(path),
            max_length: 64,
        };
        let backend = registry.create(&config).unwrap();
        assert_eq!(backend.descriptor().vocab_size, 2);
        assert_eq!(backend.descriptor().dim, 2);
    }

    #[test]
    fn registry_rejects_unknown_name() {
        let registry = BackendRegistry::with_builtins();
        let config = BackendConfig {
            name: "warp-drive".into(),
            ..BackendConfig::default()
        };
        let err = match registry.create(&config) {
            Err(e) => e,
            Ok(_) => panic!("expected an unknown-backend error"),
        };
        assert!(matches!(err, Error::UnknownBackend { .. }));
    }

    #[test]
    fn scoring_position_follows_kind() {
        assert_eq!(
            BackendKind::EncoderOnly.scoring_position(),
            ScoringPosition::MaskSlot
        );
        assert_eq!(
            BackendKind::DecoderOnly.scoring_position(),
            ScoringPosition::NextToken
        );
        assert_eq!(
            BackendKind::EncoderDecoder.scoring_position(),
            ScoringPosition::NextToken
        );
    }
}

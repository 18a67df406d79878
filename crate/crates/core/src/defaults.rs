//! Bundled default hyperparameters and neighborhood sizes, keyed by
//! backend kind and dataset tag. Config files and CLI overrides take
//! precedence over everything here.

use serde::{Deserialize, Serialize};

use crate::backend::BackendKind;
use crate::objective::LossConfig;
use crate::trainer::{OptimizerConfig, PromptInit, TrainConfig};

/// The natural-language prompt whose token embeddings seed the soft
/// prompt by default.
pub const DEFAULT_INIT_TEXT: &str = "In this sentence, the topic is about";

/// Default training configuration per backend kind.
pub fn train_defaults(kind: BackendKind) -> TrainConfig {
    let (learning_rate, alpha, epsilon, prompt_length) = match kind {
        BackendKind::DecoderOnly => (0.01, 100.0, 0.2, 8),
        BackendKind::EncoderOnly => (0.01, 10.0, 0.1, 8),
        BackendKind::EncoderDecoder => (0.3, 200.0, 0.8, 9),
    };
    TrainConfig {
        batch_size: 8,
        learning_rate,
        epochs: 10,
        loss: LossConfig { epsilon, alpha },
        prompt_length,
        shots_per_class: 8,
        seed: 0,
        optimizer: OptimizerConfig::default(),
        prompt_init: PromptInit::Text(DEFAULT_INIT_TEXT.to_string()),
        max_steps: None,
    }
}

/// How the prompt fed to inference was produced. Neighborhood-size
/// defaults were selected on development sets separately per regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptRegime {
    /// Prompt trained with the full objective (smoothing + penalty +
    /// multilingual label sets).
    Robust,
    /// Prompt trained with plain one-hot soft prompt tuning.
    StandardSpt,
    /// Untrained prompt initialized from the natural-language text.
    Untrained,
}

/// Bundled default neighborhood number `k` for a `(regime, dataset,
/// kind)` combination. Dataset tags are matched case-insensitively.
pub fn default_neighborhood_size(
    regime: PromptRegime,
    dataset_tag: &str,
    kind: BackendKind,
) -> Option<usize> {
    use BackendKind::{DecoderOnly as Dec, EncoderDecoder as EncDec, EncoderOnly as Enc};
    use PromptRegime::{Robust, StandardSpt, Untrained};
    let k = match (regime, dataset_tag.to_ascii_lowercase().as_str(), kind) {
        (Robust, "sib-200", Dec) => 3,
        (Robust, "sib-200", Enc) => 4,
        (Robust, "sib-200", EncDec) => 14,
        (Robust, "mtop", Dec) => 4,
        (Robust, "mtop", Enc) => 2,
        (Robust, "mtop", EncDec) => 8,
        (Robust, "mlsum", Dec) => 300,
        (Robust, "mlsum", Enc) => 5,
        (Robust, "mlsum", EncDec) => 7,
        (Untrained, "sib-200", Dec) => 4,
        (Untrained, "sib-200", Enc) => 3,
        (Untrained, "sib-200", EncDec) => 6,
        (Untrained, "mtop", Dec) => 3,
        (Untrained, "mtop", Enc) => 2,
        (Untrained, "mtop", EncDec) => 5,
        (Untrained, "mlsum", Dec) => 5,
        (Untrained, "mlsum", Enc) => 4,
        (Untrained, "mlsum", EncDec) => 6,
        (StandardSpt, "sib-200", Dec) => 2,
        (StandardSpt, "sib-200", Enc) => 17,
        (StandardSpt, "sib-200", EncDec) => 5,
        (StandardSpt, "mtop", Dec) => 100,
        (StandardSpt, "mtop", Enc) => 7,
        (StandardSpt, "mtop", EncDec) => 12,
        (StandardSpt, "mlsum", Dec) => 200,
        (StandardSpt, "mlsum", Enc) => 16,
        (StandardSpt, "mlsum", EncDec) => 7,
        _ => return None,
    };
    Some(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_dataset_has_no_default_k() {
        assert_eq!(
            default_neighborhood_size(PromptRegime::Robust, "news-42", BackendKind::DecoderOnly),
            None
        );
    }

    #[test]
    fn dataset_tags_are_case_insensitive() {
        assert_eq!(
            default_neighborhood_size(PromptRegime::Robust, "SIB-200", BackendKind::DecoderOnly),
            Some(3)
        );
    }
}

//! Evaluation harness: corpus ingestion, metrics, the seeded repetition
//! protocol, generalized zero-shot evaluation, and the ablation matrix.

pub mod corpus;
pub mod metrics;
pub mod protocol;

pub use corpus::{CorpusFormat, Example, LabeledCorpus};
pub use metrics::{accuracy, macro_f1, ClassF1};
pub use protocol::{
    ablation_matrix, evaluate_prompt, group_by_tag, gzsl_protocol, run_protocol, AblationVariant,
    ExperimentSetup, GzslRepetition, GzslSummary, LanguageMetrics, RunReport, SeedRun,
};

//! Soft prompt tuning for cross-lingual zero-shot topic classification.
//!
//! The training side pairs a frozen scoring backend with multilingual
//! verbalizer token sets, contrastive label smoothing and an
//! overconfidence penalty on the loss. The inference side is
//! nonparametric: class scores are weighted aggregates of logits over
//! embedding-space neighborhoods of the class label words.
//!
//! Backends implement the [`backend::Backend`] trait and are selected by
//! name through [`backend::BackendRegistry`]. The bundled `toy` backend
//! is a deterministic mean-of-embeddings linear model that makes every
//! formula in the pipeline exactly testable; real frozen language models
//! plug in behind the same trait.

pub mod backend;
pub mod defaults;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod inference;
pub mod objective;
pub mod prompt;
pub mod seeds;
pub mod synthetic;
pub mod trainer;
pub mod verbalizer;

pub use error::{Error, Result};

//! Deterministic toy backend.
//!
//! Given the embedding table `E` (|V| x d), input tokens `x` and prompt
//! matrix `P` (m x d), the hidden state is the mean of all participating
//! vectors, `h = (sum_i emb(x_i) + sum_j P_j) / (|x| + m)`, and the
//! logits are `z = E h` (tied output head). The model is order-free,
//! linear in every prompt row, differentiable in closed form, and makes
//! the whole training path exactly testable. The tokenizer splits on
//! whitespace with exact-match vocabulary lookup.

use std::collections::HashMap;
use std::sync::Arc;

use crate::backend::{
    Backend, BackendDescriptor, BackendKind, LogitVector, ScoringRequest, Tokenizer,
};
use crate::embedding::{EmbeddingTable, TokenId};
use crate::error::Result;

/// Whitespace tokenizer over an exact-match vocabulary.
///
/// Words without a vocabulary entry map to the unknown id: the id of the
/// `<unk>` surface when the table has one, token id 0 otherwise (the
/// sentencepiece convention). Tables should reserve a `<unk>` entry so
/// id 0 does not double as a real token.
pub struct WhitespaceTokenizer {
    index: HashMap<String, TokenId>,
    unk: TokenId,
}

impl WhitespaceTokenizer {
    pub fn new(table: Arc<EmbeddingTable>) -> Self {
        let unk = table.lookup("<unk>").unwrap_or(TokenId(0));
        let index = table
            .tokens()
            .map(|t| (t.surface, t.id))
            .collect::<HashMap<_, _>>();
        Self { index, unk }
    }
}

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<TokenId> {
        text.split_whitespace()
            .map(|w| self.index.get(w).copied().unwrap_or(self.unk))
            .collect()
    }

    fn unknown_id(&self) -> TokenId {
        self.unk
    }
}

pub struct ToyBackend {
    table: Arc<EmbeddingTable>,
    rows_f64: Vec<f64>, // widened copy of the embedding matrix, row-major
    tokenizer: WhitespaceTokenizer,
    descriptor: BackendDescriptor,
}

impl ToyBackend {
    pub fn new(table: Arc<EmbeddingTable>, kind: BackendKind, max_length: usize) -> Self {
        let rows_f64 = table.raw_vectors().iter().map(|x| *x as f64).collect();
        let descriptor = BackendDescriptor {
            kind,
            vocab_size: table.vocab_size(),
            dim: table.dim(),
            max_length,
        };
        let tokenizer = WhitespaceTokenizer::new(table.clone());
        Self {
            table,
            rows_f64,
            tokenizer,
            descriptor,
        }
    }

    fn embedding_row_f64(&self, id: TokenId) -> &[f64] {
        let d = self.descriptor.dim;
        &self.rows_f64[id.index() * d..(id.index() + 1) * d]
    }

    /// Mean of input embeddings and prompt rows. Prompt rows arrive as
    /// f64 so gradient checks can probe the exact function the backend
    /// computes; `score` widens the stored f32 prompt losslessly.
    pub(crate) fn hidden_state(&self, input: &[TokenId], prompt_rows: &[Vec<f64>]) -> Vec<f64> {
        let d = self.descriptor.dim;
        let mut h = vec![0f64; d];
        for id in input {
            for (acc, x) in h.iter_mut().zip(self.embedding_row_f64(*id)) {
                *acc += *x;
            }
        }
        for row in prompt_rows {
            for (acc, x) in h.iter_mut().zip(row) {
                *acc += *x;
            }
        }
        let count = (input.len() + prompt_rows.len()) as f64;
        for acc in h.iter_mut() {
            *acc /= count;
        }
        h
    }

    pub(crate) fn logits_from_hidden(&self, h: &[f64]) -> Vec<f64> {
        let d = self.descriptor.dim;
        (0..self.descriptor.vocab_size)
            .map(|t| {
                let row = &self.rows_f64[t * d..(t + 1) * d];
                row.iter().zip(h).map(|(e, x)| e * x).sum()
            })
            .collect()
    }

    fn widened_prompt(request: &ScoringRequest) -> Vec<Vec<f64>> {
        (0..request.prompt.len())
            .map(|i| request.prompt.row(i).iter().map(|x| *x as f64).collect())
            .collect()
    }
}

impl Backend for ToyBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn embedding_table(&self) -> &EmbeddingTable {
        &self.table
    }

    fn tokenizer(&self) -> &dyn Tokenizer {
        &self.tokenizer
    }

    fn score(&self, request: &ScoringRequest) -> Result<LogitVector> {
        request.validate(&self.descriptor)?;
        let prompt_rows = Self::widened_prompt(request);
        let h = self.hidden_state(request.input_tokens, &prompt_rows);
        LogitVector::new(self.logits_from_hidden(&h))
    }

    /// d z_t / d P_jk = E[t][k] / (|x| + m), so the loss gradient for
    /// every prompt row is the same vector `E^T upstream / (|x| + m)`.
    fn grad_prompt(&self, request: &ScoringRequest, upstream: &[f64]) -> Result<Vec<Vec<f64>>> {
        request.validate(&self.descriptor)?;
        let d = self.descriptor.dim;
        let vocab = self.descriptor.vocab_size;
        if upstream.len() != vocab {
            return Err(crate::error::Error::DimensionMismatch {
                expected: vocab,
                got: upstream.len(),
            });
        }
        let count = (request.input_tokens.len() + request.prompt.len()) as f64;
        let mut row_grad = vec![0f64; d];
        for t in 0..vocab {
            let u = upstream[t];
            if u == 0.0 {
                continue;
            }
            let row = &self.rows_f64[t * d..(t + 1) * d];
            for (g, e) in row_grad.iter_mut().zip(row) {
                *g += u * e;
            }
        }
        for g in row_grad.iter_mut() {
            *g /= count;
        }
        Ok(vec![row_grad; request.prompt.len()])
    }
}

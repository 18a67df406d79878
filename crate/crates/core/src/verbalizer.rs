//! Verbalizers: class-to-token mappings.
//!
//! Training uses manually curated multilingual token sets
//! ([`TrainingVerbalizer`]); inference uses automatically constructed
//! weighted embedding neighborhoods ([`InferenceVerbalizer`]). Both are
//! immutable after construction.
//!
//! Class order is the document order of the source file, and every
//! downstream argmax tie-break uses that order, so loaders preserve it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::backend::Tokenizer;
use crate::embedding::{embed_surface, EmbeddingTable, Neighbor, TokenId};
use crate::error::{Error, Result};

/// How the training-verbalizer loader treats label words that do not map
/// to a single vocabulary token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    /// Reject the document.
    Strict,
    /// Skip the word and record a diagnostic.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum LabelIssue {
    /// The word tokenizes to more than one piece.
    MultiToken { pieces: usize },
    /// The word maps to no vocabulary token at all.
    OutOfVocabulary,
    /// The token is already claimed by another class.
    Overlap { first_class: String },
}

/// Per-label finding from document inspection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelDiagnostic {
    pub class: String,
    pub language: String,
    pub word: String,
    pub issue: LabelIssue,
}

impl std::fmt::Display for LabelDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.issue {
            LabelIssue::MultiToken { pieces } => write!(
                f,
                "{}/{}: {:?} tokenizes to {} pieces",
                self.class, self.language, self.word, pieces
            ),
            LabelIssue::OutOfVocabulary => write!(
                f,
                "{}/{}: {:?} is not in the vocabulary",
                self.class, self.language, self.word
            ),
            LabelIssue::Overlap { first_class } => write!(
                f,
                "{}/{}: {:?} already belongs to class {}",
                self.class, self.language, self.word, first_class
            ),
        }
    }
}

/// Curated multilingual token sets used during training.
///
/// Invariants, enforced at construction: every set non-empty, sets
/// pairwise disjoint, all token ids in range, and the sets leave at
/// least one vocabulary token unclaimed so label smoothing keeps a
/// positive denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingVerbalizer {
    classes: Vec<String>,
    token_sets: Vec<BTreeSet<TokenId>>,
    /// Per class, the source words by language tag. Provenance only:
    /// training consumes the flattened union.
    source_labels: Vec<Vec<(String, Vec<String>)>>,
    vocab_size: usize,
}

impl TrainingVerbalizer {
    pub fn from_parts(
        classes: Vec<String>,
        token_sets: Vec<BTreeSet<TokenId>>,
        source_labels: Vec<Vec<(String, Vec<String>)>>,
        vocab_size: usize,
    ) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidDocument("no classes in verbalizer".into()));
        }
        if classes.len() != token_sets.len() || classes.len() != source_labels.len() {
            return Err(Error::InvalidDocument(
                "class, token-set and label counts disagree".into(),
            ));
        }
        let mut owner: BTreeMap<TokenId, usize> = BTreeMap::new();
        let mut total = 0usize;
        for (idx, (class, set)) in classes.iter().zip(&token_sets).enumerate() {
            if set.is_empty() {
                return Err(Error::EmptyVerbalizer {
                    class: class.clone(),
                });
            }
            for id in set {
                if id.index() >= vocab_size {
                    return Err(Error::InvalidDocument(format!(
                        "token id {id} out of range for vocabulary of {vocab_size}"
                    )));
                }
                if let Some(first) = owner.insert(*id, idx) {
                    return Err(Error::AmbiguousVerbalizer {
                        surface: id.to_string(),
                        first: classes[first].clone(),
                        second: class.clone(),
                    });
                }
            }
            total += set.len();
        }
        if total >= vocab_size {
            return Err(Error::DegenerateSmoothing {
                vocab_size,
                label_tokens: total,
            });
        }
        Ok(Self {
            classes,
            token_sets,
            source_labels,
            vocab_size,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    pub fn token_set(&self, class_idx: usize) -> &BTreeSet<TokenId> {
        &self.token_sets[class_idx]
    }

    pub fn source_labels(&self, class_idx: usize) -> &[(String, Vec<String>)] {
        &self.source_labels[class_idx]
    }

    pub fn total_label_tokens(&self) -> usize {
        self.token_sets.iter().map(|s| s.len()).sum()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Restriction to a class subset, preserving relative class order.
    /// Used by the generalized zero-shot protocol, which trains on seen
    /// classes only.
    pub fn restrict_to(&self, keep: &[String]) -> Result<Self> {
        let mut classes = Vec::new();
        let mut token_sets = Vec::new();
        let mut source_labels = Vec::new();
        for (idx, class) in self.classes.iter().enumerate() {
            if keep.contains(class) {
                classes.push(class.clone());
                token_sets.push(self.token_sets[idx].clone());
                source_labels.push(self.source_labels[idx].clone());
            }
        }
        for name in keep {
            if !classes.contains(name) {
                return Err(Error::UnknownClass { class: name.clone() });
            }
        }
        Self::from_parts(classes, token_sets, source_labels, self.vocab_size)
    }

    /// The single-English-token variant used by the multilingual-labels
    /// ablation: each class keeps only the first word listed under the
    /// given language.
    pub fn single_language_variant(
        &self,
        language: &str,
        table: &EmbeddingTable,
        tokenizer: &dyn Tokenizer,
    ) -> Result<Self> {
        let mut token_sets = Vec::new();
        let mut source_labels = Vec::new();
        for (idx, class) in self.classes.iter().enumerate() {
            let word = self.source_labels[idx]
                .iter()
                .find(|(lang, words)| lang == language && !words.is_empty())
                .map(|(_, words)| words[0].clone())
                .ok_or_else(|| Error::MissingLabel {
                    class: class.clone(),
                    language: language.to_string(),
                })?;
            let id = single_token_id(&word, table, tokenizer).map_err(|fault| {
                Error::InvalidLabelToken {
                    class: class.clone(),
                    word: word.clone(),
                    reason: fault.reason(),
                }
            })?;
            token_sets.push(BTreeSet::from([id]));
            source_labels.push(vec![(language.to_string(), vec![word])]);
        }
        Self::from_parts(
            self.classes.clone(),
            token_sets,
            source_labels,
            self.vocab_size,
        )
    }
}

enum LabelFault {
    OutOfVocabulary,
    MultiToken(usize),
}

impl LabelFault {
    fn reason(&self) -> String {
        match self {
            LabelFault::OutOfVocabulary => "not in vocabulary".into(),
            LabelFault::MultiToken(n) => format!("{n} subword pieces"),
        }
    }

    fn issue(&self) -> LabelIssue {
        match self {
            LabelFault::OutOfVocabulary => LabelIssue::OutOfVocabulary,
            LabelFault::MultiToken(n) => LabelIssue::MultiToken { pieces: *n },
        }
    }
}

/// Resolves a label word to exactly one non-unknown vocabulary token.
fn single_token_id(
    word: &str,
    table: &EmbeddingTable,
    tokenizer: &dyn Tokenizer,
) -> std::result::Result<TokenId, LabelFault> {
    if let Some(id) = table.lookup(word) {
        return Ok(id);
    }
    let ids = tokenizer.tokenize(word);
    match ids.len() {
        0 => Err(LabelFault::OutOfVocabulary),
        1 if ids[0] == tokenizer.unknown_id() => Err(LabelFault::OutOfVocabulary),
        1 => Ok(ids[0]),
        n => Err(LabelFault::MultiToken(n)),
    }
}

/// Parsed training verbalizer document:
/// `{class_name: {language_code: [word, ...], ...}, ...}`, UTF-8 JSON,
/// class and language order preserved.
type ParsedDoc = Vec<(String, Vec<(String, Vec<String>)>)>;

fn parse_training_doc(json: &str) -> Result<ParsedDoc> {
    let value: serde_json::Value = serde_json::from_str(json)?;
    let root = value
        .as_object()
        .ok_or_else(|| Error::InvalidDocument("expected a top-level JSON object".into()))?;
    if root.is_empty() {
        return Err(Error::InvalidDocument("no classes in document".into()));
    }
    let mut out = Vec::with_capacity(root.len());
    for (class, langs) in root {
        let langs_obj = langs.as_object().ok_or_else(|| {
            Error::InvalidDocument(format!("class {class:?}: expected an object of languages"))
        })?;
        let mut per_lang = Vec::with_capacity(langs_obj.len());
        for (lang, words) in langs_obj {
            let arr = words.as_array().ok_or_else(|| {
                Error::InvalidDocument(format!("class {class:?}, language {lang:?}: expected an array"))
            })?;
            let mut list = Vec::with_capacity(arr.len());
            for w in arr {
                let s = w.as_str().ok_or_else(|| {
                    Error::InvalidDocument(format!(
                        "class {class:?}, language {lang:?}: expected strings"
                    ))
                })?;
                list.push(s.to_string());
            }
            per_lang.push((lang.clone(), list));
        }
        out.push((class.clone(), per_lang));
    }
    Ok(out)
}

/// Full inspection of a training verbalizer document: per-label verdicts
/// plus the structural problems that survive lenient skipping. The CLI
/// `validate-verbalizer` subcommand prints this; the loader consults it.
#[derive(Debug, Clone, Serialize)]
pub struct VerbalizerInspection {
    pub diagnostics: Vec<LabelDiagnostic>,
    pub empty_classes: Vec<String>,
    /// True when no diagnostics and no structural problems exist.
    pub valid_strict: bool,
    /// True when skipping flagged words still yields a valid verbalizer.
    pub valid_lenient: bool,
}

pub fn inspect_training_verbalizer(
    json: &str,
    table: &EmbeddingTable,
    tokenizer: &dyn Tokenizer,
) -> Result<VerbalizerInspection> {
    let doc = parse_training_doc(json)?;
    let mut diagnostics = Vec::new();
    let mut empty_classes = Vec::new();
    let mut owner: BTreeMap<TokenId, String> = BTreeMap::new();
    let mut overlap = false;
    for (class, per_lang) in &doc {
        let mut kept = 0usize;
        for (lang, words) in per_lang {
            for word in words {
                match single_token_id(word, table, tokenizer) {
                    Ok(id) => {
                        match owner.get(&id) {
                            Some(first) if first != class => {
                                overlap = true;
                                diagnostics.push(LabelDiagnostic {
                                    class: class.clone(),
                                    language: lang.clone(),
                                    word: word.clone(),
                                    issue: LabelIssue::Overlap {
                                        first_class: first.clone(),
                                    },
                                });
                            }
                            _ => {
                                owner.insert(id, class.clone());
                            }
                        }
                        kept += 1;
                    }
                    Err(fault) => {
                        diagnostics.push(LabelDiagnostic {
                            class: class.clone(),
                            language: lang.clone(),
                            word: word.clone(),
                            issue: fault.issue(),
                        });
                    }
                }
            }
        }
        if kept == 0 {
            empty_classes.push(class.clone());
        }
    }
    let total_tokens = owner.len();
    let degenerate = total_tokens >= table.vocab_size();
    let structural = overlap || !empty_classes.is_empty() || degenerate;
    Ok(VerbalizerInspection {
        valid_strict: diagnostics.is_empty() && !structural,
        valid_lenient: !structural,
        diagnostics,
        empty_classes,
    })
}

/// Loads a training verbalizer document.
///
/// Every label word must tokenize to exactly one vocabulary token; in
/// strict mode a violation rejects the document, in lenient mode the word
/// is skipped and reported. Overlapping sets are rejected in both modes —
/// the piecewise target distribution assigns each token to at most one
/// class, so overlaps would make it ill-defined.
pub fn load_training_verbalizer(
    json: &str,
    table: &EmbeddingTable,
    tokenizer: &dyn Tokenizer,
    mode: LabelMode,
) -> Result<(TrainingVerbalizer, Vec<LabelDiagnostic>)> {
    let doc = parse_training_doc(json)?;
    let mut classes = Vec::new();
    let mut token_sets: Vec<BTreeSet<TokenId>> = Vec::new();
    let mut source_labels = Vec::new();
    let mut diagnostics = Vec::new();
    let mut owner: BTreeMap<TokenId, String> = BTreeMap::new();
    for (class, per_lang) in doc {
        let mut set = BTreeSet::new();
        for (lang, words) in &per_lang {
            for word in words {
                match single_token_id(word, table, tokenizer) {
                    Ok(id) => {
                        if let Some(first) = owner.get(&id) {
                            if first != &class {
                                return Err(Error::AmbiguousVerbalizer {
                                    surface: word.clone(),
                                    first: first.clone(),
                                    second: class.clone(),
                                });
                            }
                        } else {
                            owner.insert(id, class.clone());
                        }
                        set.insert(id);
                    }
                    Err(fault) => match mode {
                        LabelMode::Strict => {
                            return Err(Error::InvalidLabelToken {
                                class: class.clone(),
                                word: word.clone(),
                                reason: fault.reason(),
                            });
                        }
                        LabelMode::Lenient => {
                            diagnostics.push(LabelDiagnostic {
                                class: class.clone(),
                                language: lang.clone(),
                                word: word.clone(),
                                issue: fault.issue(),
                            });
                        }
                    },
                }
            }
        }
        if set.is_empty() {
            return Err(Error::EmptyVerbalizer { class });
        }
        classes.push(class);
        token_sets.push(set);
        source_labels.push(per_lang);
    }
    let verbalizer =
        TrainingVerbalizer::from_parts(classes, token_sets, source_labels, table.vocab_size())?;
    Ok((verbalizer, diagnostics))
}

/// One weighted token of an inference neighborhood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedToken {
    pub token: TokenId,
    pub similarity: f32,
    pub weight: f64,
}

/// Automatically constructed weighted neighborhoods used at inference.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceVerbalizer {
    classes: Vec<String>,
    neighborhoods: Vec<Vec<WeightedToken>>,
    k: usize,
}

impl InferenceVerbalizer {
    pub fn from_parts(
        classes: Vec<String>,
        neighborhoods: Vec<Vec<WeightedToken>>,
        k: usize,
    ) -> Result<Self> {
        if classes.is_empty() || classes.len() != neighborhoods.len() {
            return Err(Error::InvalidDocument(
                "inference verbalizer needs one neighborhood per class".into(),
            ));
        }
        for (class, hood) in classes.iter().zip(&neighborhoods) {
            if hood.len() != k {
                return Err(Error::InvalidNeighborhood {
                    k,
                    vocab_size: hood.len(),
                });
            }
            let sum: f64 = hood.iter().map(|w| w.weight).sum();
            if hood.iter().any(|w| w.weight <= 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "weights for class {class:?} are not a positive distribution (sum {sum})"
                )));
            }
        }
        Ok(Self {
            classes,
            neighborhoods,
            k,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn neighborhood(&self, class_idx: usize) -> &[WeightedToken] {
        &self.neighborhoods[class_idx]
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Softmax over the similarities within one neighborhood.
///
/// The maximum is shifted out before exponentiation, which leaves the
/// result unchanged and keeps it stable for large similarity values.
pub fn compute_weights(neighborhood: &[Neighbor]) -> Vec<f64> {
    assert!(!neighborhood.is_empty(), "neighborhood must be non-empty");
    let max = neighborhood
        .iter()
        .map(|n| n.similarity as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = neighborhood
        .iter()
        .map(|n| (n.similarity as f64 - max).exp())
        .collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Builds the inference verbalizer: per class, the top-k vocabulary
/// neighborhood around the embedded class label, weighted by a softmax
/// over the cosine similarities.
///
/// Classes with identical labels get identical neighborhoods; only
/// training sets must be disjoint.
pub fn build_inference_verbalizer(
    class_labels: &[(String, String)],
    table: &EmbeddingTable,
    tokenizer: &dyn Tokenizer,
    k: usize,
) -> Result<InferenceVerbalizer> {
    if class_labels.is_empty() {
        return Err(Error::InvalidDocument("no class labels given".into()));
    }
    let mut classes = Vec::with_capacity(class_labels.len());
    let mut neighborhoods = Vec::with_capacity(class_labels.len());
    for (class, label) in class_labels {
        let anchor = embed_surface(label, table, tokenizer)?;
        let neighbors = table.top_k_neighbors(&anchor, k)?;
        let weights = compute_weights(&neighbors);
        let hood = neighbors
            .into_iter()
            .zip(weights)
            .map(|(n, weight)| WeightedToken {
                token: n.token,
                similarity: n.similarity,
                weight,
            })
            .collect();
        classes.push(class.clone());
        neighborhoods.push(hood);
    }
    InferenceVerbalizer::from_parts(classes, neighborhoods, k)
}

/// Parses an inference label document `{class_name: word, ...}`,
/// preserving class order.
pub fn parse_class_labels(json: &str) -> Result<Vec<(String, String)>> {
    let value: serde_json::Value = serde_json::from_str(json)?;
    let root = value
        .as_object()
        .ok_or_else(|| Error::InvalidDocument("expected a top-level JSON object".into()))?;
    if root.is_empty() {
        return Err(Error::InvalidDocument("no classes in label document".into()));
    }
    let mut out = Vec::with_capacity(root.len());
    for (class, word) in root {
        let s = word.as_str().ok_or_else(|| {
            Error::InvalidDocument(format!("label for class {class:?} must be a string"))
        })?;
        out.push((class.clone(), s.to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::toy::WhitespaceTokenizer;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn fixture() -> (Arc<EmbeddingTable>, WhitespaceTokenizer) {
        let table = Arc::new(
            EmbeddingTable::new(vec![
                ("<unk>".into(), vec![0.01, 0.01]),
                ("dog".into(), vec![1.0, 0.0]),
                ("Hund".into(), vec![0.9, 0.1]),
                ("car".into(), vec![0.0, 1.0]),
                ("auto".into(), vec![0.1, 0.9]),
                ("tree".into(), vec![0.5, 0.5]),
                ("rock".into(), vec![-0.5, 0.5]),
            ])
            .unwrap(),
        );
        let tok = WhitespaceTokenizer::new(table.clone());
        (table, tok)
    }

    #[test]
    fn loads_simple_document() {
        let (table, tok) = fixture();
        let doc = r#"{"A": {"en": ["dog"], "de": ["Hund"]}, "B": {"en": ["car"]}}"#;
        let (vb, diags) = load_training_verbalizer(doc, &table, &tok, LabelMode::Strict).unwrap();
        assert!(diags.is_empty());
        assert_eq!(vb.classes(), &["A".to_string(), "B".to_string()]);
        assert_eq!(vb.token_set(0).len(), 2);
        assert_eq!(vb.token_set(1).len(), 1);
        assert_eq!(vb.total_label_tokens(), 3);
    }

    #[test]
    fn multi_token_label_strict_vs_lenient() {
        let (table, tok) = fixture();
        let doc = r#"{"A": {"en": ["dog", "dog car"]}, "B": {"en": ["auto"]}}"#;
        let err = load_training_verbalizer(doc, &table, &tok, LabelMode::Strict).unwrap_err();
        assert!(matches!(err, Error::InvalidLabelToken { .. }));

        let (vb, diags) =
            load_training_verbalizer(doc, &table, &tok, LabelMode::Lenient).unwrap();
        assert_eq!(diags.len(), 1);
        assert!(matches!(diags[0].issue, LabelIssue::MultiToken { pieces: 2 }));
        assert_eq!(vb.token_set(0).len(), 1);
    }

    #[test]
    fn overlapping_sets_are_ambiguous() {
        let (table, tok) = fixture();
        let doc = r#"{"A": {"en": ["dog"]}, "B": {"en": ["dog"]}}"#;
        for mode in [LabelMode::Strict, LabelMode::Lenient] {
            let err = load_training_verbalizer(doc, &table, &tok, mode).unwrap_err();
            assert!(matches!(err, Error::AmbiguousVerbalizer { .. }));
        }
    }

    #[test]
    fn empty_class_is_rejected() {
        let (table, tok) = fixture();
        let doc = r#"{"A": {"en": []}, "B": {"en": ["car"]}}"#;
        let err = load_training_verbalizer(doc, &table, &tok, LabelMode::Strict).unwrap_err();
        assert!(matches!(err, Error::EmptyVerbalizer { .. }));
    }

    #[test]
    fn oov_label_is_invalid() {
        let (table, tok) = fixture();
        let doc = r#"{"A": {"en": ["zebra"]}, "B": {"en": ["car"]}}"#;
        let err = load_training_verbalizer(doc, &table, &tok, LabelMode::Strict).unwrap_err();
        assert!(matches!(err, Error::InvalidLabelToken { .. }));
    }

    #[test]
    fn saturated_vocabulary_is_degenerate() {
        let table = EmbeddingTable::new(vec![
            ("a".into(), vec![1.0, 0.0]),
            ("b".into(), vec![0.0, 1.0]),
        ])
        .unwrap();
        let err = TrainingVerbalizer::from_parts(
            vec!["A".into(), "B".into()],
            vec![BTreeSet::from([TokenId(0)]), BTreeSet::from([TokenId(1)])],
            vec![vec![], vec![]],
            table.vocab_size(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateSmoothing { .. }));
    }

    #[test]
    fn restriction_preserves_order_and_rejects_unknown() {
        let (table, tok) = fixture();
        let doc = r#"{"A": {"en": ["dog"]}, "B": {"en": ["car"]}, "C": {"en": ["tree"]}}"#;
        let (vb, _) = load_training_verbalizer(doc, &table, &tok, LabelMode::Strict).unwrap();
        let sub = vb.restrict_to(&["C".into(), "A".into()]).unwrap();
        assert_eq!(sub.classes(), &["A".to_string(), "C".to_string()]);
        assert!(vb.restrict_to(&["Z".into()]).is_err());
    }

    #[test]
    fn single_language_variant_keeps_first_english_word() {
        let (table, tok) = fixture();
        let doc = r#"{"A": {"en": ["dog"], "de": ["Hund"]}, "B": {"de": ["auto"], "en": ["car"]}}"#;
        let (vb, _) = load_training_verbalizer(doc, &table, &tok, LabelMode::Strict).unwrap();
        let en = vb.single_language_variant("en", &table, &tok).unwrap();
        assert_eq!(en.token_set(0), &BTreeSet::from([table.lookup("dog").unwrap()]));
        assert_eq!(en.token_set(1), &BTreeSet::from([table.lookup("car").unwrap()]));
        assert!(vb.single_language_variant("fr", &table, &tok).is_err());
    }

    #[test]
    fn inference_k1_in_vocabulary_label() {
        let (table, tok) = fixture();
        let labels = vec![("A".to_string(), "dog".to_string())];
        let vb = build_inference_verbalizer(&labels, &table, &tok, 1).unwrap();
        let hood = vb.neighborhood(0);
        assert_eq!(hood.len(), 1);
        assert_eq!(hood[0].token, table.lookup("dog").unwrap());
        assert_eq!(hood[0].similarity, 1.0);
        assert_eq!(hood[0].weight, 1.0);
    }

    #[test]
    fn identical_labels_give_identical_neighborhoods() {
        let (table, tok) = fixture();
        let labels = vec![
            ("A".to_string(), "dog".to_string()),
            ("B".to_string(), "dog".to_string()),
        ];
        let vb = build_inference_verbalizer(&labels, &table, &tok, 3).unwrap();
        assert_eq!(vb.neighborhood(0), vb.neighborhood(1));
    }

    #[test]
    fn neighborhoods_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let entries: Vec<(String, Vec<f32>)> = (0..20)
            .map(|i| {
                (
                    format!("t{i}"),
                    (0..4).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
                )
            })
            .collect();
        let table = Arc::new(EmbeddingTable::new(entries).unwrap());
        let tok = WhitespaceTokenizer::new(table.clone());
        let labels = vec![
            ("A".to_string(), "t3".to_string()),
            ("B".to_string(), "t11".to_string()),
        ];
        let vb = build_inference_verbalizer(&labels, &table, &tok, 4).unwrap();

        for (class_idx, (_, label)) in labels.iter().enumerate() {
            let anchor = table.row(table.lookup(label).unwrap()).to_vec();
            // brute force: every similarity, full sort, softmax by hand
            let mut sims: Vec<(u32, f32)> = (0..20)
                .map(|i| {
                    (
                        i,
                        crate::embedding::cosine_similarity(&anchor, table.row(TokenId(i)))
                            .unwrap(),
                    )
                })
                .collect();
            sims.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            sims.truncate(4);
            let z: f64 = sims.iter().map(|(_, s)| (*s as f64).exp()).sum();
            for (got, (id, sim)) in vb.neighborhood(class_idx).iter().zip(&sims) {
                assert_eq!(got.token.0, *id);
                assert_eq!(got.similarity, *sim);
                assert_relative_eq!(got.weight, (*sim as f64).exp() / z, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn weights_singleton_and_symmetry() {
        let one = compute_weights(&[Neighbor {
            token: TokenId(0),
            similarity: 0.37,
        }]);
        assert_eq!(one, vec![1.0]);

        let pair = compute_weights(&[
            Neighbor { token: TokenId(0), similarity: 0.9 },
            Neighbor { token: TokenId(1), similarity: 0.9 },
        ]);
        assert_eq!(pair, vec![0.5, 0.5]);
    }

    #[test]
    fn weights_hand_value() {
        let w = compute_weights(&[
            Neighbor { token: TokenId(0), similarity: 1.0 },
            Neighbor { token: TokenId(1), similarity: 0.0 },
        ]);
        assert_relative_eq!(w[0], 0.7311, epsilon = 1e-4);
        assert_relative_eq!(w[1], 0.2689, epsilon = 1e-4);
    }

    proptest! {
        #[test]
        fn weights_shift_invariant(
            // dyadic grid keeps the f32 addition exact, so the softmax
            // shift invariance holds to f64 rounding
            sims_q in proptest::collection::vec(-1024i32..1024, 1..8),
            shift_q in -512i32..512,
        ) {
            let shift = shift_q as f32 / 1024.0;
            let base: Vec<Neighbor> = sims_q
                .iter()
                .enumerate()
                .map(|(i, s)| Neighbor {
                    token: TokenId(i as u32),
                    similarity: *s as f32 / 1024.0,
                })
                .collect();
            let shifted: Vec<Neighbor> = base
                .iter()
                .map(|n| Neighbor { token: n.token, similarity: n.similarity + shift })
                .collect();
            let a = compute_weights(&base);
            let b = compute_weights(&shifted);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn weights_are_monotone_and_normalized(
            sims in proptest::collection::vec(-1.0f32..1.0, 1..8),
        ) {
            let hood: Vec<Neighbor> = sims
                .iter()
                .enumerate()
                .map(|(i, s)| Neighbor { token: TokenId(i as u32), similarity: *s })
                .collect();
            let w = compute_weights(&hood);
            let sum: f64 = w.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            for i in 0..sims.len() {
                for j in 0..sims.len() {
                    if sims[i] > sims[j] {
                        prop_assert!(w[i] >= w[j]);
                    }
                }
            }
        }

        // fuzz the loader: every accepted verbalizer satisfies the
        // invariants, every structural violation is rejected
        #[test]
        fn loader_accepts_exactly_valid_documents(
            assignments in proptest::collection::vec(0usize..4, 2..7),
            class_count in 2usize..4,
        ) {
            let (table, tok) = fixture();
            // words 1..=6 of the fixture vocabulary, assigned to random classes
            let words = ["dog", "Hund", "car", "auto", "tree", "rock"];
            let mut per_class: Vec<Vec<&str>> = vec![Vec::new(); class_count];
            for (w, a) in assignments.iter().enumerate() {
                per_class[a % class_count].push(words[w]);
            }
            let mut doc = serde_json::Map::new();
            for (c, ws) in per_class.iter().enumerate() {
                let mut langs = serde_json::Map::new();
                langs.insert(
                    "en".to_string(),
                    serde_json::Value::Array(
                        ws.iter().map(|w| serde_json::Value::String(w.to_string())).collect(),
                    ),
                );
                doc.insert(format!("class{c}"), serde_json::Value::Object(langs));
            }
            let json = serde_json::Value::Object(doc).to_string();
            let expect_valid = per_class.iter().all(|ws| !ws.is_empty());
            match load_training_verbalizer(&json, &table, &tok, LabelMode::Strict) {
                Ok((vb, _)) => {
                    prop_assert!(expect_valid);
                    // disjointness and coverage
                    let mut seen = BTreeSet::new();
                    for idx in 0..vb.classes().len() {
                        prop_assert!(!vb.token_set(idx).is_empty());
                        for id in vb.token_set(idx) {
                            prop_assert!(seen.insert(*id));
                        }
                    }
                    prop_assert!(vb.total_label_tokens() < table.vocab_size());
                }
                Err(_) => prop_assert!(!expect_valid),
            }
        }
    }

    #[test]
    fn parse_class_labels_preserves_order() {
        let labels = parse_class_labels(r#"{"B": "car", "A": "dog"}"#).unwrap();
        assert_eq!(
            labels,
            vec![
                ("B".to_string(), "car".to_string()),
                ("A".to_string(), "dog".to_string())
            ]
        );
    }
}

//! Deterministic synthetic topic-classification task for the toy
//! backend.
//!
//! Three topic classes with orthonormal anchor directions plus a fourth
//! orthonormal "style" direction. Every content token carries a strong
//! shared style component, and the second class's label token leans
//! toward that style, so an untrained prompt systematically over-predicts
//! that class. The defect is exactly what a trained prompt can repair: in
//! the toy backend the prompt contributes a constant logit bias, and
//! documents have fixed length, so one learned correction cancels the
//! shared style component and the anchors separate the classes cleanly.
//! Held-out accuracy therefore climbs well above the untrained baseline
//! once training works.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::backend::toy::ToyBackend;
use crate::backend::BackendKind;
use crate::embedding::EmbeddingTable;
use crate::error::Result;
use crate::eval::corpus::{Example, LabeledCorpus};
use crate::seeds::seeded_rng;

const CLASSES: [&str; 3] = ["sports", "economy", "science"];
const TRANSLATIONS: [[(&str, &str); 2]; 3] = [
    [("de", "sport"), ("es", "deporte")],
    [("de", "wirtschaft"), ("es", "economia")],
    [("de", "wissenschaft"), ("es", "ciencia")],
];
const CONTENT_PER_CLASS: usize = 8;

#[derive(Debug, Clone)]
pub struct ToyTaskConfig {
    pub vocab_size: usize,
    pub dim: usize,
    pub train_per_class: usize,
    pub heldout_per_class: usize,
    /// Fixed document length in tokens.
    pub doc_len: usize,
    /// Shared style component carried by every content token.
    pub content_style_scale: f64,
    /// Style component of the second class's label token; this is what
    /// makes the untrained prompt over-predict that class.
    pub label_style_tilt: f64,
    /// Language tags cycled over the generated examples.
    pub languages: Vec<String>,
    pub seed: u64,
}

impl Default for ToyTaskConfig {
    fn default() -> Self {
        Self {
            vocab_size: 50,
            dim: 16,
            train_per_class: 32,
            heldout_per_class: 20,
            doc_len: 6,
            content_style_scale: 1.5,
            label_style_tilt: 0.8,
            languages: vec!["en".to_string()],
            seed: 0,
        }
    }
}

pub struct ToyTask {
    pub table: Arc<EmbeddingTable>,
    pub train: LabeledCorpus,
    pub heldout: LabeledCorpus,
    /// Training verbalizer document (JSON).
    pub verbalizer_doc: String,
    /// Class name to English label word, in class order.
    pub class_labels: Vec<(String, String)>,
}

impl ToyTask {
    pub fn backend(&self, kind: BackendKind, max_length: usize) -> ToyBackend {
        ToyBackend::new(self.table.clone(), kind, max_length)
    }
}

fn gaussian_vec(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("valid distribution");
    (0..dim).map(|_| normal.sample(rng) * scale).collect()
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

/// Orthonormal directions via Gram-Schmidt on random vectors.
fn orthonormal(rng: &mut impl Rng, dim: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(count <= dim);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    while out.len() < count {
        let mut candidate = gaussian_vec(rng, dim, 1.0);
        for existing in &out {
            let dot: f64 = candidate.iter().zip(existing).map(|(a, b)| a * b).sum();
            for (c, e) in candidate.iter_mut().zip(existing) {
                *c -= dot * e;
            }
        }
        let norm = candidate.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        normalize(&mut candidate);
        out.push(candidate);
    }
    out
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|x| *x as f32).collect()
}

/// Builds the full task: embedding table, train and held-out corpora,
/// training verbalizer document, and inference labels.
pub fn separable_topic_task(config: &ToyTaskConfig) -> Result<ToyTask> {
    let dim = config.dim;
    let fixed = 1 + 3 + 6 + 3 * CONTENT_PER_CLASS;
    assert!(
        config.vocab_size >= fixed,
        "vocab_size must be at least {fixed}"
    );
    assert!(
        config.doc_len <= CONTENT_PER_CLASS,
        "documents sample content tokens without replacement"
    );
    let mut rng = seeded_rng(config.seed, "toy-task/embeddings");
    let dirs = orthonormal(&mut rng, dim, 4);
    let (anchors, style) = (&dirs[..3], &dirs[3]);
    // the second class's label leans toward the style direction
    let label_vec = |c: usize| -> Vec<f64> {
        let tilt = if c == 1 { config.label_style_tilt } else { 0.0 };
        anchors[c]
            .iter()
            .zip(style)
            .map(|(a, s)| a + tilt * s)
            .collect()
    };

    let mut entries: Vec<(String, Vec<f32>)> = Vec::with_capacity(config.vocab_size);
    entries.push(("<unk>".to_string(), to_f32(&gaussian_vec(&mut rng, dim, 0.05))));
    for (c, class) in CLASSES.iter().enumerate() {
        entries.push((class.to_string(), to_f32(&label_vec(c))));
    }
    // translations: tight noise around the label vector, normalized
    for (c, langs) in TRANSLATIONS.iter().enumerate() {
        for (_, word) in langs {
            let mut v: Vec<f64> = label_vec(c)
                .iter()
                .zip(gaussian_vec(&mut rng, dim, 0.05))
                .map(|(a, n)| a + n)
                .collect();
            normalize(&mut v);
            entries.push((word.to_string(), to_f32(&v)));
        }
    }
    // content tokens: class anchor plus the shared style component plus
    // noise
    let mut content: Vec<Vec<String>> = vec![Vec::new(); 3];
    for (c, class) in CLASSES.iter().enumerate() {
        for i in 0..CONTENT_PER_CLASS {
            let noise = gaussian_vec(&mut rng, dim, 0.35);
            let v: Vec<f64> = anchors[c]
                .iter()
                .zip(style)
                .zip(noise)
                .map(|((a, s), n)| a + config.content_style_scale * s + n)
                .collect();
            let surface = format!("{class}_w{i}");
            content[c].push(surface.clone());
            entries.push((surface, to_f32(&v)));
        }
    }
    while entries.len() < config.vocab_size {
        let surface = format!("x{}", entries.len());
        entries.push((surface, to_f32(&gaussian_vec(&mut rng, dim, 0.3))));
    }
    let table = Arc::new(EmbeddingTable::new(entries)?);

    let make_docs = |prefix: &str, per_class: usize, purpose: &str| -> Result<LabeledCorpus> {
        let mut rng = seeded_rng(config.seed, purpose);
        let mut examples = Vec::with_capacity(per_class * 3);
        let mut lang_cursor = 0usize;
        for (c, class) in CLASSES.iter().enumerate() {
            for i in 0..per_class {
                let mut pool = content[c].clone();
                use rand::seq::SliceRandom;
                pool.shuffle(&mut rng);
                pool.truncate(config.doc_len);
                let language = config.languages[lang_cursor % config.languages.len()].clone();
                lang_cursor += 1;
                examples.push(Example {
                    id: format!("{prefix}-{class}-{i}"),
                    text: pool.join(" "),
                    label: class.to_string(),
                    language,
                });
            }
        }
        LabeledCorpus::new(examples, None)
    };
    let train = make_docs("train", config.train_per_class, "toy-task/train-docs")?;
    let heldout = make_docs("dev", config.heldout_per_class, "toy-task/dev-docs")?;

    let mut doc = serde_json::Map::new();
    for (c, class) in CLASSES.iter().enumerate() {
        let mut langs = serde_json::Map::new();
        langs.insert(
            "en".to_string(),
            serde_json::json!([class]),
        );
        for (lang, word) in &TRANSLATIONS[c] {
            langs.insert(lang.to_string(), serde_json::json!([word]));
        }
        doc.insert(class.to_string(), serde_json::Value::Object(langs));
    }
    let verbalizer_doc = serde_json::Value::Object(doc).to_string();
    let class_labels = CLASSES
        .iter()
        .map(|c| (c.to_string(), c.to_string()))
        .collect();
    Ok(ToyTask {
        table,
        train,
        heldout,
        verbalizer_doc,
        class_labels,
    })
}

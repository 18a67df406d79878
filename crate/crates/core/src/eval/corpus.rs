//! Labeled corpus ingestion.
//!
//! Records are `{"id", "text", "label", "lang"}`, either as JSON lines
//! or as CSV with the same column names, UTF-8 throughout. The class
//! catalog is the label order of first appearance unless an expected
//! catalog is supplied for validation.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub text: String,
    pub label: String,
    #[serde(rename = "lang")]
    pub language: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses from the file extension; `.csv` is CSV, everything else
    /// JSON lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    pub examples: Vec<Example>,
    /// Classes in order of first appearance (or the supplied catalog).
    pub classes: Vec<String>,
    pub split: Option<String>,
}

impl LabeledCorpus {
    /// Validates ids and labels. With `expected_catalog`, records whose
    /// label is outside it are rejected and the catalog order is taken
    /// from it; otherwise the catalog is derived from the data.
    pub fn new(examples: Vec<Example>, expected_catalog: Option<&[String]>) -> Result<Self> {
        let mut seen_ids = HashSet::new();
        let mut classes: Vec<String> = expected_catalog.map(|c| c.to_vec()).unwrap_or_default();
        for ex in &examples {
            if !seen_ids.insert(ex.id.clone()) {
                return Err(Error::DuplicateId { id: ex.id.clone() });
            }
            if ex.text.is_empty() {
                return Err(Error::InvalidDocument(format!(
                    "example {:?} has empty text",
                    ex.id
                )));
            }
            if !classes.contains(&ex.label) {
                if expected_catalog.is_some() {
                    return Err(Error::UnknownClass {
                        class: ex.label.clone(),
                    });
                }
                classes.push(ex.label.clone());
            }
        }
        Ok(Self {
            examples,
            classes,
            split: None,
        })
    }

    pub fn with_split(mut self, split: impl Into<String>) -> Self {
        self.split = Some(split.into());
        self
    }

    pub fn from_jsonl<R: BufRead>(reader: R, expected_catalog: Option<&[String]>) -> Result<Self> {
        let mut examples = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let ex: Example = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            examples.push(ex);
        }
        Self::new(examples, expected_catalog)
    }

    pub fn from_csv<R: std::io::Read>(
        reader: R,
        expected_catalog: Option<&[String]>,
    ) -> Result<Self> {
        let mut csv_reader = csv::Reader::from_reader(reader);
        let mut examples = Vec::new();
        for (recno, record) in csv_reader.deserialize::<Example>().enumerate() {
            let ex = record.map_err(|e| Error::MalformedRecord {
                line: recno + 2, // header is line 1
                message: e.to_string(),
            })?;
            examples.push(ex);
        }
        Self::new(examples, expected_catalog)
    }

    pub fn load<P: AsRef<Path>>(path: P, expected_catalog: Option<&[String]>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)?;
        match CorpusFormat::from_path(path) {
            CorpusFormat::Jsonl => Self::from_jsonl(BufReader::new(file), expected_catalog),
            CorpusFormat::Csv => Self::from_csv(BufReader::new(file), expected_catalog),
        }
    }

    /// Distinct language tags, in order of first appearance.
    pub fn languages(&self) -> Vec<String> {
        let mut out = Vec::new();
        for ex in &self.examples {
            if !out.contains(&ex.language) {
                out.push(ex.language.clone());
            }
        }
        out
    }

    /// Examples restricted to the given classes; the catalog becomes
    /// exactly `keep`, in the order given.
    pub fn filter_classes(&self, keep: &[String]) -> LabeledCorpus {
        LabeledCorpus {
            examples: self
                .examples
                .iter()
                .filter(|ex| keep.contains(&ex.label))
                .cloned()
                .collect(),
            classes: keep.to_vec(),
            split: self.split.clone(),
        }
    }

    /// Everything except the given example ids; the catalog is kept.
    pub fn without_ids(&self, exclude: &HashSet<String>) -> LabeledCorpus {
        LabeledCorpus {
            examples: self
                .examples
                .iter()
                .filter(|ex| !exclude.contains(&ex.id))
                .cloned()
                .collect(),
            classes: self.classes.clone(),
            split: self.split.clone(),
        }
    }

    /// Examples restricted to the given language tags; the catalog is
    /// kept.
    pub fn filter_languages(&self, keep: &[String]) -> LabeledCorpus {
        LabeledCorpus {
            examples: self
                .examples
                .iter()
                .filter(|ex| keep.contains(&ex.language))
                .cloned()
                .collect(),
            classes: self.classes.clone(),
            split: self.split.clone(),
        }
    }

    pub fn write_jsonl<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = String::new();
        for ex in &self.examples {
            out.push_str(&serde_json::to_string(ex)?);
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Unlabeled documents for `classify`: JSON lines with `id` and `text`
/// (labels, if present, are ignored).
pub fn load_documents<P: AsRef<Path>>(path: P) -> Result<Vec<(String, String)>> {
    #[derive(Deserialize)]
    struct Doc {
        id: String,
        text: String,
    }
    let file = File::open(path.as_ref())?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Doc = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        out.push((doc.id, doc.text));
    }
    Ok(out)
}

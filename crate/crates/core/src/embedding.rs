//! Token vocabulary and embedding table.
//!
//! The table is the substrate for verbalizer construction and for the toy
//! backend: it owns the surface strings, the fixed-dimension float32
//! vectors, and the similarity-search primitives. It is read-only after
//! construction and safe to share across threads.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::backend::Tokenizer;
use crate::error::{Error, Result};

/// Index into the vocabulary. Ids are contiguous in `[0, vocab_size)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for TokenId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A vocabulary entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: TokenId,
    pub surface: String,
}

/// A token paired with its cosine similarity to some anchor vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub token: TokenId,
    pub similarity: f32,
}

const BINARY_MAGIC: &[u8; 8] = b"EMB_TBL1";

/// Vocabulary paired with one float32 embedding row per token.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    surfaces: Vec<String>,
    vectors: Vec<f32>, // row-major, vocab_size * dim
    dim: usize,
    surface_index: HashMap<String, TokenId>,
}

impl EmbeddingTable {
    /// Builds a table from `(surface, vector)` entries; ids are assigned
    /// by position.
    ///
    /// Rejects tables that would break downstream invariants: fewer than
    /// two tokens, inconsistent or zero dimensions, non-finite entries,
    /// all-zero rows (cosine similarity must stay defined), and empty or
    /// duplicate surfaces. Surfaces may not contain tabs or newlines so
    /// the text file format stays unambiguous.
    pub fn new(entries: Vec<(String, Vec<f32>)>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "embedding table needs at least 2 tokens, got {}",
                entries.len()
            )));
        }
        let dim = entries[0].1.len();
        if dim == 0 {
            return Err(Error::InvalidConfig(
                "embedding dimension must be positive".into(),
            ));
        }
        let mut surfaces = Vec::with_capacity(entries.len());
        let mut vectors = Vec::with_capacity(entries.len() * dim);
        let mut surface_index = HashMap::with_capacity(entries.len());
        for (pos, (surface, row)) in entries.into_iter().enumerate() {
            if surface.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "token {pos} has an empty surface"
                )));
            }
            if surface.contains('\t') || surface.contains('\n') {
                return Err(Error::InvalidConfig(format!(
                    "surface {surface:?} contains a tab or newline"
                )));
            }
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "embedding row for {surface:?} has non-finite entries"
                )));
            }
            if row.iter().all(|x| *x == 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "embedding row for {surface:?} is all zeros"
                )));
            }
            let id = TokenId(pos as u32);
            if surface_index.insert(surface.clone(), id).is_some() {
                return Err(Error::InvalidConfig(format!(
                    "duplicate surface {surface:?}"
                )));
            }
            surfaces.push(surface);
            vectors.extend_from_slice(&row);
        }
        Ok(Self {
            surfaces,
            vectors,
            dim,
            surface_index,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.surfaces.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, id: TokenId) -> &[f32] {
        let start = id.index() * self.dim;
        &self.vectors[start..start + self.dim]
    }

    pub fn surface(&self, id: TokenId) -> &str {
        &self.surfaces[id.index()]
    }

    pub fn lookup(&self, surface: &str) -> Option<TokenId> {
        self.surface_index.get(surface).copied()
    }

    pub fn tokens(&self) -> impl Iterator<Item = Token> + '_ {
        self.surfaces.iter().enumerate().map(|(i, s)| Token {
            id: TokenId(i as u32),
            surface: s.clone(),
        })
    }

    /// Raw row-major float data; used by backends that keep a widened copy.
    pub fn raw_vectors(&self) -> &[f32] {
        &self.vectors
    }

    /// Deterministic digest over surfaces and float bits. Used to assert
    /// that training leaves backend parameters untouched.
    pub fn content_hash(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for s in &self.surfaces {
            s.hash(&mut h);
        }
        for v in &self.vectors {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// The `k` tokens most similar to `anchor`, descending by cosine
    /// similarity; ties broken by ascending token id so neighbor lists
    /// are identical across runs and platforms.
    pub fn top_k_neighbors(&self, anchor: &[f32], k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 || k > self.vocab_size() {
            return Err(Error::InvalidNeighborhood {
                k,
                vocab_size: self.vocab_size(),
            });
        }
        let mut scored: Vec<Neighbor> = (0..self.vocab_size())
            .map(|i| {
                let id = TokenId(i as u32);
                cosine_similarity(anchor, self.row(id)).map(|s| Neighbor {
                    token: id,
                    similarity: s,
                })
            })
            .collect::<Result<_>>()?;
        scored.sort_by(|a, b| {
            b.similarity
                .partial_cmp(&a.similarity)
                .expect("similarities are finite")
                .then(a.token.cmp(&b.token))
        });
        scored.truncate(k);
        Ok(scored)
    }

    /// Plain-text serialization: a `vocab_size dim` header line, then one
    /// `surface\tf0 f1 ...` line per token. Floats are printed with the
    /// shortest representation that parses back to the same float32 bits.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.vocab_size(), self.dim)?;
        for (i, surface) in self.surfaces.iter().enumerate() {
            write!(w, "{surface}\t")?;
            let row = self.row(TokenId(i as u32));
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    write!(w, " ")?;
                }
                write!(w, "{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidDocument("missing embedding header".into()))??;
        let mut parts = header.split_whitespace();
        let vocab_size: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidDocument("bad vocab_size in header".into()))?;
        let dim: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidDocument("bad dim in header".into()))?;
        let mut entries = Vec::with_capacity(vocab_size);
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (surface, floats) = line.split_once('\t').ok_or(Error::MalformedRecord {
                line: lineno + 2,
                message: "expected surface<TAB>floats".into(),
            })?;
            let row: Vec<f32> = floats
                .split_whitespace()
                .map(|t| {
                    t.parse::<f32>().map_err(|e| Error::MalformedRecord {
                        line: lineno + 2,
                        message: format!("bad float {t:?}: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != dim {
                return Err(Error::MalformedRecord {
                    line: lineno + 2,
                    message: format!("expected {dim} floats, got {}", row.len()),
                });
            }
            entries.push((surface.to_string(), row));
        }
        if entries.len() != vocab_size {
            return Err(Error::InvalidDocument(format!(
                "header declares {vocab_size} tokens, found {}",
                entries.len()
            )));
        }
        Self::new(entries)
    }

    /// Length-prefixed binary serialization: magic, u32 vocab_size, u32
    /// dim, then per token a u32 surface byte length, the UTF-8 bytes and
    /// `dim` little-endian float32 values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_u32::<LittleEndian>(self.vocab_size() as u32)?;
        w.write_u32::<LittleEndian>(self.dim as u32)?;
        for (i, surface) in self.surfaces.iter().enumerate() {
            w.write_u32::<LittleEndian>(surface.len() as u32)?;
            w.write_all(surface.as_bytes())?;
            for x in self.row(TokenId(i as u32)) {
                w.write_f32::<LittleEndian>(*x)?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::InvalidDocument(
                "bad magic in binary embedding table".into(),
            ));
        }
        let vocab_size = r.read_u32::<LittleEndian>()? as usize;
        let dim = r.read_u32::<LittleEndian>()? as usize;
        let mut entries = Vec::with_capacity(vocab_size);
        for _ in 0..vocab_size {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            let surface = String::from_utf8(buf)
                .map_err(|e| Error::InvalidDocument(format!("surface is not UTF-8: {e}")))?;
            let mut row = Vec::with_capacity(dim);
            for _ in 0..dim {
                row.push(r.read_f32::<LittleEndian>()?);
            }
            entries.push((surface, row));
        }
        Self::new(entries)
    }

    /// Loads either layout, sniffing the binary magic first.
    pub fn read_from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut file = File::open(path.as_ref())?;
        let mut magic = [0u8; 8];
        let n = file.read(&mut magic)?;
        drop(file);
        let file = File::open(path.as_ref())?;
        if n == 8 && &magic == BINARY_MAGIC {
            Self::read_binary(BufReader::new(file))
        } else {
            Self::read_text(BufReader::new(file))
        }
    }

    pub fn write_text_path<P: AsRef<Path>>(&self, path: P) -> io::Result<()> {
        self.write_text(BufWriter::new(File::create(path)?))
    }

    pub fn write_binary_path<P: AsRef<Path>>(&self, path: P) -> io::Result<()> {
        self.write_binary(BufWriter::new(File::create(path)?))
    }
}

/// Cosine similarity `a.b / (|a||b|)`, clamped to `[-1, 1]`.
///
/// Accumulation happens in f64 and the result is narrowed to f32; the
/// narrowed values are what all neighbor ordering compares, exactly.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f32> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut dot = 0f64;
    let mut na = 0f64;
    let mut nb = 0f64;
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (*x as f64, *y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateEmbedding);
    }
    let sim = dot / (na.sqrt() * nb.sqrt());
    Ok(sim.clamp(-1.0, 1.0) as f32)
}

/// Embeds a surface string against the table.
///
/// A surface that is itself a vocabulary entry returns that row; anything
/// else is run through the backend tokenizer and the arithmetic mean of
/// the known constituent rows is returned. Tokens the tokenizer mapped to
/// its unknown id carry no information and are skipped; if nothing
/// remains the surface is unknown.
pub fn embed_surface(
    surface: &str,
    table: &EmbeddingTable,
    tokenizer: &dyn Tokenizer,
) -> Result<Vec<f32>> {
    if surface.is_empty() {
        return Err(Error::UnknownSurface {
            surface: surface.to_string(),
        });
    }
    if let Some(id) = table.lookup(surface) {
        return Ok(table.row(id).to_vec());
    }
    let unk = tokenizer.unknown_id();
    let known: Vec<TokenId> = tokenizer
        .tokenize(surface)
        .into_iter()
        .filter(|id| *id != unk)
        .collect();
    if known.is_empty() {
        return Err(Error::UnknownSurface {
            surface: surface.to_string(),
        });
    }
    let mut acc = vec![0f64; table.dim()];
    for id in &known {
        for (a, x) in acc.iter_mut().zip(table.row(*id)) {
            *a += *x as f64;
        }
    }
    let n = known.len() as f64;
    Ok(acc.into_iter().map(|a| (a / n) as f32).collect())
}

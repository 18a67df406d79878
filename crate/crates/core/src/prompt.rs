//! Trainable soft prompt and its checkpoint format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SFTPRMPT";
const FORMAT_VERSION: u32 = 1;

/// Matrix of trainable prompt vectors, one row per virtual token.
///
/// Values are stored as float32 — the same precision as the embedding
/// rows they are initialized from and the checkpoint format carries — so
/// a save/load round trip is bit-exact. All gradient math happens in
/// f64 on widened copies.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftPrompt {
    data: Vec<f32>, // row-major, rows * dim
    rows: usize,
    dim: usize,
    init_source: String,
    trained_steps: u64,
}

impl SoftPrompt {
    /// Builds a prompt from rows. At least one row is required and every
    /// entry must be finite.
    pub fn from_rows(rows: Vec<Vec<f32>>, init_source: impl Into<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidConfig(
                "soft prompt needs at least one row".into(),
            ));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::InvalidConfig(
                "soft prompt rows must be non-empty".into(),
            ));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(
                    "soft prompt has non-finite entries".into(),
                ));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            data,
            rows: rows.len(),
            dim,
            init_source: init_source.into(),
            trained_steps: 0,
        })
    }

    /// Number of prompt rows (virtual tokens).
    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn init_source(&self) -> &str {
        &self.init_source
    }

    pub fn trained_steps(&self) -> u64 {
        self.trained_steps
    }

    pub(crate) fn set_trained_steps(&mut self, steps: u64) {
        self.trained_steps = steps;
    }

    /// Checks this prompt against a backend embedding dimension.
    pub fn validate_dim(&self, backend_dim: usize) -> Result<()> {
        if self.dim != backend_dim {
            return Err(Error::IncompatiblePrompt {
                prompt_dim: self.dim,
                backend_dim,
            });
        }
        Ok(())
    }

    /// Writes the checkpoint: magic, format version, row and dimension
    /// counts, init source, trained step count, then `rows * dim`
    /// little-endian float32 values in row-major order.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        w.write_u32::<LittleEndian>(self.rows as u32)?;
        w.write_u32::<LittleEndian>(self.dim as u32)?;
        w.write_u32::<LittleEndian>(self.init_source.len() as u32)?;
        w.write_all(self.init_source.as_bytes())?;
        w.write_u64::<LittleEndian>(self.trained_steps)?;
        for x in &self.data {
            w.write_f32::<LittleEndian>(*x)?;
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let corrupt = |reason: &str| Error::InvalidCheckpoint {
            reason: reason.to_string(),
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| corrupt("file too short for header"))?;
        if &magic != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = r
            .read_u32::<LittleEndian>()
            .map_err(|_| corrupt("truncated header"))?;
        if version != FORMAT_VERSION {
            return Err(corrupt(&format!("unsupported format version {version}")));
        }
        let rows = r
            .read_u32::<LittleEndian>()
            .map_err(|_| corrupt("truncated header"))? as usize;
        let dim = r
            .read_u32::<LittleEndian>()
            .map_err(|_| corrupt("truncated header"))? as usize;
        if rows == 0 || dim == 0 {
            return Err(corrupt("empty prompt shape"));
        }
        let source_len = r
            .read_u32::<LittleEndian>()
            .map_err(|_| corrupt("truncated header"))? as usize;
        let mut source = vec![0u8; source_len];
        r.read_exact(&mut source)
            .map_err(|_| corrupt("truncated init source"))?;
        let init_source =
            String::from_utf8(source).map_err(|_| corrupt("init source is not UTF-8"))?;
        let trained_steps = r
            .read_u64::<LittleEndian>()
            .map_err(|_| corrupt("truncated header"))?;
        let mut data = Vec::with_capacity(rows * dim);
        for _ in 0..rows * dim {
            data.push(
                r.read_f32::<LittleEndian>()
                    .map_err(|_| corrupt("truncated prompt data"))?,
            );
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(corrupt("trailing bytes after prompt data"));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(corrupt("non-finite prompt values"));
        }
        Ok(Self {
            data,
            rows,
            dim,
            init_source,
            trained_steps,
        })
    }

    pub fn save_to_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.save(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::load(BufReader::new(File::open(path)?))
    }

    /// Loads a checkpoint and rejects it when its dimension does not
    /// match the target backend.
    pub fn load_for_backend<P: AsRef<Path>>(path: P, backend_dim: usize) -> Result<Self> {
        let prompt = Self::load_from_path(path)?;
        prompt.validate_dim(backend_dim)?;
        Ok(prompt)
    }
}

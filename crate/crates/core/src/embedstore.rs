//! The `SEMB` embedding interchange format.
//!
//! One file per lemma, little-endian, no padding:
//!
//! ```text
//! "SEMB"                      magic, 4 bytes
//! u16 version                 currently 1
//! u32 n, u32 d                rows, columns
//! u16 len + UTF-8             model identifier
//! u16 len + UTF-8             lemma
//! n x (u16 len + UTF-8)       sentence ids, row order
//! n*d f32                     row-major matrix
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::corpus::SentenceRecord;
use crate::jsonl;

pub const MAGIC: [u8; 4] = *b"SEMB";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("bad magic bytes {found:02x?}, expected \"SEMB\"")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported format version {found} (expected {VERSION})")]
    VersionMismatch { found: u16 },
    #[error("truncated {section}: expected {expected} bytes at offset {offset}, found {actual}")]
    Truncated {
        section: &'static str,
        offset: usize,
        expected: usize,
        actual: usize,
    },
    #[error("{extra} trailing bytes after matrix payload")]
    TrailingBytes { extra: usize },
    #[error("{field} is not valid UTF-8")]
    InvalidUtf8 { field: String },
    #[error("{field} is {len} bytes, longer than the u16 length prefix allows")]
    FieldTooLong { field: String, len: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("duplicate sentence id {0:?}")]
    DuplicateId(String),
    #[error("invalid shape: {0}")]
    Shape(String),
}

impl EmbedError {
    pub fn is_io(&self) -> bool {
        matches!(self, EmbedError::Io { .. })
    }
}

/// Contextual vectors for every occurrence of one lemma. Row `i` belongs to
/// `ids[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    lemma: String,
    model_id: String,
    ids: Vec<String>,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(
        lemma: impl Into<String>,
        model_id: impl Into<String>,
        ids: Vec<String>,
        dim: usize,
        data: Vec<f32>,
    ) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::Shape("dimension must be at least 1".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(EmbedError::Shape(format!(
                "{} values for {} rows of dimension {dim}",
                data.len(),
                ids.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(EmbedError::DuplicateId(id.clone()));
            }
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(EmbeddingMatrix {
            lemma: lemma.into(),
            model_id: model_id.into(),
            ids,
            dim,
            data,
        })
    }

    /// Convenience constructor from nested rows.
    pub fn from_rows(
        lemma: impl Into<String>,
        model_id: impl Into<String>,
        ids: Vec<String>,
        rows: &[Vec<f32>],
    ) -> Result<Self, EmbedError> {
        let dim = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(EmbedError::Shape("ragged rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(lemma, model_id, ids, dim, data)
    }

    pub fn lemma(&self) -> &str {
        &self.lemma
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, EmbedError> {
        let mut out = Vec::with_capacity(32 + self.data.len() * 4);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        push_str(&mut out, "model_id", &self.model_id)?;
        push_str(&mut out, "lemma", &self.lemma)?;
        for (i, id) in self.ids.iter().enumerate() {
            push_str(&mut out, &format!("id {i}"), id)?;
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EmbedError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take("magic", 4)?;
        if magic != MAGIC {
            return Err(EmbedError::BadMagic {
                found: magic.to_vec(),
            });
        }
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(EmbedError::VersionMismatch { found: version });
        }
        let n = r.u32("row count")? as usize;
        let dim = r.u32("dimension")? as usize;
        if dim == 0 {
            return Err(EmbedError::Shape("dimension must be at least 1".into()));
        }
        let model_id = r.string("model_id")?;
        let lemma = r.string("lemma")?;
        let mut ids = Vec::with_capacity(n.min(1 << 20));
        for i in 0..n {
            ids.push(r.string(&format!("id {i}"))?);
        }
        let payload = n
            .checked_mul(dim)
            .and_then(|c| c.checked_mul(4))
            .ok_or_else(|| EmbedError::Shape(format!("{n} x {dim} overflows")))?;
        let raw = r.take("matrix payload", payload)?;
        if r.pos != bytes.len() {
            return Err(EmbedError::TrailingBytes {
                extra: bytes.len() - r.pos,
            });
        }
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(lemma, model_id, ids, dim, data)
    }
}

fn push_str(out: &mut Vec<u8>, field: &str, s: &str) -> Result<(), EmbedError> {
    let len = u16::try_from(s.len()).map_err(|_| EmbedError::FieldTooLong {
        field: field.to_string(),
        len: s.len(),
    })?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, section: &'static str, len: usize) -> Result<&'a [u8], EmbedError> {
        let available = self.bytes.len() - self.pos;
        if available < len {
            return Err(EmbedError::Truncated {
                section,
                offset: self.pos,
                expected: len,
                actual: available,
            });
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u16(&mut self, section: &'static str) -> Result<u16, EmbedError> {
        let b = self.take(section, 2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, section: &'static str) -> Result<u32, EmbedError> {
        let b = self.take(section, 4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self, field: &str) -> Result<String, EmbedError> {
        let len = self.u16("string length")? as usize;
        let raw = self.take("string", len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| EmbedError::InvalidUtf8 {
            field: field.to_string(),
        })
    }
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix, EmbedError> {
    let bytes = fs::read(path).map_err(|source| EmbedError::Io {
        path: path.display().to_string(),
        source,
    })?;
    EmbeddingMatrix::from_bytes(&bytes)
}

/// Writes to a temporary file in the target directory and renames it into place.
pub fn write_embeddings(m: &EmbeddingMatrix, path: &Path) -> Result<(), EmbedError> {
    let bytes = m.to_bytes()?;
    jsonl::write_atomic(path, &bytes).map_err(|e| match e {
        jsonl::JsonlError::Io { path, source } => EmbedError::Io { path, source },
        other => EmbedError::Io {
            path: path.display().to_string(),
            source: io::Error::other(other.to_string()),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", self.describe())]
pub struct AlignmentError {
    pub missing: Vec<String>,
    pub extra: Vec<String>,
    /// `(record id, record lemma)` pairs whose lemma differs from the matrix lemma.
    pub lemma_mismatch: Vec<(String, String)>,
    pub matrix_lemma: String,
}

impl AlignmentError {
    fn describe(&self) -> String {
        let mut parts = Vec::new();
        if !self.missing.is_empty() {
            parts.push(format!("ids missing from matrix: {:?}", self.missing));
        }
        if !self.extra.is_empty() {
            parts.push(format!("ids without a sentence record: {:?}", self.extra));
        }
        if !self.lemma_mismatch.is_empty() {
            parts.push(format!(
                "records whose lemma differs from {:?}: {:?}",
                self.matrix_lemma, self.lemma_mismatch
            ));
        }
        parts.join("; ")
    }
}

/// Checks that the matrix rows and the sentence records describe the same
/// occurrences of the same lemma. All problems are reported together.
pub fn validate_alignment(
    m: &EmbeddingMatrix,
    records: &[SentenceRecord],
) -> Result<(), AlignmentError> {
    let matrix_ids: BTreeSet<&str> = m.ids().iter().map(String::as_str).collect();
    let record_ids: BTreeSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let missing: Vec<String> = record_ids
        .difference(&matrix_ids)
        .map(|s| s.to_string())
        .collect();
    let extra: Vec<String> = matrix_ids
        .difference(&record_ids)
        .map(|s| s.to_string())
        .collect();
    let lemma_mismatch: Vec<(String, String)> = records
        .iter()
        .filter(|r| r.lemma != m.lemma())
        .map(|r| (r.id.clone(), r.lemma.clone()))
        .collect();
    if missing.is_empty() && extra.is_empty() && lemma_mismatch.is_empty() {
        Ok(())
    } else {
        Err(AlignmentError {
            missing,
            extra,
            lemma_mismatch,
            matrix_lemma: m.lemma().to_string(),
        })
    }
}

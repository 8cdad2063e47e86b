//! Line-delimited JSON helpers shared by every file format in the workbench.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: invalid UTF-8 at byte offset {offset}")]
    Utf8 { path: String, offset: usize },
    #[error("{path}: malformed JSON on line {line}: {message}")]
    Json {
        path: String,
        line: usize,
        message: String,
    },
}

impl JsonlError {
    pub fn is_io(&self) -> bool {
        matches!(self, JsonlError::Io { .. })
    }
}

/// Reads a whole file and checks that it is valid UTF-8, reporting the byte
/// offset of the first invalid sequence otherwise.
pub fn read_utf8(path: &Path) -> Result<String, JsonlError> {
    let bytes = fs::read(path).map_err(|source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_utf8(bytes, &path.display().to_string())
}

pub(crate) fn decode_utf8(bytes: Vec<u8>, origin: &str) -> Result<String, JsonlError> {
    String::from_utf8(bytes).map_err(|e| JsonlError::Utf8 {
        path: origin.to_string(),
        offset: e.utf8_error().valid_up_to(),
    })
}

/// Parses JSONL text. Blank lines are skipped; the returned line numbers are
/// 1-based physical line numbers.
pub fn parse_str<T: DeserializeOwned>(
    text: &str,
    origin: &str,
) -> Result<Vec<(usize, T)>, JsonlError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| JsonlError::Json {
            path: origin.to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, value));
    }
    Ok(out)
}

pub fn read<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let text = read_utf8(path)?;
    Ok(parse_str(&text, &path.display().to_string())?
        .into_iter()
        .map(|(_, v)| v)
        .collect())
}

pub fn to_string<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable record"));
        out.push('\n');
    }
    out
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), JsonlError> {
    let io_err = |source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        w.write_all(contents).map_err(io_err)?;
        w.flush().map_err(io_err)?;
    }
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn write<T: Serialize>(path: &Path, items: &[T]) -> Result<(), JsonlError> {
    write_atomic(path, to_string(items).as_bytes())
}

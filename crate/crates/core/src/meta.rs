//! Provenance attached to every generated artifact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::jsonl::{self, JsonlError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    /// Input path to lowercase hex SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

impl ArtifactMeta {
    pub fn new(command: &str, seed: u64) -> Self {
        ArtifactMeta {
            tool: "senseloom".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            inputs: BTreeMap::new(),
            params: BTreeMap::new(),
        }
    }

    /// Records the digest of an input file.
    pub fn with_input(mut self, path: &Path) -> Result<Self, JsonlError> {
        let bytes = std::fs::read(path).map_err(|source| JsonlError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(self)
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    /// Writes `<artifact>.meta.json` next to the artifact.
    pub fn write_beside(&self, artifact: &Path) -> Result<PathBuf, JsonlError> {
        let path = sidecar_path(artifact);
        let mut json = serde_json::to_string_pretty(self).expect("metadata serializes");
        json.push('\n');
        jsonl::write_atomic(&path, json.as_bytes())?;
        Ok(path)
    }
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".meta.json");
    artifact.with_file_name(name)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

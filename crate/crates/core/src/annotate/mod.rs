//! Annotation projects: sense inventories, the append-only annotation log and
//! the views and exports derived from it.

mod store;
mod workspace;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LemmaSpec, SentenceRecord, Span};

pub use store::{AnnotationStore, AnnotationView, AssignOutcome, Planned, UnassignOutcome};
pub use workspace::{
    compute_projection, ClusteringMethod, ProjectHandle, RecomputeParams, Workspace,
};

/// Which HTTP-style error class an error belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    BadRequest,
    NotFound,
    Conflict,
    Internal,
}

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("unknown project {0:?}")]
    UnknownProject(String),
    #[error("unknown lemma {0:?}")]
    UnknownLemma(String),
    #[error("unknown sense {sense_id:?} for lemma {lemma:?}")]
    UnknownSense { lemma: String, sense_id: String },
    #[error("unknown sentence {0:?}")]
    UnknownSentence(String),
    #[error("invalid request: {0}")]
    Validation(String),
    #[error("{0} already exists")]
    AlreadyExists(String),
    #[error("no projection for lemma {0:?}; recompute required")]
    ProjectionMissing(String),
    #[error("corrupt log at line {line}: {message}")]
    CorruptLog { line: usize, message: String },
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

impl AnnotateError {
    pub fn class(&self) -> ErrorClass {
        use AnnotateError::*;
        match self {
            UnknownProject(_) | UnknownLemma(_) | UnknownSense { .. } | UnknownSentence(_) => {
                ErrorClass::NotFound
            }
            Validation(_) => ErrorClass::BadRequest,
            AlreadyExists(_) | ProjectionMissing(_) => ErrorClass::Conflict,
            CorruptLog { .. } | Io { .. } => ErrorClass::Internal,
        }
    }

    pub fn code(&self) -> &'static str {
        use AnnotateError::*;
        match self {
            UnknownProject(_) => "unknown_project",
            UnknownLemma(_) => "unknown_lemma",
            UnknownSense { .. } => "unknown_sense",
            UnknownSentence(_) => "unknown_sentence",
            Validation(_) => "validation",
            AlreadyExists(_) => "already_exists",
            ProjectionMissing(_) => "recompute_required",
            CorruptLog { .. } => "corrupt_log",
            Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        AnnotateError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseDef {
    pub sense_id: String,
    pub gloss: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gloss_en: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub lang: String,
    #[serde(default)]
    pub lemmas: Vec<LemmaSpec>,
    #[serde(default)]
    pub sense_inventory: BTreeMap<String, Vec<SenseDef>>,
}

/// Lemmas and ids end up in file names and URL paths.
fn check_name(kind: &str, s: &str) -> Result<(), AnnotateError> {
    if s.is_empty() || s == "." || s == ".." || s.contains(['/', '\\', '\0']) {
        return Err(AnnotateError::Validation(format!("invalid {kind} {s:?}")));
    }
    Ok(())
}

impl Project {
    pub fn validate(&self) -> Result<(), AnnotateError> {
        check_name("project id", &self.id)?;
        let mut seen = std::collections::HashSet::new();
        for spec in &self.lemmas {
            check_name("lemma", &spec.lemma)?;
            spec.validate()
                .map_err(|e| AnnotateError::Validation(e.to_string()))?;
            if !seen.insert(spec.lemma.as_str()) {
                return Err(AnnotateError::Validation(format!(
                    "duplicate lemma {:?}",
                    spec.lemma
                )));
            }
        }
        for (lemma, senses) in &self.sense_inventory {
            if !seen.contains(lemma.as_str()) {
                return Err(AnnotateError::Validation(format!(
                    "sense inventory for undeclared lemma {lemma:?}"
                )));
            }
            let mut ids = std::collections::HashSet::new();
            for s in senses {
                if s.sense_id.is_empty() || !ids.insert(s.sense_id.as_str()) {
                    return Err(AnnotateError::Validation(format!(
                        "empty or duplicate sense id {:?} for {lemma:?}",
                        s.sense_id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn has_lemma(&self, lemma: &str) -> bool {
        self.lemmas.iter().any(|l| l.lemma == lemma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Manual,
    ModelSuggested,
    Verified,
}

impl Provenance {
    /// Whether a human has confirmed the label.
    pub fn is_gold(self) -> bool {
        matches!(self, Provenance::Manual | Provenance::Verified)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseAnnotation {
    pub sentence_id: String,
    pub lemma: String,
    pub sense_id: String,
    pub annotator: String,
    pub provenance: Provenance,
    /// UTC seconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LogEvent {
    Assign(SenseAnnotation),
    Unassign {
        sentence_id: String,
        lemma: String,
        annotator: String,
        timestamp: u64,
    },
    AddSense {
        lemma: String,
        #[serde(flatten)]
        sense: SenseDef,
        timestamp: u64,
    },
}

/// One line of a project's annotation log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub revision: u64,
    #[serde(flatten)]
    pub event: LogEvent,
}

/// One exported gold annotation: the canonical sentence record plus its sense.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub id: String,
    pub lang: String,
    pub lemma: String,
    pub surface_form: String,
    pub text: String,
    pub target_span: Span,
    pub source: String,
    pub sense_id: String,
    pub annotator: String,
    pub provenance: Provenance,
}

impl GoldRecord {
    pub fn new(record: &SentenceRecord, ann: &SenseAnnotation) -> Self {
        GoldRecord {
            id: record.id.clone(),
            lang: record.lang.clone(),
            lemma: record.lemma.clone(),
            surface_form: record.surface_form.clone(),
            text: record.text.clone(),
            target_span: record.target_span,
            source: record.source.clone(),
            sense_id: ann.sense_id.clone(),
            annotator: ann.annotator.clone(),
            provenance: ann.provenance,
        }
    }
}

pub fn now_utc_seconds() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

//! On-disk project layout:
//!
//! ```text
//! <root>/<project>/project.json
//! <root>/<project>/sentences.jsonl          canonical sentence records
//! <root>/<project>/log.jsonl                append-only annotation log
//! <root>/<project>/embeddings/<lemma>.semb
//! <root>/<project>/projections/<lemma>.json
//! ```

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::store::{outcome_of_unassign, Planned};
use super::{
    now_utc_seconds, AnnotateError, AnnotationStore, AnnotationView, AssignOutcome, GoldRecord,
    LogRecord, Project, SenseAnnotation, SenseDef, UnassignOutcome,
};
use crate::corpus::{self, SentenceRecord};
use crate::embedstore;
use crate::jsonl;
use crate::numerics::{self, KMeansOptions, Linkage, ProjectionExport, ProjectionMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusteringMethod {
    #[default]
    Kmeans,
    Agglomerative,
}

impl FromStr for ClusteringMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kmeans" => Ok(ClusteringMethod::Kmeans),
            "agglomerative" => Ok(ClusteringMethod::Agglomerative),
            other => Err(format!("unknown clustering method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecomputeParams {
    /// Defaults to the lemma's sense count, or 2 when it has no senses yet.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub method: ProjectionMethod,
    #[serde(default)]
    pub clustering: ClusteringMethod,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    42
}

impl Default for RecomputeParams {
    fn default() -> Self {
        RecomputeParams {
            k: None,
            method: ProjectionMethod::Mds,
            clustering: ClusteringMethod::Kmeans,
            seed: default_seed(),
        }
    }
}

/// Computes cluster labels and a 2D layout for one lemma's embeddings.
pub fn compute_projection(
    m: &embedstore::EmbeddingMatrix,
    k: usize,
    params: &RecomputeParams,
) -> Result<ProjectionExport, numerics::NumericsError> {
    let k = k.clamp(1, m.n().max(1));
    let clusters = match params.clustering {
        ClusteringMethod::Kmeans => {
            numerics::kmeans_best_of(
                m,
                k,
                params.seed,
                numerics::DEFAULT_RESTARTS,
                KMeansOptions::default(),
            )?
            .labels
        }
        ClusteringMethod::Agglomerative => {
            numerics::agglomerative(&numerics::pairwise_cosine_distance(m)?, k, Linkage::Average)?
        }
    };
    let projection = match params.method {
        ProjectionMethod::Mds => numerics::classical_mds(&numerics::pairwise_cosine_distance(m)?)?,
        ProjectionMethod::Pca => numerics::pca2(m)?,
    };
    Ok(ProjectionExport {
        lemma: m.lemma().to_string(),
        method: projection.method,
        ids: m.ids().to_vec(),
        points: projection.points,
        clusters: clusters.labels,
    })
}

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn project_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    pub fn list_projects(&self) -> Result<Vec<String>, AnnotateError> {
        if !self.root.exists() {
            return Ok(Vec::new());
        }
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(|e| AnnotateError::io(&self.root, e))? {
            let entry = entry.map_err(|e| AnnotateError::io(&self.root, e))?;
            if entry.path().join("project.json").is_file() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn create_project(
        &self,
        project: Project,
        sentences: Vec<SentenceRecord>,
    ) -> Result<ProjectHandle, AnnotateError> {
        // Validates before touching the disk.
        AnnotationStore::new(project.clone(), sentences.clone())?;
        let dir = self.project_dir(&project.id);
        if dir.join("project.json").exists() {
            return Err(AnnotateError::AlreadyExists(format!(
                "project {:?}",
                project.id
            )));
        }
        fs::create_dir_all(&dir).map_err(|e| AnnotateError::io(&dir, e))?;
        let json = serde_json::to_vec_pretty(&project).expect("project serializes");
        let path = dir.join("project.json");
        jsonl::write_atomic(&path, &json).map_err(|e| AnnotateError::io(&path, e))?;
        let path = dir.join("sentences.jsonl");
        corpus::write_records(&path, &sentences).map_err(|e| AnnotateError::io(&path, e))?;
        ProjectHandle::open(&dir)
    }

    pub fn open(&self, id: &str) -> Result<ProjectHandle, AnnotateError> {
        if super::check_name("project id", id).is_err() {
            return Err(AnnotateError::UnknownProject(id.to_string()));
        }
        let dir = self.project_dir(id);
        if !dir.join("project.json").is_file() {
            return Err(AnnotateError::UnknownProject(id.to_string()));
        }
        ProjectHandle::open(&dir)
    }
}

/// A project opened from disk. Writes go to the log file before the
/// in-memory state changes.
#[derive(Debug)]
pub struct ProjectHandle {
    dir: PathBuf,
    store: AnnotationStore,
}

/// Parses log text, tolerating a torn final line. Returns the records and the
/// byte length of the well-formed prefix.
pub(crate) fn parse_log(text: &str) -> Result<(Vec<LogRecord>, usize), AnnotateError> {
    let mut records = Vec::new();
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let complete = line.ends_with('\n');
        if line.trim().is_empty() {
            offset += line.len();
            continue;
        }
        match serde_json::from_str::<LogRecord>(line.trim_end()) {
            Ok(rec) if complete => {
                records.push(rec);
                offset += line.len();
            }
            // A final line without its newline is an interrupted write.
            _ if !complete => break,
            Ok(_) => unreachable!(),
            Err(e) => {
                return Err(AnnotateError::CorruptLog {
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok((records, offset))
}

impl ProjectHandle {
    pub fn open(dir: &Path) -> Result<Self, AnnotateError> {
        let path = dir.join("project.json");
        let text = jsonl::read_utf8(&path).map_err(|e| AnnotateError::io(&path, e))?;
        let project: Project = serde_json::from_str(&text)
            .map_err(|e| AnnotateError::Validation(format!("{}: {e}", path.display())))?;

        let path = dir.join("sentences.jsonl");
        let sentences = if path.exists() {
            corpus::read_records(&path).map_err(|e| AnnotateError::Validation(e.to_string()))?
        } else {
            Vec::new()
        };

        let log_path = dir.join("log.jsonl");
        let records = if log_path.exists() {
            let text = jsonl::read_utf8(&log_path).map_err(|e| AnnotateError::io(&log_path, e))?;
            let (records, good) = parse_log(&text)?;
            if good < text.len() {
                let f = OpenOptions::new()
                    .write(true)
                    .open(&log_path)
                    .map_err(|e| AnnotateError::io(&log_path, e))?;
                f.set_len(good as u64)
                    .map_err(|e| AnnotateError::io(&log_path, e))?;
            }
            records
        } else {
            Vec::new()
        };
        let store = AnnotationStore::replay(project, sentences, records)?;
        Ok(ProjectHandle {
            dir: dir.to_path_buf(),
            store,
        })
    }

    pub fn store(&self) -> &AnnotationStore {
        &self.store
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn log_path(&self) -> PathBuf {
        self.dir.join("log.jsonl")
    }

    pub fn embedding_path(&self, lemma: &str) -> PathBuf {
        self.dir.join("embeddings").join(format!("{lemma}.semb"))
    }

    pub fn projection_path(&self, lemma: &str) -> PathBuf {
        self.dir.join("projections").join(format!("{lemma}.json"))
    }

    fn persist(&mut self, planned: &Planned) -> Result<(), AnnotateError> {
        if let Planned::Append(rec) = planned {
            let path = self.log_path();
            let mut line = serde_json::to_string(rec).expect("log record serializes");
            line.push('\n');
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| AnnotateError::io(&path, e))?;
            f.write_all(line.as_bytes())
                .map_err(|e| AnnotateError::io(&path, e))?;
            f.sync_data().map_err(|e| AnnotateError::io(&path, e))?;
            self.store.apply(rec.clone())?;
        }
        Ok(())
    }

    pub fn assign(&mut self, ann: SenseAnnotation) -> Result<AssignOutcome, AnnotateError> {
        let planned = self.store.plan_assign(ann)?;
        self.persist(&planned)?;
        Ok(match planned {
            Planned::Append(rec) => AssignOutcome {
                revision: rec.revision,
                created: true,
            },
            Planned::Unchanged(revision) => AssignOutcome {
                revision,
                created: false,
            },
            Planned::NothingToUndo => unreachable!("assign never plans an undo"),
        })
    }

    pub fn unassign(
        &mut self,
        sentence_id: &str,
        lemma: &str,
        annotator: &str,
    ) -> Result<UnassignOutcome, AnnotateError> {
        let planned = self
            .store
            .plan_unassign(sentence_id, lemma, annotator, now_utc_seconds())?;
        self.persist(&planned)?;
        Ok(outcome_of_unassign(&planned))
    }

    pub fn add_sense(&mut self, lemma: &str, sense: SenseDef) -> Result<u64, AnnotateError> {
        let planned = self.store.plan_add_sense(lemma, sense, now_utc_seconds())?;
        self.persist(&planned)?;
        Ok(self.store.revision())
    }

    pub fn projection(&self, lemma: &str) -> Result<Option<ProjectionExport>, AnnotateError> {
        let path = self.projection_path(lemma);
        if !path.exists() {
            return Ok(None);
        }
        let text = jsonl::read_utf8(&path).map_err(|e| AnnotateError::io(&path, e))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| AnnotateError::io(&path, e))
    }

    pub fn view(
        &self,
        lemma: &str,
        annotator: Option<&str>,
    ) -> Result<AnnotationView, AnnotateError> {
        let projection = self.projection(lemma)?;
        self.store.view(lemma, projection.as_ref(), annotator)
    }

    /// Re-clusters and re-projects a lemma from its embedding file and stores
    /// the result as the lemma's projection.
    pub fn recompute(
        &mut self,
        lemma: &str,
        params: &RecomputeParams,
    ) -> Result<ProjectionExport, AnnotateError> {
        if !self.store.project().has_lemma(lemma) {
            return Err(AnnotateError::UnknownLemma(lemma.to_string()));
        }
        let path = self.embedding_path(lemma);
        if !path.exists() {
            return Err(AnnotateError::Validation(format!(
                "no embeddings for {lemma:?} at {}",
                path.display()
            )));
        }
        let m = embedstore::read_embeddings(&path)
            .map_err(|e| AnnotateError::Validation(e.to_string()))?;
        let records: Vec<SentenceRecord> = self.store.sentences_for(lemma).cloned().collect();
        embedstore::validate_alignment(&m, &records)
            .map_err(|e| AnnotateError::Validation(e.to_string()))?;
        let senses = self.store.senses(lemma).len();
        let k = params.k.unwrap_or(if senses > 0 { senses } else { 2 });
        let export = compute_projection(&m, k, params)
            .map_err(|e| AnnotateError::Validation(e.to_string()))?;
        let out = self.projection_path(lemma);
        if let Some(parent) = out.parent() {
            fs::create_dir_all(parent).map_err(|e| AnnotateError::io(parent, e))?;
        }
        let json = serde_json::to_vec(&export).expect("projection serializes");
        jsonl::write_atomic(&out, &json).map_err(|e| AnnotateError::io(&out, e))?;
        Ok(export)
    }

    pub fn export_gold(&self, min_per_sense: usize, adjudicator: Option<&str>) -> Vec<GoldRecord> {
        self.store.export_gold(min_per_sense, adjudicator)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torn_tail_is_dropped() {
        let good = r#"{"revision":1,"op":"unassign","sentence_id":"a","lemma":"l","annotator":"x","timestamp":0}"#;
        let text = format!("{good}\n{{\"revision\":2,\"op\"");
        let (recs, len) = parse_log(&text).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(len, good.len() + 1);
        assert!(parse_log(&format!("garbage\n{good}\n")).is_err());
    }
}

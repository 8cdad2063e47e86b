use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{AnnotateError, GoldRecord, LogEvent, LogRecord, Project, SenseAnnotation, SenseDef};
use crate::corpus::{SentenceRecord, Span};
use crate::numerics::{ProjectionExport, ProjectionMethod};

type Key = (String, String, String);

#[derive(Debug, Clone, PartialEq, Eq)]
struct Current {
    annotation: SenseAnnotation,
    revision: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignOutcome {
    pub revision: u64,
    /// False when the payload matched the current annotation and nothing was appended.
    pub created: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum UnassignOutcome {
    Removed { revision: u64 },
    NothingToUndo,
}

/// Everything the frontend needs to draw one lemma. Arrays are index-aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationView {
    pub lemma: String,
    pub method: Option<ProjectionMethod>,
    pub ids: Vec<String>,
    pub texts: Vec<String>,
    pub target_spans: Vec<Span>,
    pub points: Vec<[f64; 2]>,
    pub clusters: Vec<usize>,
    pub senses: Vec<Option<String>>,
    pub sense_inventory: Vec<SenseDef>,
    pub counts: BTreeMap<String, usize>,
}

/// In-memory annotation state rebuilt from, and advanced by, log records.
#[derive(Debug, Clone)]
pub struct AnnotationStore {
    project: Project,
    /// Keyed by `(lemma, sentence id)`: one corpus sentence may hold several lemmas.
    sentences: BTreeMap<(String, String), SentenceRecord>,
    log: Vec<LogRecord>,
    current: BTreeMap<Key, Current>,
}

/// What appending a request would do, decided before anything is written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Planned {
    Append(LogRecord),
    Unchanged(u64),
    NothingToUndo,
}

impl AnnotationStore {
    pub fn new(project: Project, sentences: Vec<SentenceRecord>) -> Result<Self, AnnotateError> {
        project.validate()?;
        let mut map = BTreeMap::new();
        for s in sentences {
            if !project.has_lemma(&s.lemma) {
                return Err(AnnotateError::Validation(format!(
                    "sentence {:?} has undeclared lemma {:?}",
                    s.id, s.lemma
                )));
            }
            s.check().map_err(AnnotateError::Validation)?;
            let key = (s.lemma.clone(), s.id.clone());
            if map.insert(key.clone(), s).is_some() {
                return Err(AnnotateError::Validation(format!(
                    "duplicate sentence id {:?} for lemma {:?}",
                    key.1, key.0
                )));
            }
        }
        Ok(AnnotationStore {
            project,
            sentences: map,
            log: Vec::new(),
            current: BTreeMap::new(),
        })
    }

    /// Rebuilds the state by re-applying every record in order.
    pub fn replay(
        project: Project,
        sentences: Vec<SentenceRecord>,
        records: impl IntoIterator<Item = LogRecord>,
    ) -> Result<Self, AnnotateError> {
        let mut store = Self::new(project, sentences)?;
        for (i, rec) in records.into_iter().enumerate() {
            store.apply(rec).map_err(|e| match e {
                AnnotateError::CorruptLog { message, .. } => AnnotateError::CorruptLog {
                    line: i + 1,
                    message,
                },
                other => AnnotateError::CorruptLog {
                    line: i + 1,
                    message: other.to_string(),
                },
            })?;
        }
        Ok(store)
    }

    pub fn project(&self) -> &Project {
        &self.project
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn revision(&self) -> u64 {
        self.log.last().map_or(0, |r| r.revision)
    }

    pub fn sentence(&self, lemma: &str, id: &str) -> Option<&SentenceRecord> {
        self.sentences.get(&(lemma.to_string(), id.to_string()))
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    /// Sentences of one lemma in id order.
    pub fn sentences_for<'a>(
        &'a self,
        lemma: &'a str,
    ) -> impl Iterator<Item = &'a SentenceRecord> + 'a {
        self.sentences
            .range((lemma.to_string(), String::new())..)
            .take_while(move |((l, _), _)| l == lemma)
            .map(|(_, s)| s)
    }

    pub fn senses(&self, lemma: &str) -> &[SenseDef] {
        self.project
            .sense_inventory
            .get(lemma)
            .map_or(&[], Vec::as_slice)
    }

    pub fn current(
        &self,
        sentence_id: &str,
        lemma: &str,
        annotator: &str,
    ) -> Option<&SenseAnnotation> {
        self.current
            .get(&(
                sentence_id.to_string(),
                lemma.to_string(),
                annotator.to_string(),
            ))
            .map(|c| &c.annotation)
    }

    /// All current annotations with the revision that set them, in key order.
    pub fn current_annotations(&self) -> impl Iterator<Item = (&SenseAnnotation, u64)> {
        self.current.values().map(|c| (&c.annotation, c.revision))
    }

    fn require_lemma(&self, lemma: &str) -> Result<(), AnnotateError> {
        if self.project.has_lemma(lemma) {
            Ok(())
        } else {
            Err(AnnotateError::UnknownLemma(lemma.to_string()))
        }
    }

    fn validate_assign(&self, ann: &SenseAnnotation) -> Result<(), AnnotateError> {
        if ann.annotator.trim().is_empty() {
            return Err(AnnotateError::Validation(
                "annotator must not be empty".into(),
            ));
        }
        self.require_lemma(&ann.lemma)?;
        if self.sentence(&ann.lemma, &ann.sentence_id).is_none() {
            return Err(AnnotateError::UnknownSentence(ann.sentence_id.clone()));
        }
        if !self
            .senses(&ann.lemma)
            .iter()
            .any(|s| s.sense_id == ann.sense_id)
        {
            return Err(AnnotateError::UnknownSense {
                lemma: ann.lemma.clone(),
                sense_id: ann.sense_id.clone(),
            });
        }
        Ok(())
    }

    fn next(&self, event: LogEvent) -> Planned {
        Planned::Append(LogRecord {
            revision: self.revision() + 1,
            event,
        })
    }

    pub fn plan_assign(&self, ann: SenseAnnotation) -> Result<Planned, AnnotateError> {
        self.validate_assign(&ann)?;
        let key = (
            ann.sentence_id.clone(),
            ann.lemma.clone(),
            ann.annotator.clone(),
        );
        if let Some(cur) = self.current.get(&key) {
            if cur.annotation.sense_id == ann.sense_id
                && cur.annotation.provenance == ann.provenance
            {
                return Ok(Planned::Unchanged(cur.revision));
            }
        }
        Ok(self.next(LogEvent::Assign(ann)))
    }

    pub fn plan_unassign(
        &self,
        sentence_id: &str,
        lemma: &str,
        annotator: &str,
        timestamp: u64,
    ) -> Result<Planned, AnnotateError> {
        self.require_lemma(lemma)?;
        if self.sentence(lemma, sentence_id).is_none() {
            return Err(AnnotateError::UnknownSentence(sentence_id.to_string()));
        }
        if self.current(sentence_id, lemma, annotator).is_none() {
            return Ok(Planned::NothingToUndo);
        }
        Ok(self.next(LogEvent::Unassign {
            sentence_id: sentence_id.to_string(),
            lemma: lemma.to_string(),
            annotator: annotator.to_string(),
            timestamp,
        }))
    }

    pub fn plan_add_sense(
        &self,
        lemma: &str,
        sense: SenseDef,
        timestamp: u64,
    ) -> Result<Planned, AnnotateError> {
        self.require_lemma(lemma)?;
        if sense.sense_id.trim().is_empty() {
            return Err(AnnotateError::Validation(
                "sense_id must not be empty".into(),
            ));
        }
        if self
            .senses(lemma)
            .iter()
            .any(|s| s.sense_id == sense.sense_id)
        {
            return Err(AnnotateError::AlreadyExists(format!(
                "sense {:?} of {lemma:?}",
                sense.sense_id
            )));
        }
        Ok(self.next(LogEvent::AddSense {
            lemma: lemma.to_string(),
            sense,
            timestamp,
        }))
    }

    /// Validates and applies one record. Revisions must continue the log.
    pub fn apply(&mut self, rec: LogRecord) -> Result<(), AnnotateError> {
        let expected = self.revision() + 1;
        if rec.revision != expected {
            return Err(AnnotateError::CorruptLog {
                line: self.log.len() + 1,
                message: format!("revision {} where {expected} was expected", rec.revision),
            });
        }
        match &rec.event {
            LogEvent::Assign(ann) => {
                self.validate_assign(ann)?;
                self.current.insert(
                    (
                        ann.sentence_id.clone(),
                        ann.lemma.clone(),
                        ann.annotator.clone(),
                    ),
                    Current {
                        annotation: ann.clone(),
                        revision: rec.revision,
                    },
                );
            }
            LogEvent::Unassign {
                sentence_id,
                lemma,
                annotator,
                ..
            } => {
                let key = (sentence_id.clone(), lemma.clone(), annotator.clone());
                if self.current.remove(&key).is_none() {
                    return Err(AnnotateError::Validation(format!(
                        "unassign of {key:?} without a current annotation"
                    )));
                }
            }
            LogEvent::AddSense {
                lemma,
                sense,
                timestamp,
            } => {
                if let Planned::Append(_) = self.plan_add_sense(lemma, sense.clone(), *timestamp)? {
                    self.project
                        .sense_inventory
                        .entry(lemma.clone())
                        .or_default()
                        .push(sense.clone());
                }
            }
        }
        self.log.push(rec);
        Ok(())
    }

    fn commit(&mut self, planned: &Planned) -> Result<(), AnnotateError> {
        if let Planned::Append(rec) = planned {
            self.apply(rec.clone())?;
        }
        Ok(())
    }

    pub fn assign(&mut self, ann: SenseAnnotation) -> Result<AssignOutcome, AnnotateError> {
        let planned = self.plan_assign(ann)?;
        self.commit(&planned)?;
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
        timestamp: u64,
    ) -> Result<UnassignOutcome, AnnotateError> {
        let planned = self.plan_unassign(sentence_id, lemma, annotator, timestamp)?;
        self.commit(&planned)?;
        Ok(outcome_of_unassign(&planned))
    }

    pub fn add_sense(
        &mut self,
        lemma: &str,
        sense: SenseDef,
        timestamp: u64,
    ) -> Result<u64, AnnotateError> {
        let planned = self.plan_add_sense(lemma, sense, timestamp)?;
        self.commit(&planned)?;
        Ok(self.revision())
    }

    /// Latest current label per sentence of `lemma`: from `annotator` only, or
    /// the most recent across annotators when `None`.
    fn labels_for(
        &self,
        lemma: &str,
        annotator: Option<&str>,
        gold_only: bool,
    ) -> HashMap<&str, &Current> {
        let mut out: HashMap<&str, &Current> = HashMap::new();
        for c in self.current.values() {
            let a = &c.annotation;
            if a.lemma != lemma
                || annotator.is_some_and(|x| x != a.annotator)
                || (gold_only && !a.provenance.is_gold())
            {
                continue;
            }
            let slot = out.entry(a.sentence_id.as_str()).or_insert(c);
            if c.revision > slot.revision {
                *slot = c;
            }
        }
        out
    }

    pub fn view(
        &self,
        lemma: &str,
        projection: Option<&ProjectionExport>,
        annotator: Option<&str>,
    ) -> Result<AnnotationView, AnnotateError> {
        self.require_lemma(lemma)?;
        let inventory = self.senses(lemma).to_vec();
        let mut counts: BTreeMap<String, usize> =
            inventory.iter().map(|s| (s.sense_id.clone(), 0)).collect();
        let empty = AnnotationView {
            lemma: lemma.to_string(),
            method: None,
            ids: vec![],
            texts: vec![],
            target_spans: vec![],
            points: vec![],
            clusters: vec![],
            senses: vec![],
            sense_inventory: inventory.clone(),
            counts: counts.clone(),
        };
        if self.sentences_for(lemma).next().is_none() {
            return Ok(empty);
        }
        let projection = projection
            .filter(|p| p.lemma == lemma)
            .ok_or_else(|| AnnotateError::ProjectionMissing(lemma.to_string()))?;
        let labels = self.labels_for(lemma, annotator, false);
        let mut view = AnnotationView {
            method: Some(projection.method),
            ids: projection.ids.clone(),
            points: projection.points.clone(),
            clusters: projection.clusters.clone(),
            ..empty
        };
        for id in &projection.ids {
            let rec = self.sentence(lemma, id);
            view.texts
                .push(rec.map(|r| r.text.clone()).unwrap_or_default());
            view.target_spans
                .push(rec.map_or(Span::new(0, 0), |r| r.target_span));
            let sense = labels
                .get(id.as_str())
                .map(|c| c.annotation.sense_id.clone());
            if let Some(s) = &sense {
                *counts.entry(s.clone()).or_insert(0) += 1;
            }
            view.senses.push(sense);
        }
        view.counts = counts;
        Ok(view)
    }

    /// Human-confirmed current annotations of every lemma that has at least two
    /// senses with `min_per_sense` sentences, ordered by `(lemma, sentence id)`.
    pub fn export_gold(&self, min_per_sense: usize, adjudicator: Option<&str>) -> Vec<GoldRecord> {
        let mut out = Vec::new();
        for spec in &self.project.lemmas {
            let labels = self.labels_for(&spec.lemma, adjudicator, true);
            let mut per_sense: HashMap<&str, usize> = HashMap::new();
            for c in labels.values() {
                *per_sense.entry(c.annotation.sense_id.as_str()).or_insert(0) += 1;
            }
            if per_sense.values().filter(|&&c| c >= min_per_sense).count() < 2 {
                continue;
            }
            let mut rows: Vec<GoldRecord> = labels
                .iter()
                .filter_map(|(id, c)| {
                    self.sentence(&spec.lemma, id)
                        .map(|r| GoldRecord::new(r, &c.annotation))
                })
                .collect();
            rows.sort_by(|a, b| a.id.cmp(&b.id));
            out.extend(rows);
        }
        out.sort_by(|a, b| (&a.lemma, &a.id).cmp(&(&b.lemma, &b.id)));
        out
    }

    /// Current annotations keyed by `(sentence, lemma, annotator)`, for comparisons.
    pub fn snapshot(&self) -> BTreeMap<(String, String, String), (String, u64)> {
        self.current
            .iter()
            .map(|(k, c)| (k.clone(), (c.annotation.sense_id.clone(), c.revision)))
            .collect()
    }
}

pub(crate) fn outcome_of_unassign(planned: &Planned) -> UnassignOutcome {
    match planned {
        Planned::Append(rec) => UnassignOutcome::Removed {
            revision: rec.revision,
        },
        _ => UnassignOutcome::NothingToUndo,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::Provenance;
    use crate::corpus::LemmaSpec;

    fn sentence(id: &str, lemma: &str) -> SentenceRecord {
        let text = format!("bir {lemma} burada var");
        SentenceRecord {
            id: id.into(),
            lang: "az".into(),
            lemma: lemma.into(),
            surface_form: lemma.into(),
            text,
            target_span: Span::new(4, 4 + lemma.chars().count()),
            source: "t".into(),
        }
    }

    fn store(per_lemma: usize) -> AnnotationStore {
        let mut inv = BTreeMap::new();
        inv.insert(
            "qeyd".to_string(),
            ["A", "B"]
                .iter()
                .map(|s| SenseDef {
                    sense_id: s.to_string(),
                    gloss: s.to_string(),
                    gloss_en: None,
                })
                .collect(),
        );
        let project = Project {
            id: "az".into(),
            lang: "az".into(),
            lemmas: vec![
                LemmaSpec::new("qeyd", ["qeyd"], "az").unwrap(),
                LemmaSpec::new("boş", ["boş"], "az").unwrap(),
            ],
            sense_inventory: inv,
        };
        let sentences = (0..per_lemma)
            .map(|i| sentence(&format!("s{i:03}"), "qeyd"))
            .collect();
        AnnotationStore::new(project, sentences).unwrap()
    }

    fn ann(s: &str, sense: &str, who: &str, p: Provenance) -> SenseAnnotation {
        SenseAnnotation {
            sentence_id: s.into(),
            lemma: "qeyd".into(),
            sense_id: sense.into(),
            annotator: who.into(),
            provenance: p,
            timestamp: 0,
        }
    }

    #[test]
    fn write_then_read() {
        let mut st = store(4);
        st.assign(ann("s001", "A", "ann1", Provenance::Manual))
            .unwrap();
        assert_eq!(st.current("s001", "qeyd", "ann1").unwrap().sense_id, "A");
    }

    #[test]
    fn later_assignment_supersedes() {
        let mut st = store(4);
        st.assign(ann("s001", "A", "ann1", Provenance::Manual))
            .unwrap();
        st.assign(ann("s001", "B", "ann1", Provenance::Manual))
            .unwrap();
        assert_eq!(st.current("s001", "qeyd", "ann1").unwrap().sense_id, "B");
        assert_eq!(st.log().len(), 2);
    }

    #[test]
    fn unknown_sense_leaves_log_alone() {
        let mut st = store(4);
        let err = st
            .assign(ann("s001", "nope", "ann1", Provenance::Manual))
            .unwrap_err();
        assert!(matches!(err, AnnotateError::UnknownSense { .. }));
        assert!(st.log().is_empty());
        let err = st
            .assign(ann("zzz", "A", "ann1", Provenance::Manual))
            .unwrap_err();
        assert!(matches!(err, AnnotateError::UnknownSentence(_)));
    }

    #[test]
    fn identical_payload_is_idempotent() {
        let mut st = store(4);
        let a = st
            .assign(ann("s001", "A", "ann1", Provenance::Manual))
            .unwrap();
        let b = st
            .assign(ann("s001", "A", "ann1", Provenance::Manual))
            .unwrap();
        assert_eq!(a.revision, b.revision);
        assert!(!b.created);
        assert_eq!(st.log().len(), 1);
    }

    #[test]
    fn undo_cycle() {
        let mut st = store(4);
        assert_eq!(
            st.unassign("s002", "qeyd", "ann1", 0).unwrap(),
            UnassignOutcome::NothingToUndo
        );
        st.assign(ann("s001", "A", "ann1", Provenance::Manual))
            .unwrap();
        assert_eq!(
            st.unassign("s001", "qeyd", "ann1", 0).unwrap(),
            UnassignOutcome::Removed { revision: 2 }
        );
        assert!(st.current("s001", "qeyd", "ann1").is_none());
        st.assign(ann("s001", "A", "ann1", Provenance::Manual))
            .unwrap();
        assert!(st.current("s001", "qeyd", "ann1").is_some());
        assert_eq!(st.log().len(), 3);
    }

    fn projection(st: &AnnotationStore) -> ProjectionExport {
        let ids: Vec<String> = st.sentences_for("qeyd").map(|s| s.id.clone()).collect();
        ProjectionExport {
            lemma: "qeyd".into(),
            method: ProjectionMethod::Mds,
            points: ids
                .iter()
                .enumerate()
                .map(|(i, _)| [i as f64, 0.0])
                .collect(),
            clusters: vec![0; ids.len()],
            ids,
        }
    }

    #[test]
    fn view_alignment_and_counts() {
        let mut st = store(4);
        st.assign(ann("s000", "A", "ann1", Provenance::Manual))
            .unwrap();
        st.assign(ann("s002", "B", "ann1", Provenance::Manual))
            .unwrap();
        let p = projection(&st);
        let v = st.view("qeyd", Some(&p), None).unwrap();
        assert_eq!(v.points.len(), 4);
        assert_eq!(v.senses.iter().filter(|s| s.is_some()).count(), 2);
        assert_eq!(v.counts["A"], 1);
        assert_eq!(v.counts["B"], 1);
        assert!(matches!(
            st.view("qeyd", None, None),
            Err(AnnotateError::ProjectionMissing(_))
        ));
        let empty = st.view("boş", None, None).unwrap();
        assert!(empty.ids.is_empty() && empty.points.is_empty());
    }

    #[test]
    fn export_filters() {
        let mut st = store(80);
        for i in 0..40 {
            st.assign(ann(&format!("s{i:03}"), "A", "adj", Provenance::Verified))
                .unwrap();
        }
        for i in 40..75 {
            st.assign(ann(&format!("s{i:03}"), "B", "adj", Provenance::Manual))
                .unwrap();
        }
        let gold = st.export_gold(30, Some("adj"));
        assert_eq!(gold.len(), 75);
        assert!(gold.windows(2).all(|w| w[0].id < w[1].id));

        let mut thin = store(80);
        for i in 0..40 {
            thin.assign(ann(&format!("s{i:03}"), "A", "adj", Provenance::Verified))
                .unwrap();
        }
        for i in 40..43 {
            thin.assign(ann(&format!("s{i:03}"), "B", "adj", Provenance::Verified))
                .unwrap();
        }
        assert!(thin.export_gold(30, Some("adj")).is_empty());

        let mut suggested = store(80);
        for i in 0..80 {
            let sense = if i % 2 == 0 { "A" } else { "B" };
            suggested
                .assign(ann(
                    &format!("s{i:03}"),
                    sense,
                    "adj",
                    Provenance::ModelSuggested,
                ))
                .unwrap();
        }
        assert!(suggested.export_gold(30, Some("adj")).is_empty());
    }

    #[test]
    fn added_senses_replay() {
        let mut st = store(2);
        st.add_sense(
            "qeyd",
            SenseDef {
                sense_id: "C".into(),
                gloss: "c".into(),
                gloss_en: None,
            },
            0,
        )
        .unwrap();
        st.assign(ann("s000", "C", "a", Provenance::Manual))
            .unwrap();
        let fresh = store(2);
        let replayed = AnnotationStore::replay(
            fresh.project().clone(),
            fresh.sentences.values().cloned().collect(),
            st.log().to_vec(),
        )
        .unwrap();
        assert_eq!(replayed.snapshot(), st.snapshot());
        assert_eq!(replayed.senses("qeyd").len(), 3);
    }
}

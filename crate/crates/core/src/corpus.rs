//! Raw corpus loading, target-word occurrence search and candidate sampling.
//!
//! Occurrences are found by exact comparison against an explicit list of
//! inflected forms. A form only matches when both of its ends fall on a
//! Unicode word boundary (UAX #29), so `bat` never matches inside `Combat`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

use crate::jsonl::{self, JsonlError};
use crate::seed;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Input(#[from] JsonlError),
    #[error("invalid lemma spec for {lemma:?}: {reason}")]
    InvalidLemmaSpec { lemma: String, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Half-open `[start, end)` range measured in Unicode scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Byte range of this span within `text`, if it lies inside the text.
    pub fn byte_range(&self, text: &str) -> Option<std::ops::Range<usize>> {
        if self.start > self.end {
            return None;
        }
        let mut start = None;
        let mut count = 0;
        for (byte, _) in text.char_indices() {
            if count == self.start {
                start = Some(byte);
            }
            if count == self.end {
                return start.map(|s| s..byte);
            }
            count += 1;
        }
        if count == self.start {
            start = Some(text.len());
        }
        if count == self.end {
            return start.map(|s| s..text.len());
        }
        None
    }
}

impl From<[usize; 2]> for Span {
    fn from(v: [usize; 2]) -> Self {
        Span::new(v[0], v[1])
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// A corpus line before any target word has been located in it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSentence {
    pub id: String,
    pub text: String,
    pub source: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<RawSentence>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    PlainLines,
}

/// One located occurrence of a target word. This is the canonical sentence
/// record shared by annotation, embedding and WiC construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub lang: String,
    pub lemma: String,
    pub surface_form: String,
    pub text: String,
    pub target_span: Span,
    pub source: String,
}

impl SentenceRecord {
    /// The text covered by `target_span`, or `None` if the span is invalid.
    pub fn target_text(&self) -> Option<&str> {
        self.target_span
            .byte_range(&self.text)
            .map(|r| &self.text[r])
    }

    /// Checks the span/surface-form invariants of the record.
    pub fn check(&self) -> Result<(), String> {
        if self.target_span.is_empty() {
            return Err(format!("{}: empty target span", self.id));
        }
        match self.target_text() {
            None => Err(format!(
                "{}: span {} outside text of {} characters",
                self.id,
                self.target_span,
                self.text.chars().count()
            )),
            Some(t) if t != self.surface_form => Err(format!(
                "{}: span text {t:?} differs from surface form {:?}",
                self.id, self.surface_form
            )),
            Some(_) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaSpec {
    pub lemma: String,
    pub forms: Vec<String>,
    pub lang: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gloss_hints: Vec<String>,
}

impl LemmaSpec {
    /// Builds a spec, adding the lemma to its own form list when missing.
    pub fn new(
        lemma: impl Into<String>,
        forms: impl IntoIterator<Item = impl Into<String>>,
        lang: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let lemma = lemma.into();
        let mut all: Vec<String> = forms.into_iter().map(Into::into).collect();
        if !all.contains(&lemma) {
            all.insert(0, lemma.clone());
        }
        let spec = LemmaSpec {
            lemma,
            forms: all,
            lang: lang.into(),
            gloss_hints: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |reason: &str| CorpusError::InvalidLemmaSpec {
            lemma: self.lemma.clone(),
            reason: reason.to_string(),
        };
        if self.lemma.is_empty() {
            return Err(bad("empty lemma"));
        }
        if self.forms.iter().any(|f| f.is_empty()) {
            return Err(bad("empty form"));
        }
        if !self.forms.contains(&self.lemma) {
            return Err(bad("lemma missing from its form list"));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.forms.iter().find(|f| !seen.insert(f.as_str())) {
            return Err(bad(&format!("duplicate form {dup:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchConfig {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub case_fold: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            min_tokens: 4,
            max_tokens: 128,
            case_fold: false,
        }
    }
}

#[derive(Deserialize)]
struct JsonlInput {
    id: Option<String>,
    text: String,
    source: Option<String>,
}

/// Loads a raw corpus. `source` defaults to the file stem and is used to build
/// `<source>:<line-number>` ids for lines without an explicit id.
pub fn load_sentences(
    path: &Path,
    format: InputFormat,
    source: Option<&str>,
) -> Result<Corpus, CorpusError> {
    let text = jsonl::read_utf8(path)?;
    let default_source = source.map(str::to_string).unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".to_string())
    });
    parse_sentences(&text, format, &default_source, &path.display().to_string())
}

pub fn parse_sentences(
    text: &str,
    format: InputFormat,
    source: &str,
    origin: &str,
) -> Result<Corpus, CorpusError> {
    let rows: Vec<(usize, Option<String>, String, Option<String>)> = match format {
        InputFormat::PlainLines => text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, None, l.to_string(), None))
            .collect(),
        InputFormat::Jsonl => jsonl::parse_str::<JsonlInput>(text, origin)?
            .into_iter()
            .map(|(line, r)| (line, r.id, r.text, r.source))
            .collect(),
    };

    let mut seen_text = HashSet::new();
    let mut sentences = Vec::new();
    for (line, id, body, src) in rows {
        if body.trim().is_empty() || !seen_text.insert(body.clone()) {
            continue;
        }
        let src = src.unwrap_or_else(|| source.to_string());
        let id = id.unwrap_or_else(|| format!("{src}:{line}"));
        sentences.push(RawSentence {
            id,
            text: body,
            source: src,
        });
    }
    Ok(Corpus { sentences })
}

/// Number of word tokens (UAX #29 words) in `text`.
pub fn token_count(text: &str) -> usize {
    text.unicode_words().count()
}

fn normalize(s: &str, fold: bool) -> String {
    if fold {
        s.to_lowercase()
    } else {
        s.to_string()
    }
}

/// Byte ranges of every whole-token match of any form, leftmost-longest and
/// non-overlapping.
fn match_ranges(
    text: &str,
    forms: &HashSet<String>,
    max_segments: usize,
    fold: bool,
) -> Vec<(usize, usize)> {
    let mut bounds: Vec<usize> = text.split_word_bound_indices().map(|(i, _)| i).collect();
    bounds.push(text.len());

    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < bounds.len() {
        let mut best = None;
        for j in (i + 1)..bounds.len().min(i + 1 + max_segments) {
            let candidate = &text[bounds[i]..bounds[j]];
            if forms.contains(&normalize(candidate, fold)) {
                best = Some(j);
            }
        }
        match best {
            Some(j) => {
                out.push((bounds[i], bounds[j]));
                i = j;
            }
            None => i += 1,
        }
    }
    out
}

/// Locates every whole-token occurrence of the spec's forms, preserving corpus
/// order. A sentence with several occurrences yields one record per occurrence
/// with ids `<sentence-id>#<k>` (k from 0); a single occurrence keeps the
/// sentence id.
pub fn find_occurrences(
    corpus: &Corpus,
    spec: &LemmaSpec,
    config: &MatchConfig,
) -> Vec<SentenceRecord> {
    let forms: HashSet<String> = spec
        .forms
        .iter()
        .map(|f| normalize(f, config.case_fold))
        .collect();
    // Context can split a form differently than it splits on its own, so allow
    // a little slack over the isolated segment count.
    let max_segments = spec
        .forms
        .iter()
        .map(|f| f.split_word_bounds().count())
        .max()
        .unwrap_or(1)
        + 2;

    let mut records = Vec::new();
    for sentence in &corpus.sentences {
        let tokens = token_count(&sentence.text);
        if tokens < config.min_tokens || tokens > config.max_tokens {
            continue;
        }
        let ranges = match_ranges(&sentence.text, &forms, max_segments, config.case_fold);
        let many = ranges.len() > 1;
        for (k, (bs, be)) in ranges.into_iter().enumerate() {
            let start = sentence.text[..bs].chars().count();
            let len = sentence.text[bs..be].chars().count();
            let id = if many {
                format!("{}#{k}", sentence.id)
            } else {
                sentence.id.clone()
            };
            records.push(SentenceRecord {
                id,
                lang: spec.lang.clone(),
                lemma: spec.lemma.clone(),
                surface_form: sentence.text[bs..be].to_string(),
                text: sentence.text.clone(),
                target_span: Span::new(start, start + len),
                source: sentence.source.clone(),
            });
        }
    }
    records
}

/// Uniform sample without replacement of `min(n, len)` records, in sampled order.
pub fn sample_candidates(
    records: &[SentenceRecord],
    n: usize,
    seed: u64,
) -> Result<Vec<SentenceRecord>, CorpusError> {
    if n == 0 {
        return Err(CorpusError::InvalidParameter(
            "sample size must be at least 1".into(),
        ));
    }
    let mut rng = seed::rng(seed);
    let amount = n.min(records.len());
    Ok(rand::seq::index::sample(&mut rng, records.len(), amount)
        .into_iter()
        .map(|i| records[i].clone())
        .collect())
}

pub fn read_records(path: &Path) -> Result<Vec<SentenceRecord>, JsonlError> {
    jsonl::read(path)
}

pub fn write_records(path: &Path, records: &[SentenceRecord]) -> Result<(), JsonlError> {
    jsonl::write(path, records)
}

//! Compiles gold sense annotations into Word-in-Context sentence-pair
//! datasets with disjoint train, dev and test splits.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::GoldRecord;
use crate::corpus::Span;
use crate::jsonl::{self, JsonlError};
use crate::seed;

pub const DEFAULT_MAX_PER_SENTENCE: usize = 16;

#[derive(Debug, Error)]
pub enum WicError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Output(#[from] JsonlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSplit {
    pub train_words: BTreeSet<String>,
    pub dev_words: BTreeSet<String>,
    pub test_words: BTreeSet<String>,
    /// Train words whose sentences are partly moved into dev and test.
    pub shared_words: BTreeSet<String>,
}

impl WordSplit {
    pub fn split_of(&self, lemma: &str) -> Option<Split> {
        if self.train_words.contains(lemma) {
            Some(Split::Train)
        } else if self.dev_words.contains(lemma) {
            Some(Split::Dev)
        } else if self.test_words.contains(lemma) {
            Some(Split::Test)
        } else {
            None
        }
    }
}

/// Largest-remainder apportionment of `total` seats by integer `weights`.
/// Equal remainders favour the earlier weight.
pub fn largest_remainder(total: u64, weights: &[u64]) -> Vec<u64> {
    let sum: u64 = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut seats: Vec<u64> = weights.iter().map(|w| total * w / sum).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(total * weights[i] % sum), i));
    let left = total - seats.iter().sum::<u64>();
    for &i in order.iter().take(left as usize) {
        seats[i] += 1;
    }
    seats
}

/// `round(x * num / den)` with halves rounded up.
fn round_fraction(x: u64, num: u64, den: u64) -> u64 {
    (2 * x * num + den) / (2 * den)
}

/// Allocates words 70/15/15 and picks 30% of the train words to share their
/// sentences with dev and test. Dev and test always receive at least one word.
pub fn split_words<S: AsRef<str>>(lemmas: &[S], seed: u64) -> Result<WordSplit, WicError> {
    let mut words: Vec<String> = lemmas.iter().map(|l| l.as_ref().to_string()).collect();
    words.sort();
    words.dedup();
    if words.len() < 3 {
        return Err(WicError::InvalidParameter(format!(
            "need at least 3 distinct lemmas, got {}",
            words.len()
        )));
    }
    words.shuffle(&mut seed::rng(seed::derive(seed, "split-words")));

    let n = words.len() as u64;
    let mut counts = largest_remainder(n, &[70, 15, 15]);
    for i in 1..3 {
        if counts[i] == 0 {
            counts[i] = 1;
            counts[0] -= 1;
        }
    }
    let (train, rest) = words.split_at(counts[0] as usize);
    let (dev, test) = rest.split_at(counts[1] as usize);

    let mut shared_pool = train.to_vec();
    shared_pool.sort();
    shared_pool.shuffle(&mut seed::rng(seed::derive(seed, "shared-words")));
    let n_shared = round_fraction(train.len() as u64, 3, 10) as usize;

    Ok(WordSplit {
        train_words: train.iter().cloned().collect(),
        dev_words: dev.iter().cloned().collect(),
        test_words: test.iter().cloned().collect(),
        shared_words: shared_pool.into_iter().take(n_shared).collect(),
    })
}

/// Lemmas of `annotations` with at least two distinct senses, plus the ones dropped.
pub fn eligible_lemmas(annotations: &[GoldRecord]) -> (Vec<String>, Vec<String>) {
    let mut senses: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for a in annotations {
        senses.entry(&a.lemma).or_default().insert(&a.sense_id);
    }
    let (keep, drop): (Vec<_>, Vec<_>) = senses.into_iter().partition(|(_, s)| s.len() >= 2);
    (
        keep.into_iter().map(|(l, _)| l.to_string()).collect(),
        drop.into_iter().map(|(l, _)| l.to_string()).collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SentenceSplit {
    /// `(lemma, sentence id)` to split.
    pub assignments: BTreeMap<(String, String), Split>,
    /// Lemmas left out because they have a single annotated sense.
    pub excluded: Vec<String>,
}

impl SentenceSplit {
    pub fn get(&self, lemma: &str, id: &str) -> Option<Split> {
        self.assignments
            .get(&(lemma.to_string(), id.to_string()))
            .copied()
    }
}

/// Assigns every annotated sentence to one split. Sentences of a shared word
/// are moved 25% out of train, apportioned per sense, and divided between dev
/// and test. A sense with an odd number of moved sentences gives its extra one
/// alternately to dev and test, in sense order, starting with dev.
pub fn redistribute_sentences(
    annotations: &[GoldRecord],
    ws: &WordSplit,
    seed: u64,
) -> Result<SentenceSplit, WicError> {
    let (eligible, excluded) = eligible_lemmas(annotations);
    let mut by_lemma: BTreeMap<&str, BTreeMap<&str, Vec<&str>>> = BTreeMap::new();
    for a in annotations {
        by_lemma
            .entry(&a.lemma)
            .or_default()
            .entry(&a.sense_id)
            .or_default()
            .push(&a.id);
    }

    let mut out = SentenceSplit {
        excluded,
        ..Default::default()
    };
    let mut seen = BTreeSet::new();
    for lemma in &eligible {
        let split = ws.split_of(lemma).ok_or_else(|| {
            WicError::InvalidParameter(format!("lemma {lemma:?} is not in the word split"))
        })?;
        let senses = &by_lemma[lemma.as_str()];
        for ids in senses.values() {
            for id in ids {
                if !seen.insert((lemma.as_str(), *id)) {
                    return Err(WicError::InvalidParameter(format!(
                        "sentence {id:?} of {lemma:?} is annotated more than once"
                    )));
                }
                out.assignments
                    .insert((lemma.clone(), id.to_string()), split);
            }
        }
        if !ws.shared_words.contains(lemma) {
            continue;
        }

        let sizes: Vec<u64> = senses.values().map(|ids| ids.len() as u64).collect();
        let n: u64 = sizes.iter().sum();
        let moved = largest_remainder(round_fraction(n, 1, 4), &sizes);
        let mut rng = seed::rng(seed::derive(seed, &format!("redistribute/{lemma}")));
        let mut odd_to_dev = true;
        for (ids, &m) in senses.values().zip(&moved) {
            let mut ids: Vec<&str> = ids.clone();
            ids.sort_unstable();
            ids.shuffle(&mut rng);
            let mut to_dev = m / 2;
            if m % 2 == 1 {
                if odd_to_dev {
                    to_dev += 1;
                }
                odd_to_dev = !odd_to_dev;
            }
            for (k, id) in ids.iter().take(m as usize).enumerate() {
                let target = if (k as u64) < to_dev {
                    Split::Dev
                } else {
                    Split::Test
                };
                out.assignments
                    .insert((lemma.clone(), id.to_string()), target);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WicPair {
    pub pair_id: String,
    pub lemma: String,
    pub sentence_a_id: String,
    pub sentence_b_id: String,
    pub span_a: Span,
    pub span_b: Span,
    pub label: u8,
    pub split: Split,
}

/// Greedy pairing state for one `(lemma, split)` group.
struct Group<'a> {
    members: Vec<&'a GoldRecord>,
}

impl Group<'_> {
    /// Round-robin over sentences; each sentence alternates between asking for
    /// a same-sense and a different-sense partner, falling back to the other
    /// kind when one is exhausted. Returns index pairs `(i, j)` with `i < j`.
    fn pick(&self, rng: &mut seed::Rng, cap: usize) -> Vec<(usize, usize)> {
        let n = self.members.len();
        let mut queues: Vec<[Vec<usize>; 2]> = (0..n)
            .map(|i| {
                let mut pos = Vec::new();
                let mut neg = Vec::new();
                for j in 0..n {
                    if j != i {
                        if self.members[i].sense_id == self.members[j].sense_id {
                            pos.push(j);
                        } else {
                            neg.push(j);
                        }
                    }
                }
                pos.shuffle(rng);
                neg.shuffle(rng);
                // Popped from the back.
                [pos, neg]
            })
            .collect();
        let mut want: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let mut degree = vec![0usize; n];
        let mut taken: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let mut progress = true;
        while progress {
            progress = false;
            for &i in &order {
                if degree[i] >= cap {
                    continue;
                }
                for attempt in 0..2 {
                    let kind = (want[i] + attempt) % 2;
                    let mut found = None;
                    while let Some(j) = queues[i][kind].pop() {
                        let key = (i.min(j), i.max(j));
                        if degree[j] < cap && !taken.contains(&key) {
                            found = Some(key);
                            break;
                        }
                    }
                    if let Some(key) = found {
                        taken.insert(key);
                        degree[key.0] += 1;
                        degree[key.1] += 1;
                        want[i] = 1 - kind;
                        progress = true;
                        break;
                    }
                }
            }
        }
        taken.into_iter().collect()
    }
}

/// Pairs sentences of the same lemma within each split, at most
/// `max_per_sentence` pairs per sentence, then drops majority-label pairs until
/// each split has equally many positive and negative pairs. Pairs are dropped
/// from the best-connected sentences first so that none loses its last pair
/// while another alternative remains.
pub fn generate_pairs(
    split: &SentenceSplit,
    annotations: &[GoldRecord],
    seed: u64,
    max_per_sentence: usize,
) -> Result<Vec<WicPair>, WicError> {
    if max_per_sentence == 0 {
        return Err(WicError::InvalidParameter(
            "max_per_sentence must be at least 1".into(),
        ));
    }
    let mut groups: BTreeMap<(Split, &str), Vec<&GoldRecord>> = BTreeMap::new();
    for a in annotations {
        if let Some(s) = split.get(&a.lemma, &a.id) {
            groups.entry((s, &a.lemma)).or_default().push(a);
        }
    }

    let mut out = Vec::new();
    for s in Split::ALL {
        let mut pairs: Vec<WicPair> = Vec::new();
        for ((_, lemma), members) in groups.range((s, "")..).take_while(|((g, _), _)| *g == s) {
            let mut members = members.clone();
            members.sort_by(|a, b| a.id.cmp(&b.id));
            let group = Group { members };
            let mut rng = seed::rng(seed::derive(seed, &format!("pairs/{s}/{lemma}")));
            for (i, j) in group.pick(&mut rng, max_per_sentence) {
                let (a, b) = (group.members[i], group.members[j]);
                pairs.push(WicPair {
                    pair_id: String::new(),
                    lemma: lemma.to_string(),
                    sentence_a_id: a.id.clone(),
                    sentence_b_id: b.id.clone(),
                    span_a: a.target_span,
                    span_b: b.target_span,
                    label: u8::from(a.sense_id == b.sense_id),
                    split: s,
                });
            }
        }
        let mut pairs = balance(pairs);
        for (k, p) in pairs.iter_mut().enumerate() {
            p.pair_id = format!("{s}-{k:06}");
        }
        out.extend(pairs);
    }
    Ok(out)
}

/// Drops majority-label pairs until both labels are equally frequent.
fn balance(pairs: Vec<WicPair>) -> Vec<WicPair> {
    let positives = pairs.iter().filter(|p| p.label == 1).count();
    let negatives = pairs.len() - positives;
    if positives == negatives {
        return pairs;
    }
    let majority = u8::from(positives > negatives);
    let excess = positives.abs_diff(negatives);

    let node = |p: &WicPair, b: bool| {
        let id = if b {
            &p.sentence_b_id
        } else {
            &p.sentence_a_id
        };
        (p.lemma.clone(), id.clone())
    };
    let mut degree: HashMap<(String, String), usize> = HashMap::new();
    let mut incident: HashMap<(String, String), Vec<usize>> = HashMap::new();
    for (k, p) in pairs.iter().enumerate() {
        for b in [false, true] {
            *degree.entry(node(p, b)).or_insert(0) += 1;
            if p.label == majority {
                incident.entry(node(p, b)).or_default().push(k);
            }
        }
    }
    // Highest (smaller endpoint degree, larger endpoint degree) first; later
    // pairs first among equals.
    let key = |k: usize, degree: &HashMap<(String, String), usize>| {
        let da = degree[&node(&pairs[k], false)];
        let db = degree[&node(&pairs[k], true)];
        (da.min(db), da.max(db), k)
    };
    let mut queue: BTreeSet<(usize, usize, usize)> = (0..pairs.len())
        .filter(|&k| pairs[k].label == majority)
        .map(|k| key(k, &degree))
        .collect();
    let mut dropped = vec![false; pairs.len()];
    for _ in 0..excess {
        let Some(top) = queue.pop_last() else { break };
        let k = top.2;
        dropped[k] = true;
        let ends = [node(&pairs[k], false), node(&pairs[k], true)];
        let mut touched = BTreeSet::new();
        for e in &ends {
            for &other in &incident[e] {
                if !dropped[other] {
                    touched.insert(other);
                }
            }
        }
        for &o in &touched {
            queue.remove(&key(o, &degree));
        }
        for e in &ends {
            *degree.get_mut(e).unwrap() -= 1;
        }
        for &o in &touched {
            queue.insert(key(o, &degree));
        }
    }
    pairs
        .into_iter()
        .zip(dropped)
        .filter_map(|(p, d)| (!d).then_some(p))
        .collect()
}

/// Mean and population standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-language corpus summary: counts plus sense and sentence distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub lang: String,
    pub words: usize,
    pub sentences: usize,
    pub senses: usize,
    pub senses_per_word: (f64, f64),
    pub sentences_per_sense: (f64, f64),
}

impl DatasetStats {
    pub fn senses_per_word_display(&self) -> String {
        format!(
            "{:.2} ± {:.2}",
            self.senses_per_word.0, self.senses_per_word.1
        )
    }

    pub fn sentences_per_sense_display(&self) -> String {
        format!(
            "{:.2} ± {:.2}",
            self.sentences_per_sense.0, self.sentences_per_sense.1
        )
    }
}

/// One row per language, in language order.
pub fn dataset_stats(annotations: &[GoldRecord]) -> Vec<DatasetStats> {
    let mut by_lang: BTreeMap<&str, BTreeMap<&str, BTreeMap<&str, usize>>> = BTreeMap::new();
    for a in annotations {
        *by_lang
            .entry(&a.lang)
            .or_default()
            .entry(&a.lemma)
            .or_default()
            .entry(&a.sense_id)
            .or_insert(0) += 1;
    }
    by_lang
        .into_iter()
        .map(|(lang, words)| {
            let per_word: Vec<f64> = words.values().map(|s| s.len() as f64).collect();
            let per_sense: Vec<f64> = words
                .values()
                .flat_map(|s| s.values().map(|&c| c as f64))
                .collect();
            DatasetStats {
                lang: lang.to_string(),
                words: words.len(),
                sentences: per_sense.iter().sum::<f64>() as usize,
                senses: per_sense.len(),
                senses_per_word: mean_sd(&per_word),
                sentences_per_sense: mean_sd(&per_sense),
            }
        })
        .collect()
}

pub fn render_dataset_stats(rows: &[DatasetStats]) -> String {
    let mut cells = vec![[
        "Language".to_string(),
        "Words".into(),
        "Sentences".into(),
        "Senses".into(),
        "Senses/Word".into(),
        "Sentences/Sense".into(),
    ]];
    for r in rows {
        cells.push([
            r.lang.clone(),
            r.words.to_string(),
            r.sentences.to_string(),
            r.senses.to_string(),
            r.senses_per_word_display(),
            r.sentences_per_sense_display(),
        ]);
    }
    render_columns(&cells)
}

fn render_columns<const N: usize>(cells: &[[String; N]]) -> String {
    let widths: Vec<usize> = (0..N)
        .map(|c| {
            cells
                .iter()
                .map(|r| r[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct WicStats {
    pub pairs_train: usize,
    pub pairs_dev: usize,
    pub pairs_test: usize,
    pub words_train: usize,
    pub words_dev: usize,
    pub words_test: usize,
    pub words_in_all_splits: usize,
    /// Fraction of positive pairs per split; 0 for an empty split.
    pub positive_rate_train: f64,
    pub positive_rate_dev: f64,
    pub positive_rate_test: f64,
    /// Shared words declared by the word split, whether or not they produced pairs everywhere.
    pub shared_words_declared: usize,
}

/// Counts pairs and contributing words per split. A word counts for a split
/// when it has at least one pair there.
pub fn wic_stats(pairs: &[WicPair], ws: &WordSplit) -> WicStats {
    let mut count = [0usize; 3];
    let mut positives = [0usize; 3];
    let mut words: [BTreeSet<&str>; 3] = Default::default();
    for p in pairs {
        let i = p.split as usize;
        count[i] += 1;
        positives[i] += usize::from(p.label == 1);
        words[i].insert(&p.lemma);
    }
    let rate = |i: usize| {
        if count[i] == 0 {
            0.0
        } else {
            positives[i] as f64 / count[i] as f64
        }
    };
    WicStats {
        pairs_train: count[0],
        pairs_dev: count[1],
        pairs_test: count[2],
        words_train: words[0].len(),
        words_dev: words[1].len(),
        words_test: words[2].len(),
        words_in_all_splits: words[0]
            .iter()
            .filter(|w| words[1].contains(*w) && words[2].contains(*w))
            .count(),
        positive_rate_train: rate(0),
        positive_rate_dev: rate(1),
        positive_rate_test: rate(2),
        shared_words_declared: ws.shared_words.len(),
    }
}

impl WicStats {
    pub fn render(&self) -> String {
        let total = (self.pairs_train + self.pairs_dev + self.pairs_test).max(1) as f64;
        let rows = [
            [
                "Sent Pairs (Train)".to_string(),
                self.pairs_train.to_string(),
            ],
            ["Sent Pairs (Dev)".into(), self.pairs_dev.to_string()],
            ["Sent Pairs (Test)".into(), self.pairs_test.to_string()],
            ["Words (Train)".into(), self.words_train.to_string()],
            ["Words (Dev)".into(), self.words_dev.to_string()],
            ["Words (Test)".into(), self.words_test.to_string()],
            [
                "Words in All Splits".into(),
                self.words_in_all_splits.to_string(),
            ],
            [
                "Pair ratio (Train/Dev/Test)".into(),
                format!(
                    "{:.1}/{:.1}/{:.1}",
                    100.0 * self.pairs_train as f64 / total,
                    100.0 * self.pairs_dev as f64 / total,
                    100.0 * self.pairs_test as f64 / total
                ),
            ],
            [
                "Positive rate (Train/Dev/Test)".into(),
                format!(
                    "{:.3}/{:.3}/{:.3}",
                    self.positive_rate_train, self.positive_rate_dev, self.positive_rate_test
                ),
            ],
        ];
        render_columns(&rows)
    }
}

/// One line of a WiC dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WicRecord {
    pub pair_id: String,
    pub lemma: String,
    pub sentence1: String,
    pub sentence2: String,
    pub span1: Span,
    pub span2: Span,
    pub label: u8,
    pub sentence1_id: String,
    pub sentence2_id: String,
}

/// Joins pairs to sentence texts.
pub fn to_records(
    pairs: &[WicPair],
    annotations: &[GoldRecord],
) -> Result<Vec<WicRecord>, WicError> {
    let texts: HashMap<(&str, &str), &str> = annotations
        .iter()
        .map(|a| ((a.lemma.as_str(), a.id.as_str()), a.text.as_str()))
        .collect();
    let text = |lemma: &str, id: &str| {
        texts
            .get(&(lemma, id))
            .map(|t| t.to_string())
            .ok_or_else(|| WicError::InvalidParameter(format!("no sentence {id:?} for {lemma:?}")))
    };
    pairs
        .iter()
        .map(|p| {
            Ok(WicRecord {
                pair_id: p.pair_id.clone(),
                lemma: p.lemma.clone(),
                sentence1: text(&p.lemma, &p.sentence_a_id)?,
                sentence2: text(&p.lemma, &p.sentence_b_id)?,
                span1: p.span_a,
                span2: p.span_b,
                label: p.label,
                sentence1_id: p.sentence_a_id.clone(),
                sentence2_id: p.sentence_b_id.clone(),
            })
        })
        .collect()
}

fn tsv_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Tab-separated rendering with a header; tabs and newlines in text become spaces.
pub fn to_tsv(records: &[WicRecord]) -> String {
    let mut out = String::from(
        "pair_id\tlemma\tsentence1\tsentence2\tspan1\tspan2\tlabel\tsentence1_id\tsentence2_id\n",
    );
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}-{}\t{}-{}\t{}\t{}\t{}\n",
            tsv_field(&r.pair_id),
            tsv_field(&r.lemma),
            tsv_field(&r.sentence1),
            tsv_field(&r.sentence2),
            r.span1.start,
            r.span1.end,
            r.span2.start,
            r.span2.end,
            r.label,
            tsv_field(&r.sentence1_id),
            tsv_field(&r.sentence2_id)
        ));
    }
    out
}

/// Everything produced by one build.
#[derive(Debug, Clone, PartialEq)]
pub struct WicDataset {
    pub words: WordSplit,
    pub sentences: SentenceSplit,
    pub pairs: Vec<WicPair>,
    pub stats: WicStats,
}

/// Runs word split, sentence redistribution and pairing over gold annotations.
pub fn build(
    annotations: &[GoldRecord],
    seed: u64,
    max_per_sentence: usize,
) -> Result<WicDataset, WicError> {
    let (eligible, _) = eligible_lemmas(annotations);
    let words = split_words(&eligible, seed)?;
    let sentences = redistribute_sentences(annotations, &words, seed)?;
    let pairs = generate_pairs(&sentences, annotations, seed, max_per_sentence)?;
    let stats = wic_stats(&pairs, &words);
    Ok(WicDataset {
        words,
        sentences,
        pairs,
        stats,
    })
}

/// Writes `<split>.jsonl` and `<split>.tsv` for each split into `dir`.
pub fn write_dataset(
    dir: &Path,
    dataset: &WicDataset,
    annotations: &[GoldRecord],
) -> Result<(), WicError> {
    std::fs::create_dir_all(dir).map_err(|e| {
        WicError::Output(JsonlError::Io {
            path: dir.display().to_string(),
            source: e,
        })
    })?;
    for s in Split::ALL {
        let pairs: Vec<WicPair> = dataset
            .pairs
            .iter()
            .filter(|p| p.split == s)
            .cloned()
            .collect();
        let records = to_records(&pairs, annotations)?;
        jsonl::write(&dir.join(format!("{s}.jsonl")), &records)?;
        jsonl::write_atomic(&dir.join(format!("{s}.tsv")), to_tsv(&records).as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::Provenance;

    fn gold(lemma: &str, id: &str, sense: &str) -> GoldRecord {
        GoldRecord {
            id: id.into(),
            lang: "az".into(),
            lemma: lemma.into(),
            surface_form: lemma.into(),
            text: format!("{lemma} in sentence {id}"),
            target_span: Span::new(0, lemma.chars().count()),
            source: "t".into(),
            sense_id: sense.into(),
            annotator: "a".into(),
            provenance: Provenance::Manual,
        }
    }

    fn lemma_with(lemma: &str, senses: &[(&str, usize)]) -> Vec<GoldRecord> {
        let mut out = Vec::new();
        for (s, n) in senses {
            for i in 0..*n {
                out.push(gold(lemma, &format!("{lemma}-{s}-{i:03}"), s));
            }
        }
        out
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i:02}")).collect()
    }

    #[test]
    fn apportionment() {
        assert_eq!(largest_remainder(20, &[70, 15, 15]), [14, 3, 3]);
        assert_eq!(largest_remainder(3, &[70, 15, 15]), [2, 1, 0]);
        assert_eq!(largest_remainder(50, &[70, 15, 15]), [35, 8, 7]);
        assert_eq!(largest_remainder(0, &[1, 1]), [0, 0]);
        assert_eq!(round_fraction(42, 3, 10), 13);
        assert_eq!(round_fraction(14, 3, 10), 4);
        assert_eq!(round_fraction(1, 3, 10), 0);
        assert_eq!(round_fraction(5, 3, 10), 2);
    }

    #[test]
    fn word_split_counts() {
        let ws = split_words(&names(20), 42).unwrap();
        assert_eq!(
            (
                ws.train_words.len(),
                ws.dev_words.len(),
                ws.test_words.len(),
                ws.shared_words.len()
            ),
            (14, 3, 3, 4)
        );
        assert!(ws.shared_words.is_subset(&ws.train_words));
        let ws = split_words(&names(3), 42).unwrap();
        assert_eq!(
            (
                ws.train_words.len(),
                ws.dev_words.len(),
                ws.test_words.len(),
                ws.shared_words.len()
            ),
            (1, 1, 1, 0)
        );
        let ws = split_words(&names(60), 1).unwrap();
        assert_eq!(ws.train_words.len(), 42);
        assert_eq!(ws.shared_words.len(), 13);
        assert!(split_words(&names(2), 42).is_err());
    }

    #[test]
    fn word_split_is_seeded() {
        assert_eq!(
            split_words(&names(20), 7).unwrap(),
            split_words(&names(20), 7).unwrap()
        );
        let mut reversed = names(20);
        reversed.reverse();
        assert_eq!(
            split_words(&reversed, 7).unwrap(),
            split_words(&names(20), 7).unwrap()
        );
    }

    fn shared_only(lemma: &str) -> WordSplit {
        WordSplit {
            train_words: [lemma.to_string()].into(),
            dev_words: BTreeSet::new(),
            test_words: BTreeSet::new(),
            shared_words: [lemma.to_string()].into(),
        }
    }

    fn tally(split: &SentenceSplit, ann: &[GoldRecord]) -> BTreeMap<(Split, String), usize> {
        let mut out = BTreeMap::new();
        for a in ann {
            *out.entry((split.get(&a.lemma, &a.id).unwrap(), a.sense_id.clone()))
                .or_insert(0) += 1;
        }
        out
    }

    #[test]
    fn stratified_move_40_40() {
        let ann = lemma_with("x", &[("A", 40), ("B", 40)]);
        let split = redistribute_sentences(&ann, &shared_only("x"), 3).unwrap();
        let t = tally(&split, &ann);
        for sense in ["A", "B"] {
            assert_eq!(t[&(Split::Train, sense.to_string())], 30);
            assert_eq!(t[&(Split::Dev, sense.to_string())], 5);
            assert_eq!(t[&(Split::Test, sense.to_string())], 5);
        }
    }

    #[test]
    fn stratified_move_4_4() {
        let ann = lemma_with("x", &[("A", 4), ("B", 4)]);
        let split = redistribute_sentences(&ann, &shared_only("x"), 3).unwrap();
        let t = tally(&split, &ann);
        assert_eq!(t[&(Split::Dev, "A".to_string())], 1);
        assert_eq!(t[&(Split::Test, "B".to_string())], 1);
        assert!(!t.contains_key(&(Split::Dev, "B".to_string())));
        assert!(!t.contains_key(&(Split::Test, "A".to_string())));
    }

    #[test]
    fn non_shared_and_single_sense() {
        let mut ann = lemma_with("x", &[("A", 5), ("B", 5)]);
        ann.extend(lemma_with("y", &[("A", 5)]));
        let ws = WordSplit {
            train_words: ["x".to_string()].into(),
            dev_words: BTreeSet::new(),
            test_words: BTreeSet::new(),
            shared_words: BTreeSet::new(),
        };
        let split = redistribute_sentences(&ann, &ws, 3).unwrap();
        assert_eq!(split.excluded, ["y"]);
        assert_eq!(split.assignments.len(), 10);
        assert!(split.assignments.values().all(|&s| s == Split::Train));
    }

    #[test]
    fn two_by_two_pairs_balance() {
        let ann = lemma_with("x", &[("A", 2), ("B", 2)]);
        let ws = WordSplit {
            train_words: ["x".to_string()].into(),
            dev_words: BTreeSet::new(),
            test_words: BTreeSet::new(),
            shared_words: BTreeSet::new(),
        };
        let split = redistribute_sentences(&ann, &ws, 1).unwrap();
        for seed in 0..20 {
            let pairs = generate_pairs(&split, &ann, seed, 16).unwrap();
            let pos = pairs.iter().filter(|p| p.label == 1).count();
            assert_eq!((pos, pairs.len() - pos), (2, 2), "seed {seed}");
        }
    }

    #[test]
    fn single_sentence_gives_no_pairs() {
        let ann = vec![gold("x", "1", "A")];
        let mut split = SentenceSplit::default();
        split
            .assignments
            .insert(("x".into(), "1".into()), Split::Train);
        assert!(generate_pairs(&split, &ann, 1, 16).unwrap().is_empty());
    }

    #[test]
    fn cap_respected_with_40_sentences() {
        let ann = lemma_with("x", &[("A", 20), ("B", 12), ("C", 8)]);
        let mut split = SentenceSplit::default();
        for a in &ann {
            split
                .assignments
                .insert((a.lemma.clone(), a.id.clone()), Split::Train);
        }
        let pairs = generate_pairs(&split, &ann, 5, 16).unwrap();
        let mut degree: HashMap<&str, usize> = HashMap::new();
        for p in &pairs {
            *degree.entry(&p.sentence_a_id).or_insert(0) += 1;
            *degree.entry(&p.sentence_b_id).or_insert(0) += 1;
            assert_ne!(p.sentence_a_id, p.sentence_b_id);
        }
        assert!(degree.values().all(|&d| d <= 16));
        let pos = pairs.iter().filter(|p| p.label == 1).count();
        assert_eq!(pos * 2, pairs.len());
        let unique: BTreeSet<(&str, &str)> = pairs
            .iter()
            .map(|p| (p.sentence_a_id.as_str(), p.sentence_b_id.as_str()))
            .collect();
        assert_eq!(unique.len(), pairs.len());
    }

    #[test]
    fn dataset_stats_rows() {
        let mut ann = Vec::new();
        for w in 0..59 {
            ann.extend(lemma_with(&format!("w{w}"), &[("A", 3), ("B", 2)]));
        }
        ann.extend(lemma_with("solo", &[("A", 4)]));
        let rows = dataset_stats(&ann);
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].words, rows[0].senses), (60, 119));
        assert_eq!(rows[0].senses_per_word_display(), "1.98 ± 0.13");
        assert!(render_dataset_stats(&rows).contains("1.98 ± 0.13"));
        let (m, sd) = mean_sd(&[2.0, 2.0, 2.0]);
        assert_eq!((m, sd), (2.0, 0.0));
    }

    #[test]
    fn empty_stats() {
        let ws = split_words(&names(3), 1).unwrap();
        let s = wic_stats(&[], &ws);
        assert_eq!(
            s,
            WicStats {
                shared_words_declared: 0,
                ..Default::default()
            }
        );
        assert!(s.render().contains("Words in All Splits"));
    }

    #[test]
    fn tsv_escapes() {
        let r = WicRecord {
            pair_id: "train-000000".into(),
            lemma: "x".into(),
            sentence1: "a\tb".into(),
            sentence2: "c".into(),
            span1: Span::new(0, 1),
            span2: Span::new(0, 1),
            label: 1,
            sentence1_id: "1".into(),
            sentence2_id: "2".into(),
        };
        let tsv = to_tsv(&[r]);
        assert_eq!(tsv.lines().nth(1).unwrap().split('\t').count(), 9);
    }
}

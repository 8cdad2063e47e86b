//! Evaluation of Word-in-Context predictions from externally computed pair
//! distances: target markup, threshold tuning on dev, accuracy on test.
//!
//! A pair is predicted "same sense" (label 1) when `distance <= threshold`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Span;
use crate::wicbuilder::WicRecord;

pub const OPEN_TAG: &str = "<t>";
pub const CLOSE_TAG: &str = "</t>";

/// Distances may exceed the cosine range by this much from rounding.
const DISTANCE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("invalid span {start}..{end} for text of {len} characters")]
    InvalidSpan {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("invalid distance {distance} for pair {pair_id:?}")]
    InvalidDistance { pair_id: String, distance: f64 },
    #[error("{0}")]
    InvalidInput(String),
    #[error("threshold is unidentifiable: the dev set contains only label {0}")]
    SingleClass(u8),
}

/// Wraps the span in `<t>`/`</t>`, leaving every other byte untouched. Text
/// that already contains either tag is rejected, since the marking could not
/// be undone unambiguously.
pub fn mark_target(text: &str, span: Span) -> Result<String, EvalError> {
    if text.contains(OPEN_TAG) || text.contains(CLOSE_TAG) {
        return Err(EvalError::InvalidInput(format!(
            "text already contains {OPEN_TAG:?} or {CLOSE_TAG:?}"
        )));
    }
    let len = text.chars().count();
    if span.start >= span.end || span.end > len {
        return Err(EvalError::InvalidSpan {
            start: span.start,
            end: span.end,
            len,
        });
    }
    let range = span.byte_range(text).ok_or(EvalError::InvalidSpan {
        start: span.start,
        end: span.end,
        len,
    })?;
    let mut out = String::with_capacity(text.len() + OPEN_TAG.len() + CLOSE_TAG.len());
    out.push_str(&text[..range.start]);
    out.push_str(OPEN_TAG);
    out.push_str(&text[range.clone()]);
    out.push_str(CLOSE_TAG);
    out.push_str(&text[range.end..]);
    Ok(out)
}

/// Inverse of [`mark_target`]: removes the first `<t>` and the last `</t>`.
pub fn unmark_target(marked: &str) -> Option<String> {
    let open = marked.find(OPEN_TAG)?;
    let close = marked.rfind(CLOSE_TAG)?;
    if close < open + OPEN_TAG.len() {
        return None;
    }
    Some(format!(
        "{}{}{}",
        &marked[..open],
        &marked[open + OPEN_TAG.len()..close],
        &marked[close + CLOSE_TAG.len()..]
    ))
}

/// A WiC record with both target words marked, for external embedders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedPair {
    pub pair_id: String,
    pub lemma: String,
    pub sentence1: String,
    pub sentence2: String,
    pub label: u8,
}

pub fn mark_pair(r: &WicRecord) -> Result<MarkedPair, EvalError> {
    Ok(MarkedPair {
        pair_id: r.pair_id.clone(),
        lemma: r.lemma.clone(),
        sentence1: mark_target(&r.sentence1, r.span1)?,
        sentence2: mark_target(&r.sentence2, r.span2)?,
        label: r.label,
    })
}

/// One line of a scored-pairs file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pair_id: String,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub distance: f64,
    pub label: u8,
}

/// A decision threshold; the sentinels classify everything 0 or everything 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cut {
    NegInfinity,
    At(f64),
    PosInfinity,
}

impl Cut {
    pub fn predicts_same(&self, distance: f64) -> bool {
        match self {
            Cut::NegInfinity => false,
            Cut::At(t) => distance <= *t,
            Cut::PosInfinity => true,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Cut::NegInfinity => f64::NEG_INFINITY,
            Cut::At(t) => *t,
            Cut::PosInfinity => f64::INFINITY,
        }
    }

    pub fn from_f64(t: f64) -> Cut {
        if t == f64::NEG_INFINITY {
            Cut::NegInfinity
        } else if t == f64::INFINITY {
            Cut::PosInfinity
        } else {
            Cut::At(t)
        }
    }
}

impl fmt::Display for Cut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cut::NegInfinity => f.write_str("-inf"),
            Cut::At(t) => write!(f, "{t}"),
            Cut::PosInfinity => f.write_str("+inf"),
        }
    }
}

impl Serialize for Cut {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cut::At(t) => s.serialize_f64(*t),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Cut {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(t) => Ok(Cut::At(t)),
            Raw::Text(s) => match s.as_str() {
                "-inf" => Ok(Cut::NegInfinity),
                "+inf" | "inf" => Ok(Cut::PosInfinity),
                _ => Err(serde::de::Error::custom(format!("invalid threshold {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub cut: Cut,
    pub dev_accuracy: f64,
}

fn check(pairs: &[ScoredPair]) -> Result<(), EvalError> {
    for (i, p) in pairs.iter().enumerate() {
        if !p.distance.is_finite()
            || p.distance < -DISTANCE_SLACK
            || p.distance > 2.0 + DISTANCE_SLACK
        {
            return Err(EvalError::InvalidDistance {
                pair_id: format!("#{i}"),
                distance: p.distance,
            });
        }
        if p.label > 1 {
            return Err(EvalError::InvalidInput(format!(
                "label {} at #{i} is not 0 or 1",
                p.label
            )));
        }
    }
    Ok(())
}

/// Fraction of pairs classified correctly at `cut`.
pub fn accuracy(pairs: &[ScoredPair], cut: Cut) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let correct = pairs
        .iter()
        .filter(|p| cut.predicts_same(p.distance) == (p.label == 1))
        .count();
    correct as f64 / pairs.len() as f64
}

/// Exhaustive search over every distinct decision: both sentinels and the
/// midpoints between adjacent distinct distances. Ties go to the smallest cut.
pub fn tune_threshold(dev: &[ScoredPair]) -> Result<Threshold, EvalError> {
    if dev.is_empty() {
        return Err(EvalError::InvalidInput("dev set is empty".into()));
    }
    check(dev)?;
    let positives = dev.iter().filter(|p| p.label == 1).count();
    if positives == 0 || positives == dev.len() {
        return Err(EvalError::SingleClass(dev[0].label));
    }

    let mut sorted = dev.to_vec();
    sorted.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .unwrap_or(Ordering::Equal)
    });
    // Start below everything: all predicted 0, so every negative is correct.
    let mut correct = dev.len() - positives;
    let mut best = (correct, Cut::NegInfinity);
    let mut i = 0;
    while i < sorted.len() {
        let d = sorted[i].distance;
        while i < sorted.len() && sorted[i].distance == d {
            if sorted[i].label == 1 {
                correct += 1;
            } else {
                correct -= 1;
            }
            i += 1;
        }
        let cut = match sorted.get(i) {
            Some(next) => {
                // Adjacent floats can have a midpoint that rounds up onto `next`.
                let mid = (d + next.distance) / 2.0;
                Cut::At(if mid < next.distance { mid } else { d })
            }
            None => Cut::PosInfinity,
        };
        if correct > best.0 {
            best = (correct, cut);
        }
    }
    Ok(Threshold {
        cut: best.1,
        dev_accuracy: best.0 as f64 / dev.len() as f64,
    })
}

/// Test accuracy as a fraction; see [`percent`] for the reported form.
pub fn evaluate(test: &[ScoredPair], cut: Cut) -> Result<f64, EvalError> {
    if test.is_empty() {
        return Err(EvalError::InvalidInput("test set is empty".into()));
    }
    check(test)?;
    Ok(accuracy(test, cut))
}

/// Accuracy rendered as a percentage with one decimal, e.g. `"50.0"`.
pub fn percent(accuracy: f64) -> String {
    format!("{:.1}", accuracy * 100.0)
}

/// Looks up each labelled pair's distance by pair id.
pub fn join_scores(
    records: &[WicRecord],
    scores: &[PairScore],
) -> Result<Vec<ScoredPair>, EvalError> {
    let mut by_id: HashMap<&str, f64> = HashMap::with_capacity(scores.len());
    for s in scores {
        if by_id.insert(&s.pair_id, s.distance).is_some() {
            return Err(EvalError::InvalidInput(format!(
                "pair {:?} scored twice",
                s.pair_id
            )));
        }
        if !s.distance.is_finite()
            || s.distance < -DISTANCE_SLACK
            || s.distance > 2.0 + DISTANCE_SLACK
        {
            return Err(EvalError::InvalidDistance {
                pair_id: s.pair_id.clone(),
                distance: s.distance,
            });
        }
    }
    records
        .iter()
        .map(|r| {
            by_id
                .get(r.pair_id.as_str())
                .map(|&distance| ScoredPair {
                    distance,
                    label: r.label,
                })
                .ok_or_else(|| {
                    EvalError::InvalidInput(format!("no score for pair {:?}", r.pair_id))
                })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: Cut,
    pub dev_accuracy: f64,
    pub test_accuracy: f64,
    pub n_dev: usize,
    pub n_test: usize,
}

pub fn run(dev: &[ScoredPair], test: &[ScoredPair]) -> Result<EvalReport, EvalError> {
    let t = tune_threshold(dev)?;
    Ok(EvalReport {
        threshold: t.cut,
        dev_accuracy: t.dev_accuracy,
        test_accuracy: evaluate(test, t.cut)?,
        n_dev: dev.len(),
        n_test: test.len(),
    })
}

//! Annotation-efficiency metrics for model-assisted sentence selection.
//!
//! `prior` is how often a sense turns up in a random sample of occurrences,
//! `precision` how often a model-selected sentence really carries the sense,
//! and `lift = precision / prior`. Everything is kept as exact ratios of
//! counts until it is rendered.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiftError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no gold label for selected sentence {0:?}")]
    MissingGold(String),
    #[error("lift is undefined when both precision and prior are zero")]
    Undefined,
}

/// `hits / total` with `total > 0`, kept unreduced so support counts survive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proportion {
    pub hits: u64,
    pub total: u64,
}

impl Proportion {
    pub fn new(hits: u64, total: u64) -> Result<Self, LiftError> {
        if total == 0 || hits > total {
            return Err(LiftError::InvalidParameter(format!(
                "{hits}/{total} is not a proportion"
            )));
        }
        Ok(Proportion { hits, total })
    }

    /// Parses a decimal such as `0.36` exactly as `36/100`.
    pub fn from_decimal(s: &str) -> Result<Self, LiftError> {
        let bad = || LiftError::InvalidParameter(format!("{s:?} is not a decimal in [0, 1]"));
        let s = s.trim();
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() || frac.len() > 18 {
            return Err(bad());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let hits = int
            .checked_mul(scale)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        Proportion::new(hits, scale).map_err(|_| bad())
    }

    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.hits, self.total)
    }

    pub fn value(&self) -> f64 {
        self.hits as f64 / self.total as f64
    }

    pub fn is_zero(&self) -> bool {
        self.hits == 0
    }
}

/// Sense priors from a gold-labelled random sample of `(sentence_id, sense_id)`.
pub fn estimate_priors<S: AsRef<str>, T: AsRef<str>>(
    sample: &[(S, T)],
) -> Result<BTreeMap<String, Proportion>, LiftError> {
    if sample.is_empty() {
        return Err(LiftError::InvalidParameter("prior sample is empty".into()));
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (_, sense) in sample {
        *counts.entry(sense.as_ref().to_string()).or_insert(0) += 1;
    }
    let total = sample.len() as u64;
    Ok(counts
        .into_iter()
        .map(|(s, c)| (s, Proportion { hits: c, total }))
        .collect())
}

/// Fraction of `selected` sentences whose gold sense is `sense`.
pub fn selection_precision<S: AsRef<str>>(
    selected: &[S],
    gold: &HashMap<String, String>,
    sense: &str,
) -> Result<Proportion, LiftError> {
    if selected.is_empty() {
        return Err(LiftError::InvalidParameter("selection is empty".into()));
    }
    let mut hits = 0;
    for id in selected {
        let label = gold
            .get(id.as_ref())
            .ok_or_else(|| LiftError::MissingGold(id.as_ref().to_string()))?;
        if label == sense {
            hits += 1;
        }
    }
    Ok(Proportion {
        hits,
        total: selected.len() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftValue {
    Finite(Ratio<u64>),
    /// The sense never appeared in the prior sample but selection found it.
    Infinite,
}

impl LiftValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            LiftValue::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            LiftValue::Infinite => f64::INFINITY,
        }
    }

    /// Lift as a whole-number percentage, `"900%"`, or the infinity sentinel.
    pub fn render_percent(&self) -> String {
        match self {
            LiftValue::Finite(_) => format!("{:.0}%", self.as_f64() * 100.0),
            LiftValue::Infinite => "∞ (prior = 0)".to_string(),
        }
    }
}

impl fmt::Display for LiftValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_percent())
    }
}

pub fn lift(precision: Proportion, prior: Proportion) -> Result<LiftValue, LiftError> {
    match (precision.is_zero(), prior.is_zero()) {
        (true, true) => Err(LiftError::Undefined),
        (false, true) => Ok(LiftValue::Infinite),
        _ => Ok(LiftValue::Finite(precision.ratio() / prior.ratio())),
    }
}

/// Floating-point convenience form of [`lift`] for already-computed rates.
pub fn lift_f64(precision: f64, prior: f64) -> Result<f64, LiftError> {
    if !(0.0..=1.0).contains(&precision) || !(0.0..=1.0).contains(&prior) {
        return Err(LiftError::InvalidParameter(format!(
            "precision {precision} and prior {prior} must lie in [0, 1]"
        )));
    }
    match (precision == 0.0, prior == 0.0) {
        (true, true) => Err(LiftError::Undefined),
        (false, true) => Ok(f64::INFINITY),
        _ => Ok(precision / prior),
    }
}

/// Expected number of sentences reviewed per relevant hit, with and without
/// model assistance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effort {
    pub manual_reviews: f64,
    pub assisted_reviews: f64,
    /// `manual_reviews / assisted_reviews`, equal to the lift.
    pub reduction_factor: f64,
    /// Review counts rounded up for headline reporting.
    pub manual_display: u64,
    pub assisted_display: u64,
    /// `manual_display / assisted_display` rounded down.
    pub headline_factor: u64,
}

impl Effort {
    pub fn headline(&self) -> String {
        format!(
            "{} reviews per hit manually, {} selections with assistance: {}× reduction",
            self.manual_display, self.assisted_display, self.headline_factor
        )
    }
}

fn ceil_ratio(r: Ratio<u64>) -> u64 {
    r.numer().div_ceil(*r.denom())
}

pub fn effort_reduction(prior: Proportion, precision: Proportion) -> Result<Effort, LiftError> {
    if prior.is_zero() || precision.is_zero() {
        return Err(LiftError::InvalidParameter(
            "effort needs non-zero prior and precision".into(),
        ));
    }
    let manual = prior.ratio().recip();
    let assisted = precision.ratio().recip();
    let factor = manual / assisted;
    let manual_display = ceil_ratio(manual);
    let assisted_display = ceil_ratio(assisted);
    let to_f64 = |r: Ratio<u64>| *r.numer() as f64 / *r.denom() as f64;
    Ok(Effort {
        manual_reviews: to_f64(manual),
        assisted_reviews: to_f64(assisted),
        reduction_factor: to_f64(factor),
        manual_display,
        assisted_display,
        headline_factor: manual_display / assisted_display,
    })
}

/// One sentence of the random prior sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorRow {
    #[serde(default)]
    pub lemma: Option<String>,
    pub sentence_id: String,
    pub sense_id: String,
}

/// One model-selected sentence with the sense it was selected for and its gold sense.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedRow {
    #[serde(default)]
    pub lemma: Option<String>,
    pub sentence_id: String,
    pub target_sense: String,
    pub gold_sense: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftRow {
    pub lemma: String,
    pub sense_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gloss: Option<String>,
    pub prior: f64,
    pub prior_support: Proportion,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision_support: Option<Proportion>,
    /// Exact lift ratio; absent when infinite or undefined.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lift: Option<f64>,
    pub lift_display: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effort: Option<Effort>,
    /// Annotator seconds per relevant hit, manual vs assisted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds_per_hit: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftReport {
    pub rows: Vec<LiftRow>,
}

/// Builds per-sense rows for every lemma present in the prior sample. Senses
/// that were targeted by a selection but never seen in the sample get a zero
/// prior.
pub fn build_report(
    priors: &[PriorRow],
    selected: &[SelectedRow],
    glosses: &HashMap<(String, String), String>,
    seconds_per_sentence: Option<f64>,
) -> Result<LiftReport, LiftError> {
    let lemma_of = |l: &Option<String>| l.clone().unwrap_or_default();
    let mut by_lemma: BTreeMap<String, Vec<(&str, &str)>> = BTreeMap::new();
    for p in priors {
        by_lemma
            .entry(lemma_of(&p.lemma))
            .or_default()
            .push((p.sentence_id.as_str(), p.sense_id.as_str()));
    }
    let mut selections: BTreeMap<(String, String), Vec<&SelectedRow>> = BTreeMap::new();
    for s in selected {
        selections
            .entry((lemma_of(&s.lemma), s.target_sense.clone()))
            .or_default()
            .push(s);
    }

    let mut rows = Vec::new();
    for (lemma, sample) in &by_lemma {
        let mut priors = estimate_priors(sample)?;
        let total = sample.len() as u64;
        for (l, sense) in selections.keys() {
            if l == lemma {
                priors
                    .entry(sense.clone())
                    .or_insert(Proportion { hits: 0, total });
            }
        }
        for (sense, prior) in priors {
            let key = (lemma.clone(), sense.clone());
            let mut row = LiftRow {
                lemma: lemma.clone(),
                sense_id: sense.clone(),
                gloss: glosses.get(&key).cloned(),
                prior: prior.value(),
                prior_support: prior,
                precision: None,
                precision_support: None,
                lift: None,
                lift_display: "-".to_string(),
                effort: None,
                seconds_per_hit: None,
            };
            if let Some(sel) = selections.get(&key) {
                let ids: Vec<&str> = sel.iter().map(|s| s.sentence_id.as_str()).collect();
                let gold: HashMap<String, String> = sel
                    .iter()
                    .map(|s| (s.sentence_id.clone(), s.gold_sense.clone()))
                    .collect();
                let precision = selection_precision(&ids, &gold, &sense)?;
                row.precision = Some(precision.value());
                row.precision_support = Some(precision);
                match lift(precision, prior) {
                    Ok(v) => {
                        row.lift = matches!(v, LiftValue::Finite(_)).then(|| v.as_f64());
                        row.lift_display = v.render_percent();
                    }
                    Err(LiftError::Undefined) => row.lift_display = "undefined".to_string(),
                    Err(e) => return Err(e),
                }
                if let Ok(effort) = effort_reduction(prior, precision) {
                    row.seconds_per_hit = seconds_per_sentence
                        .map(|s| (effort.manual_reviews * s, effort.assisted_reviews * s));
                    row.effort = Some(effort);
                }
            }
            rows.push(row);
        }
    }
    Ok(LiftReport { rows })
}

impl LiftReport {
    /// Aligned text table: word, sense, definition, prior, precision, lift.
    pub fn render_table(&self) -> String {
        let header = [
            "Word",
            "Sense",
            "Definition",
            "Prior",
            "Precision",
            "Lift (%)",
        ];
        let mut cells: Vec<[String; 6]> = vec![header.map(String::from)];
        for r in &self.rows {
            cells.push([
                r.lemma.clone(),
                r.sense_id.clone(),
                r.gloss.clone().unwrap_or_else(|| "-".into()),
                format!("{:.2}", r.prior),
                r.precision.map_or("-".into(), |p| format!("{p:.2}")),
                r.lift_display.clone(),
            ]);
        }
        let widths: Vec<usize> = (0..6)
            .map(|c| {
                cells
                    .iter()
                    .map(|row| row[c].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for (i, row) in cells.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                out.push_str(
                    &widths
                        .iter()
                        .map(|w| "-".repeat(*w))
                        .collect::<Vec<_>>()
                        .join("  "),
                );
                out.push('\n');
            }
        }
        let efforts: Vec<&LiftRow> = self.rows.iter().filter(|r| r.effort.is_some()).collect();
        if !efforts.is_empty() {
            out.push('\n');
        }
        for r in efforts {
            let e = r.effort.as_ref().unwrap();
            out.push_str(&format!(
                "{} / {}: manual {} reviews per hit (exact {:.2}), assisted {} selections (exact {:.2}), {}× reduction (exact {:.2})",
                r.lemma,
                r.sense_id,
                e.manual_display,
                e.manual_reviews,
                e.assisted_display,
                e.assisted_reviews,
                e.headline_factor,
                e.reduction_factor
            ));
            if let Some((m, a)) = r.seconds_per_hit {
                out.push_str(&format!(", {m:.0}s vs {a:.0}s per hit"));
            }
            out.push('\n');
        }
        out
    }
}

/// Orders lift values with infinity above every finite value.
pub fn compare(a: &LiftValue, b: &LiftValue) -> Ordering {
    match (a, b) {
        (LiftValue::Infinite, LiftValue::Infinite) => Ordering::Equal,
        (LiftValue::Infinite, _) => Ordering::Greater,
        (_, LiftValue::Infinite) => Ordering::Less,
        (LiftValue::Finite(x), LiftValue::Finite(y)) => x.cmp(y),
    }
}

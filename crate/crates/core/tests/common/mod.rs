//! Fixtures shared by the integration test targets.
#![allow(dead_code)]

use rand::Rng;

use senseloom::annotate::{GoldRecord, Provenance};
use senseloom::corpus::Span;
use senseloom::embedstore::EmbeddingMatrix;
use senseloom::seed;
use senseloom::wicbuilder::largest_remainder;

const FILLER: [&str; 12] = [
    "river", "market", "evening", "stone", "letter", "garden", "window", "morning", "bridge",
    "song", "field", "road",
];

pub fn gold(lang: &str, lemma: &str, id: &str, sense: &str, text_seed: u64) -> GoldRecord {
    let a = FILLER[(text_seed % 12) as usize];
    let b = FILLER[(text_seed / 12 % 12) as usize];
    let text = format!("near the {a} a {lemma} of {sense} met the {b}");
    let start = text.find(&format!(" {lemma} ")).unwrap() + 1;
    let start_chars = text[..start].chars().count();
    GoldRecord {
        id: id.to_string(),
        lang: lang.to_string(),
        lemma: lemma.to_string(),
        surface_form: lemma.to_string(),
        text,
        target_span: Span::new(start_chars, start_chars + lemma.chars().count()),
        source: "synthetic".to_string(),
        sense_id: sense.to_string(),
        annotator: "a1".to_string(),
        provenance: Provenance::Manual,
    }
}

/// `lemmas` words sharing `sentences` annotated sentences as evenly as
/// possible. Every fourth word has three senses, the rest two; sense sizes are
/// uneven and drawn from the seed.
pub fn synthetic_gold(lemmas: usize, sentences: usize, seed_value: u64) -> Vec<GoldRecord> {
    let mut rng = seed::rng(seed_value);
    let per_word = largest_remainder(sentences as u64, &vec![1; lemmas]);
    let mut out = Vec::with_capacity(sentences);
    for (w, &n) in per_word.iter().enumerate() {
        let lemma = format!("lemma{w:02}");
        let k = if w % 4 == 0 { 3 } else { 2 };
        let weights: Vec<u64> = (0..k).map(|_| rng.gen_range(2..=6)).collect();
        let sizes = largest_remainder(n, &weights);
        let mut i = 0;
        for (s, &size) in sizes.iter().enumerate() {
            for _ in 0..size {
                let id = format!("{lemma}:{i:04}");
                out.push(gold("xx", &lemma, &id, &format!("sense{s}"), rng.gen()));
                i += 1;
            }
        }
    }
    out
}

pub fn random_matrix(rng: &mut seed::Rng, n: usize, dim: usize) -> EmbeddingMatrix {
    let ids = (0..n).map(|i| format!("s:{i}")).collect();
    let data = (0..n * dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    EmbeddingMatrix::new("lemma", "model", ids, dim, data).unwrap()
}

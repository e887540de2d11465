//! Deterministic toy corpora with a learnable extraction signal.
//!
//! Every document has a few "salient" sentences, each built mostly from a
//! salient word pool, and filler sentences from a disjoint pool. The abstract
//! is the salient sentences verbatim, so the greedy oracle labels exactly
//! those sentences.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::CorpusRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub documents: usize,
    pub sections: (usize, usize),
    pub sentences_per_section: (usize, usize),
    pub words_per_sentence: usize,
    pub salient_per_document: usize,
    pub salient_vocab: usize,
    pub filler_vocab: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            documents: 16,
            sections: (2, 3),
            sentences_per_section: (2, 3),
            words_per_sentence: 5,
            salient_per_document: 2,
            salient_vocab: 20,
            filler_vocab: 60,
            seed: 0,
        }
    }
}

pub fn salient_word(i: usize) -> String {
    format!("key{i}")
}

pub fn filler_word(i: usize) -> String {
    format!("w{i}")
}

/// Every word the generator can emit.
pub fn vocabulary(spec: &SyntheticSpec) -> Vec<String> {
    (0..spec.salient_vocab)
        .map(salient_word)
        .chain((0..spec.filler_vocab).map(filler_word))
        .collect()
}

fn sentence(words: &[String], rng: &mut impl Rng) -> String {
    let mut s = words.join(" ");
    s.push(if rng.gen_bool(0.8) { '.' } else { ';' });
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => s,
    }
}

/// Generates `spec.documents` corpus lines (without labels).
pub fn corpus(spec: &SyntheticSpec) -> Vec<CorpusRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let salient: Vec<String> = (0..spec.salient_vocab).map(salient_word).collect();
    let filler: Vec<String> = (0..spec.filler_vocab).map(filler_word).collect();
    let filler_in_salient = spec.words_per_sentence.saturating_sub(3).min(2);
    (0..spec.documents)
        .map(|d| {
            let n_sections = rng.gen_range(spec.sections.0..=spec.sections.1);
            let sizes: Vec<usize> = (0..n_sections)
                .map(|_| rng.gen_range(spec.sentences_per_section.0..=spec.sentences_per_section.1))
                .collect();
            let total: usize = sizes.iter().sum();
            let mut positions: Vec<usize> = (0..total).collect();
            positions.shuffle(&mut rng);
            let salient_at = &positions[..spec.salient_per_document.min(total)];
            let mut flat = Vec::with_capacity(total);
            let mut summary = Vec::new();
            for i in 0..total {
                let s = if salient_at.contains(&i) {
                    let mut words: Vec<String> = salient
                        .choose_multiple(&mut rng, spec.words_per_sentence - filler_in_salient)
                        .cloned()
                        .collect();
                    words.extend(filler.choose_multiple(&mut rng, filler_in_salient).cloned());
                    words.shuffle(&mut rng);
                    let s = sentence(&words, &mut rng);
                    summary.push((i, s.clone()));
                    s
                } else {
                    let words: Vec<String> = filler
                        .choose_multiple(&mut rng, spec.words_per_sentence)
                        .cloned()
                        .collect();
                    sentence(&words, &mut rng)
                };
                flat.push(s);
            }
            let mut sections = Vec::with_capacity(n_sections);
            let mut it = flat.into_iter();
            for &k in &sizes {
                sections.push(it.by_ref().take(k).collect());
            }
            CorpusRecord {
                id: format!("syn-{d:03}"),
                section_names: (0..n_sections)
                    .map(|t| format!("section {}", t + 1))
                    .collect(),
                sections,
                abstract_sentences: summary.into_iter().map(|(_, s)| s).collect(),
                labels: None,
                picked_order: None,
            }
        })
        .collect()
}

/// Random word vectors in the `token v1 ... v_dim` text format.
pub fn embeddings_text(words: &[String], dim: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for w in words {
        out.push_str(w);
        for _ in 0..dim {
            out.push_str(&format!(" {:.6}", rng.gen_range(-1.0f64..1.0)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_record, LoadOptions};
    use crate::oracle::generate_labels;

    #[test]
    fn oracle_recovers_salient_sentences() {
        let spec = SyntheticSpec::default();
        for (k, rec) in corpus(&spec).into_iter().enumerate() {
            let entry = parse_record(rec, k + 1, &LoadOptions::default())
                .unwrap()
                .unwrap();
            let doc = entry.document;
            let labeled = generate_labels(&doc, 200);
            let salient: Vec<usize> = (0..doc.len())
                .filter(|&i| doc.sentences[i].tokens.iter().any(|t| t.starts_with("key")))
                .collect();
            let mut picked = labeled.picked_order.clone();
            picked.sort_unstable();
            assert_eq!(picked, salient, "{}", doc.id);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec::default();
        let a = serde_json::to_string(&corpus(&spec)).unwrap();
        let b = serde_json::to_string(&corpus(&spec)).unwrap();
        assert_eq!(a, b);
    }
}

//! Greedy ROUGE-1 oracle labels and the Lead / Oracle baselines.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::corpus::{CorpusEntry, CorpusRecord, Document, StoredLabels};
use crate::error::{Error, Result};
use crate::metrics::RougeScore;

pub const DEFAULT_LABEL_LIMIT: usize = 200;

/// A document with binary extraction targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDocument {
    pub document: Document,
    pub labels: Vec<u8>,
    /// Sentence indices in the order the greedy search picked them.
    pub picked_order: Vec<usize>,
}

impl LabeledDocument {
    pub fn from_picks(document: Document, picked_order: Vec<usize>) -> Self {
        let mut labels = vec![0u8; document.len()];
        for &i in &picked_order {
            labels[i] = 1;
        }
        LabeledDocument {
            document,
            labels,
            picked_order,
        }
    }

    /// Uses stored labels, failing with a pointer to the `label` subcommand
    /// when a line has none.
    pub fn from_entry(entry: CorpusEntry) -> Result<Self> {
        match entry.labels {
            Some(StoredLabels {
                labels,
                picked_order,
            }) => Ok(LabeledDocument {
                document: entry.document,
                labels,
                picked_order,
            }),
            None => Err(Error::MissingLabels(entry.document.id)),
        }
    }

    pub fn to_record(&self) -> CorpusRecord {
        self.document
            .to_record(Some((&self.labels, &self.picked_order)))
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }
}

/// Clipped unigram overlap against a fixed reference, updated one sentence at
/// a time.
struct UnigramState<'a> {
    reference: HashMap<&'a str, usize>,
    reference_len: usize,
    hyp: HashMap<&'a str, usize>,
    hyp_len: usize,
    overlap: usize,
}

impl<'a> UnigramState<'a> {
    fn new(reference: impl Iterator<Item = &'a str>) -> Self {
        let mut counts = HashMap::new();
        let mut len = 0;
        for t in reference {
            *counts.entry(t).or_insert(0) += 1;
            len += 1;
        }
        UnigramState {
            reference: counts,
            reference_len: len,
            hyp: HashMap::new(),
            hyp_len: 0,
            overlap: 0,
        }
    }

    fn gain(&self, tokens: &HashMap<&'a str, usize>) -> usize {
        tokens
            .iter()
            .map(|(t, &c)| {
                let r = self.reference.get(t).copied().unwrap_or(0);
                let h = self.hyp.get(t).copied().unwrap_or(0);
                (h + c).min(r) - h.min(r)
            })
            .sum()
    }

    /// ROUGE-1 F of the current hypothesis extended by `tokens`.
    fn score_with(&self, tokens: &HashMap<&'a str, usize>, len: usize) -> f64 {
        RougeScore::from_counts(
            self.overlap + self.gain(tokens),
            self.hyp_len + len,
            self.reference_len,
        )
        .f1
    }

    fn push(&mut self, tokens: &HashMap<&'a str, usize>, len: usize) {
        self.overlap += self.gain(tokens);
        self.hyp_len += len;
        for (t, &c) in tokens {
            *self.hyp.entry(t).or_insert(0) += c;
        }
    }
}

/// Greedy extractive labeling: repeatedly add the sentence that raises the
/// ROUGE-1 F of the accumulated hypothesis above the best score so far,
/// while the accumulated word count stays within `length_limit`.
///
/// The best score is kept across iterations, ties go to the lowest index and
/// already picked sentences are not rescanned.
pub fn generate_labels(doc: &Document, length_limit: usize) -> LabeledDocument {
    let bags: Vec<HashMap<&str, usize>> = doc
        .sentences
        .iter()
        .map(|s| {
            let mut bag = HashMap::new();
            for t in &s.tokens {
                *bag.entry(t.as_str()).or_insert(0) += 1;
            }
            bag
        })
        .collect();
    let mut state = UnigramState::new(
        doc.abstract_sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str)),
    );
    let mut picked = Vec::new();
    let mut is_picked = vec![false; doc.len()];
    let mut highest = 0.0;
    let mut words = 0;
    while words <= length_limit {
        let mut best = None;
        for (i, bag) in bags.iter().enumerate() {
            if is_picked[i] {
                continue;
            }
            let score = state.score_with(bag, doc.sentences[i].tokens.len());
            if score > highest {
                highest = score;
                best = Some(i);
            }
        }
        let Some(i) = best else { break };
        state.push(&bags[i], doc.sentences[i].tokens.len());
        is_picked[i] = true;
        picked.push(i);
        words += doc.sentences[i].word_count;
    }
    LabeledDocument::from_picks(doc.clone(), picked)
}

pub fn label_corpus<'a>(
    docs: impl IntoParallelIterator<Item = &'a Document>,
    length_limit: usize,
) -> Vec<LabeledDocument> {
    docs.into_par_iter()
        .map(|d| generate_labels(d, length_limit))
        .collect()
}

/// First `length_limit` body tokens.
pub fn lead_summary(doc: &Document, length_limit: usize) -> Vec<String> {
    doc.sentences
        .iter()
        .flat_map(|s| s.tokens.iter().cloned())
        .take(length_limit)
        .collect()
}

/// Labeled sentences in document order.
pub fn oracle_summary(labeled: &LabeledDocument) -> Vec<usize> {
    labeled
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == 1)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(sentences: &[&str], abstract_: &[&str]) -> Document {
        Document::from_sections("t", &[("body".to_string(), sentences.to_vec())], abstract_)
            .unwrap()
    }

    #[test]
    fn exact_match_is_picked_first() {
        let d = doc(&["the cat sat", "quantum flux"], &["the cat sat"]);
        let l = generate_labels(&d, 100);
        assert_eq!(l.picked_order, [0]);
        assert_eq!(l.labels, [1, 0]);
    }

    #[test]
    fn no_overlap_picks_nothing() {
        let d = doc(&["x y", "z"], &["a b c"]);
        let l = generate_labels(&d, 100);
        assert!(l.picked_order.is_empty());
        assert_eq!(l.labels, [0, 0]);
        assert!(oracle_summary(&l).is_empty());
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let d = doc(&["a x", "a y"], &["a"]);
        assert_eq!(generate_labels(&d, 100).picked_order, [0]);
    }

    #[test]
    fn word_limit_stops_the_loop() {
        // Each pick adds one sentence; the loop re-checks wc <= limit.
        let d = doc(&["a", "b", "c"], &["a b c"]);
        assert_eq!(generate_labels(&d, 0).picked_order, [0]);
        assert_eq!(generate_labels(&d, 1).picked_order, [0, 1]);
        assert_eq!(generate_labels(&d, 2).picked_order.len(), 3);
    }

    #[test]
    fn lead_takes_prefix() {
        let d = doc(&["a b c", "d e f"], &["a"]);
        assert_eq!(lead_summary(&d, 4), ["a", "b", "c", "d"]);
        assert_eq!(lead_summary(&d, 100).len(), 6);
    }

    #[test]
    fn oracle_summary_is_in_document_order() {
        let d = doc(&["a", "b", "c"], &["a"]);
        let l = LabeledDocument::from_picks(d, vec![2, 1]);
        assert_eq!(l.labels, [0, 1, 1]);
        assert_eq!(oracle_summary(&l), [1, 2]);
    }
}

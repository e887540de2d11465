use std::collections::HashMap;
use std::path::PathBuf;

use extsum::corpus::{
    build_vocabulary, load_corpus, load_embeddings, parse_corpus, write_records, Document,
    LoadOptions, UNK_ID,
};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn ten_line_fixture_sentence_counts() {
    let corpus = load_corpus(fixture("ten_docs.jsonl"), &LoadOptions::default()).unwrap();
    assert_eq!(corpus.len(), 10);
    assert_eq!(corpus.skipped, 0);
    // Counted by hand from the file; empty strings and empty sections drop out.
    let expected: [(&str, usize, usize); 10] = [
        ("p01", 3, 2),
        ("p02", 1, 1),
        ("p03", 4, 2),
        ("p04", 6, 3),
        ("p05", 1, 1),
        ("p06", 3, 2),
        ("p07", 4, 4),
        ("p08", 2, 1),
        ("p09", 4, 2),
        ("p10", 7, 2),
    ];
    for (doc, (id, n, sections)) in corpus.documents().zip(expected) {
        assert_eq!(doc.id, id);
        assert_eq!(doc.len(), n, "{id}");
        assert_eq!(doc.sections.len(), sections, "{id}");
        doc.validate().unwrap();
        let covered: usize = doc.sections.iter().map(|s| s.len()).sum();
        assert_eq!(covered, doc.len());
    }
}

#[test]
fn vocabulary_matches_brute_force_frequency_table() {
    let corpus = load_corpus(fixture("ten_docs.jsonl"), &LoadOptions::default()).unwrap();
    let vocab = build_vocabulary(corpus.documents(), 50);

    let mut counts: HashMap<String, i64> = HashMap::new();
    for doc in corpus.documents() {
        for s in &doc.sentences {
            for t in &s.tokens {
                *counts.entry(t.clone()).or_default() += 1;
            }
        }
    }
    let mut table: Vec<(i64, String)> = counts.into_iter().map(|(t, c)| (-c, t)).collect();
    table.sort();
    let expected: Vec<&str> = std::iter::once("<unk>")
        .chain(table.iter().take(49).map(|(_, t)| t.as_str()))
        .collect();
    assert_eq!(vocab.tokens(), expected.as_slice());
    assert_eq!(vocab.id(&table[0].1), 1, "most frequent token");

    let again = build_vocabulary(corpus.documents(), 50);
    assert_eq!(vocab, again);
}

#[test]
fn fixture_embeddings() {
    let corpus = load_corpus(fixture("ten_docs.jsonl"), &LoadOptions::default()).unwrap();
    let vocab = build_vocabulary(corpus.documents(), 1000);
    let (table, coverage) = load_embeddings::<f64>(fixture("tiny_vectors.txt"), &vocab, 3).unwrap();
    assert_eq!(table.rows(), vocab.len());
    assert_eq!(table.row(vocab.id("long")), [0.3, 0.3, 0.3]);
    assert_eq!(table.row(UNK_ID), [0.0, 0.0, 0.0]);
    assert_eq!(table.row(vocab.id("sections")), [0.0, 0.0, 0.0]);
    assert!((coverage - 4.0 / (vocab.len() - 1) as f64).abs() < 1e-15);

    assert!(load_embeddings::<f64>(fixture("tiny_vectors.txt"), &vocab, 4).is_err());
    assert!(load_embeddings::<f64>(fixture("missing.txt"), &vocab, 3).is_err());
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_corpus(fixture("nope.jsonl"), &LoadOptions::default()).unwrap_err();
    assert!(err.to_string().contains("nope.jsonl"));
}

fn raw_sentence() -> impl Strategy<Value = String> {
    prop::collection::vec("[A-Za-z]{1,6}[.,;]?", 0..5).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn serialize_and_reload_preserves_tokens_and_spans(
        sections in prop::collection::vec(prop::collection::vec(raw_sentence(), 0..4), 1..5),
        abstract_ in prop::collection::vec(raw_sentence(), 1..3),
    ) {
        let named: Vec<(String, Vec<String>)> = sections
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("s{i}"), s.clone()))
            .collect();
        let Some(doc) = Document::from_sections("p", &named, &abstract_) else {
            return Ok(());
        };
        doc.validate().unwrap();
        let covered: usize = doc.sections.iter().map(|s| s.len()).sum();
        prop_assert_eq!(covered, doc.len());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        write_records(&path, [&doc.to_record(None)]).unwrap();
        let back = load_corpus(&path, &LoadOptions::default()).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back.entries[0].document, &doc);

        let text = std::fs::read_to_string(&path).unwrap();
        let again = parse_corpus(&text, &LoadOptions::default()).unwrap();
        prop_assert_eq!(&again.entries[0].document, &doc);
    }
}

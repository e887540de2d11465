//! Corpus ingestion: section-structured JSON-lines documents, tokenization,
//! vocabulary construction and pretrained word vectors.
//!
//! One document per line:
//!
//! ```json
//! {"id":"d1","sections":[["A b."],["C d.","E f."]],"section_names":["intro","body"],"abstract":["A b."]}
//! ```
//!
//! Labeled corpora carry two extra fields, `labels` (0/1 per sentence) and
//! `picked_order` (sentence indices in greedy pick order).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const UNK_TOKEN: &str = "<unk>";
pub const UNK_ID: usize = 0;
pub const DEFAULT_VOCAB_CAP: usize = 50_000;
pub const DEFAULT_MAX_SENTENCES: usize = 500;

/// A pre-split sentence and its normalized tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub raw: String,
    pub tokens: Vec<String>,
    /// Whitespace-delimited words in `raw`, counted before token filtering.
    pub word_count: usize,
}

/// Contiguous, inclusive range of sentence indices forming one topic segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionSpan {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

impl SectionSpan {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub sections: Vec<SectionSpan>,
    pub sentences: Vec<Sentence>,
    pub abstract_sentences: Vec<Sentence>,
}

impl Document {
    /// Builds a document from already-split sections, dropping empty
    /// sentences and then empty sections. Returns `None` when nothing is left
    /// or the abstract is empty.
    pub fn from_sections<S: AsRef<str>>(
        id: impl Into<String>,
        sections: &[(String, Vec<S>)],
        abstract_sentences: &[S],
    ) -> Option<Document> {
        let mut doc = Document::from_body(id, sections)?;
        doc.abstract_sentences = abstract_sentences
            .iter()
            .map(|s| tokenize(s.as_ref()))
            .filter(|s| s.word_count > 0)
            .collect();
        (!doc.abstract_sentences.is_empty()).then_some(doc)
    }

    /// Like [`Document::from_sections`] without an abstract, for documents
    /// that are only scored.
    pub fn from_body<S: AsRef<str>>(
        id: impl Into<String>,
        sections: &[(String, Vec<S>)],
    ) -> Option<Document> {
        let mut spans = Vec::new();
        let mut sentences = Vec::new();
        for (name, raw) in sections {
            let start = sentences.len();
            sentences.extend(
                raw.iter()
                    .map(|s| tokenize(s.as_ref()))
                    .filter(|s| s.word_count > 0),
            );
            if sentences.len() > start {
                spans.push(SectionSpan {
                    name: name.clone(),
                    start,
                    end: sentences.len() - 1,
                });
            }
        }
        if sentences.is_empty() {
            return None;
        }
        Some(Document {
            id: id.into(),
            sections: spans,
            sentences,
            abstract_sentences: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Total whitespace word count of the body.
    pub fn word_count(&self) -> usize {
        self.sentences.iter().map(|s| s.word_count).sum()
    }

    /// Index of the section containing sentence `i`.
    pub fn section_of(&self, i: usize) -> usize {
        self.sections
            .partition_point(|span| span.end < i)
            .min(self.sections.len().saturating_sub(1))
    }

    /// Reference abstract as one token sequence.
    pub fn reference_tokens(&self) -> Vec<String> {
        self.abstract_sentences
            .iter()
            .flat_map(|s| s.tokens.iter().cloned())
            .collect()
    }

    /// Concatenated tokens of the given sentences, in the order given.
    pub fn tokens_of(&self, indices: &[usize]) -> Vec<String> {
        indices
            .iter()
            .flat_map(|&i| self.sentences[i].tokens.iter().cloned())
            .collect()
    }

    /// Keeps the first `max` sentences, cutting sections at the boundary.
    pub fn truncate(&mut self, max: usize) {
        if self.sentences.len() <= max {
            return;
        }
        self.sentences.truncate(max);
        self.sections.retain(|s| s.start < max);
        if let Some(last) = self.sections.last_mut() {
            last.end = last.end.min(max - 1);
        }
    }

    /// Checks the section invariants: contiguous, non-empty, covering every sentence.
    pub fn validate(&self) -> Result<()> {
        let mut next = 0;
        for span in &self.sections {
            if span.start != next || span.end < span.start {
                return Err(Error::Shape(format!(
                    "document {:?}: section {:?} does not continue at sentence {next}",
                    self.id, span.name
                )));
            }
            next = span.end + 1;
        }
        if next != self.sentences.len() || self.sentences.is_empty() {
            return Err(Error::EmptyDocument(self.id.clone()));
        }
        Ok(())
    }

    /// Serializes to one corpus line, optionally with oracle labels.
    pub fn to_record(&self, labels: Option<(&[u8], &[usize])>) -> CorpusRecord {
        CorpusRecord {
            id: self.id.clone(),
            sections: self
                .sections
                .iter()
                .map(|s| {
                    self.sentences[s.start..=s.end]
                        .iter()
                        .map(|x| x.raw.clone())
                        .collect()
                })
                .collect(),
            section_names: self.sections.iter().map(|s| s.name.clone()).collect(),
            abstract_sentences: self
                .abstract_sentences
                .iter()
                .map(|s| s.raw.clone())
                .collect(),
            labels: labels.map(|(l, _)| l.to_vec()),
            picked_order: labels.map(|(_, p)| p.to_vec()),
        }
    }
}

/// Lowercases, splits on whitespace and strips non-alphanumeric characters
/// from both ends of every word.
pub fn tokenize(raw: &str) -> Sentence {
    let mut word_count = 0;
    let tokens = raw
        .split_whitespace()
        .inspect(|_| word_count += 1)
        .map(|w| {
            w.to_lowercase()
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_string()
        })
        .filter(|t| !t.is_empty())
        .collect();
    Sentence {
        raw: raw.to_string(),
        tokens,
        word_count,
    }
}

/// On-disk shape of one corpus line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub sections: Vec<Vec<String>>,
    pub section_names: Vec<String>,
    #[serde(rename = "abstract")]
    pub abstract_sentences: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picked_order: Option<Vec<usize>>,
}

/// Oracle annotation carried by a labeled corpus line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredLabels {
    pub labels: Vec<u8>,
    pub picked_order: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub document: Document,
    pub labels: Option<StoredLabels>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
    /// Lines skipped for having no sentences or an empty abstract.
    pub skipped: usize,
}

impl Corpus {
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.entries.iter().map(|e| &e.document)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Documents longer than this are truncated from the end.
    pub max_sentences: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            max_sentences: DEFAULT_MAX_SENTENCES,
        }
    }
}

/// Parses one corpus line. `line_no` is 1-based and only used in errors.
pub fn parse_record(
    record: CorpusRecord,
    line_no: usize,
    opts: &LoadOptions,
) -> Result<Option<CorpusEntry>> {
    if record.sections.len() != record.section_names.len() {
        return Err(Error::Schema {
            line: line_no,
            message: format!(
                "{} sections but {} section_names",
                record.sections.len(),
                record.section_names.len()
            ),
        });
    }
    let sections: Vec<(String, Vec<String>)> = record
        .section_names
        .into_iter()
        .zip(record.sections)
        .collect();
    let Some(mut document) =
        Document::from_sections(record.id, &sections, &record.abstract_sentences)
    else {
        return Ok(None);
    };
    let n_before = document.len();
    document.truncate(opts.max_sentences.max(1));
    let labels = match (record.labels, record.picked_order) {
        (None, None) => None,
        (Some(mut labels), picked) => {
            if labels.len() != n_before {
                return Err(Error::Schema {
                    line: line_no,
                    message: format!("{} labels for {} sentences", labels.len(), n_before),
                });
            }
            if labels.iter().any(|&l| l > 1) {
                return Err(Error::Schema {
                    line: line_no,
                    message: "labels must be 0 or 1".into(),
                });
            }
            labels.truncate(document.len());
            let picked_order = match picked {
                Some(p) => p.into_iter().filter(|&i| i < document.len()).collect(),
                None => (0..labels.len()).filter(|&i| labels[i] == 1).collect(),
            };
            Some(StoredLabels {
                labels,
                picked_order,
            })
        }
        (None, Some(_)) => {
            return Err(Error::Schema {
                line: line_no,
                message: "picked_order present without labels".into(),
            })
        }
    };
    Ok(Some(CorpusEntry { document, labels }))
}

/// Loads a JSON-lines corpus. Blank lines are ignored.
pub fn load_corpus(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Corpus> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, opts)
}

pub fn parse_corpus(text: &str, opts: &LoadOptions) -> Result<Corpus> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let parsed: Vec<Option<CorpusEntry>> = lines
        .par_iter()
        .map(|&(line_no, line)| {
            let record: CorpusRecord =
                serde_json::from_str(line).map_err(|source| Error::Json {
                    line: line_no,
                    source,
                })?;
            parse_record(record, line_no, opts)
        })
        .collect::<Result<_>>()?;
    let skipped = parsed.iter().filter(|e| e.is_none()).count();
    Ok(Corpus {
        entries: parsed.into_iter().flatten().collect(),
        skipped,
    })
}

/// Writes records as JSON lines.
pub fn write_records<'a>(
    path: impl AsRef<Path>,
    records: impl IntoIterator<Item = &'a CorpusRecord>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for r in records {
        let line = serde_json::to_string(r).expect("corpus record serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Token ↔ id map with `<unk>` at id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocabulary {
    /// Builds from an id-ordered token list whose first entry is `<unk>`.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocabulary> {
        if tokens.first().map(String::as_str) != Some(UNK_TOKEN) {
            return Err(Error::Config("vocabulary must start with <unk>".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary entry {t:?}")));
            }
        }
        Ok(Vocabulary { index, tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Id of `token`, or [`UNK_ID`].
    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Keeps the `cap - 1` most frequent body tokens (ties broken
/// lexicographically) after `<unk>`.
pub fn build_vocabulary<'a>(
    docs: impl IntoIterator<Item = &'a Document>,
    cap: usize,
) -> Vocabulary {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        for s in &doc.sentences {
            for t in &s.tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let tokens = std::iter::once(UNK_TOKEN.to_string())
        .chain(
            ranked
                .into_iter()
                .take(cap.max(1) - 1)
                .map(|(t, _)| t.to_string()),
        )
        .collect();
    Vocabulary::from_tokens(tokens).expect("ranked tokens are unique")
}

/// Row-major `(vocab_size, dim)` matrix of word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        EmbeddingTable {
            dim,
            data: vec![T::zero(); rows * dim],
        }
    }

    pub fn from_data(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} values do not form rows of width {dim}",
                data.len()
            )));
        }
        Ok(EmbeddingTable { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, id: usize) -> &[T] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn row_mut(&mut self, id: usize) -> &mut [T] {
        &mut self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }
}

/// Reads `token v1 ... v_dim` lines. Vocabulary tokens missing from the file
/// keep the zero vector. Returns the table and the fraction of non-UNK
/// vocabulary entries that were found.
pub fn load_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    dim: usize,
) -> Result<(EmbeddingTable<T>, f64)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file), vocab, dim).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_embeddings<T: Scalar>(
    reader: impl BufRead,
    vocab: &Vocabulary,
    dim: usize,
) -> Result<(EmbeddingTable<T>, f64)> {
    let mut table = EmbeddingTable::zeros(vocab.len(), dim);
    let mut seen = vec![false; vocab.len()];
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<embeddings>", e))?;
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            return Err(Error::EmbeddingDimension {
                token: token.to_string(),
                expected: dim,
                found: values.len(),
            });
        }
        let Some(id) = vocab.get(token).filter(|&id| id != UNK_ID && !seen[id]) else {
            continue;
        };
        let row = table.row_mut(id);
        for (slot, v) in row.iter_mut().zip(&values) {
            let x: f64 = v.parse().map_err(|_| Error::EmbeddingValue {
                line: i + 1,
                value: v.to_string(),
            })?;
            *slot = T::lit(x);
        }
        seen[id] = true;
    }
    let known = vocab.len() - 1;
    let found = seen.iter().filter(|&&s| s).count();
    let coverage = if known == 0 {
        0.0
    } else {
        found as f64 / known as f64
    };
    Ok((table, coverage))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &Sentence) -> Vec<&str> {
        s.tokens.iter().map(String::as_str).collect()
    }

    #[test]
    fn tokenize_rules() {
        let s = tokenize("The cat, sat.");
        assert_eq!(toks(&s), ["the", "cat", "sat"]);
        assert_eq!(s.word_count, 3);

        let s = tokenize("");
        assert!(s.tokens.is_empty());
        assert_eq!(s.word_count, 0);

        let s = tokenize("  A  B ");
        assert_eq!(toks(&s), ["a", "b"]);
        assert_eq!(s.word_count, 2);

        let s = tokenize("-- ( x )");
        assert_eq!(toks(&s), ["x"]);
        assert_eq!(s.word_count, 4);
    }

    #[test]
    fn worked_example_line() {
        let line = r#"{"id":"d1","sections":[["A b."],["C d.","E f."]],"section_names":["intro","body"],"abstract":["A b."]}"#;
        let corpus = parse_corpus(line, &LoadOptions::default()).unwrap();
        assert_eq!(corpus.skipped, 0);
        let doc = &corpus.entries[0].document;
        assert_eq!(doc.len(), 3);
        let spans: Vec<(usize, usize)> = doc.sections.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(spans, [(0, 0), (1, 2)]);
        assert_eq!(doc.section_of(0), 0);
        assert_eq!(doc.section_of(2), 1);
        doc.validate().unwrap();
    }

    #[test]
    fn empty_document_is_skipped() {
        let text = concat!(
            r#"{"id":"e","sections":[[]],"section_names":["x"],"abstract":["a"]}"#,
            "\n",
            r#"{"id":"f","sections":[["a"]],"section_names":["x"],"abstract":[]}"#,
        );
        let corpus = parse_corpus(text, &LoadOptions::default()).unwrap();
        assert_eq!(corpus.len(), 0);
        assert_eq!(corpus.skipped, 2);
    }

    #[test]
    fn empty_sections_are_dropped() {
        let line = r#"{"id":"d","sections":[["a"],[""],["b c"]],"section_names":["x","y","z"],"abstract":["a"]}"#;
        let doc = parse_corpus(line, &LoadOptions::default()).unwrap().entries[0]
            .document
            .clone();
        let names: Vec<&str> = doc.sections.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["x", "z"]);
        assert_eq!((doc.sections[1].start, doc.sections[1].end), (1, 1));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "\n{\"id\":\"a\",\"sections\":[[\"x\"]],\"section_names\":[\"s\"],\"abstract\":[\"x\"]}\n{oops";
        match parse_corpus(text, &LoadOptions::default()) {
            Err(Error::Json { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn section_name_mismatch_is_an_error() {
        let line = r#"{"id":"d","sections":[["a"],["b"]],"section_names":["x"],"abstract":["a"]}"#;
        assert!(matches!(
            parse_corpus(line, &LoadOptions::default()),
            Err(Error::Schema { line: 1, .. })
        ));
    }

    #[test]
    fn truncation_cuts_sections() {
        let line = r#"{"id":"d","sections":[["a","b"],["c","d","e"]],"section_names":["x","y"],"abstract":["a"],"labels":[0,1,0,1,1],"picked_order":[4,1,3]}"#;
        let opts = LoadOptions { max_sentences: 3 };
        let entry = &parse_corpus(line, &opts).unwrap().entries[0];
        assert_eq!(entry.document.len(), 3);
        assert_eq!(entry.document.sections[1].end, 2);
        entry.document.validate().unwrap();
        let labels = entry.labels.as_ref().unwrap();
        assert_eq!(labels.labels, [0, 1, 0]);
        assert_eq!(labels.picked_order, [1]);
    }

    #[test]
    fn vocabulary_ranking() {
        let line =
            r#"{"id":"d","sections":[["a a a b b c"]],"section_names":["x"],"abstract":["a"]}"#;
        let corpus = parse_corpus(line, &LoadOptions::default()).unwrap();
        let vocab = build_vocabulary(corpus.documents(), 3);
        assert_eq!(vocab.tokens(), ["<unk>", "a", "b"]);
        assert_eq!(vocab.id("c"), UNK_ID);

        let vocab = build_vocabulary(corpus.documents(), 1);
        assert_eq!(vocab.tokens(), ["<unk>"]);
    }

    #[test]
    fn vocabulary_ties_are_lexicographic() {
        let line =
            r#"{"id":"d","sections":[["z y x y z x w"]],"section_names":["s"],"abstract":["a"]}"#;
        let corpus = parse_corpus(line, &LoadOptions::default()).unwrap();
        let vocab = build_vocabulary(corpus.documents(), 10);
        assert_eq!(vocab.tokens(), ["<unk>", "x", "y", "z", "w"]);
    }

    fn vocab(tokens: &[&str]) -> Vocabulary {
        Vocabulary::from_tokens(tokens.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn embeddings_copy_and_oov() {
        let v = vocab(&["<unk>", "cat"]);
        let (table, coverage) = read_embeddings::<f64>("cat 1.0 0.0\n".as_bytes(), &v, 2).unwrap();
        assert_eq!(table.data(), [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(coverage, 1.0);

        let v = vocab(&["<unk>", "cat", "dog"]);
        let (table, coverage) = read_embeddings::<f64>("cat 1.0 0.0\n".as_bytes(), &v, 2).unwrap();
        assert_eq!(table.row(2), [0.0, 0.0]);
        assert_eq!(coverage, 0.5);
    }

    #[test]
    fn embedding_dimension_mismatch_names_token() {
        let v = vocab(&["<unk>", "cat"]);
        let err = read_embeddings::<f64>("cat 1.0\n".as_bytes(), &v, 2).unwrap_err();
        assert!(err.to_string().contains("\"cat\""), "{err}");
    }

    #[test]
    fn unk_row_stays_zero_even_if_listed() {
        let v = vocab(&["<unk>", "a"]);
        let (table, _) = read_embeddings::<f32>("<unk> 5 5\na 1 2\n".as_bytes(), &v, 2).unwrap();
        assert_eq!(table.row(UNK_ID), [0.0, 0.0]);
        assert_eq!(table.row(1), [1.0, 2.0]);
    }
}

//! Sentence scorer: averaged word vectors, a bidirectional GRU over
//! sentences, and a decoder that combines each sentence representation with
//! the document representation (global context) and its section
//! representation (local context).
//!
//! With forward states `hf` and backward states `hb` (both indexed in
//! document order, zero outside `[0, n)`), a section spanning
//! `[start, end]` is represented as
//! `(hf[end] - hf[start - 1]) : (hb[start] - hb[end + 1])`.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, EmbeddingTable, Sentence, Vocabulary};
use crate::diff::{
    dropout, read_checkpoint, run_bigru, write_checkpoint, Gradients, Gru, ParamId, ParamSet, Tape,
    Tensor, Var,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Attention scores whose sum is smaller than this in magnitude fall back to
/// equal weights.
pub const ATTENTION_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    Concat,
    Attentive,
}

impl FromStr for Decoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "concat" | "concatenation" => Ok(Decoder::Concat),
            "attentive" | "attention" => Ok(Decoder::Attentive),
            other => Err(Error::Config(format!("unknown decoder {other:?}"))),
        }
    }
}

/// Named context ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ablation {
    /// Sentence representation only.
    #[serde(rename = "bsl")]
    Baseline,
    #[serde(rename = "bsl+l")]
    Local,
    #[serde(rename = "bsl+g")]
    Global,
    #[serde(rename = "bsl+l+g")]
    LocalGlobal,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::Baseline,
        Ablation::Local,
        Ablation::Global,
        Ablation::LocalGlobal,
    ];

    pub fn flags(self) -> (bool, bool) {
        match self {
            Ablation::Baseline => (false, false),
            Ablation::Local => (true, false),
            Ablation::Global => (false, true),
            Ablation::LocalGlobal => (true, true),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Baseline => "bsl",
            Ablation::Local => "bsl+l",
            Ablation::Global => "bsl+g",
            Ablation::LocalGlobal => "bsl+l+g",
        }
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown ablation {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub d_emb: usize,
    pub d_hid: usize,
    /// Hidden width of the scoring MLP.
    pub d_mlp: usize,
    /// Attention projection width; `None` means `2 * d_hid`.
    pub d_attn: Option<usize>,
    pub decoder: Decoder,
    pub use_local: bool,
    pub use_global: bool,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_emb: 300,
            d_hid: 300,
            d_mlp: 100,
            d_attn: None,
            decoder: Decoder::Attentive,
            use_local: true,
            use_global: true,
            dropout: 0.3,
        }
    }
}

impl ModelConfig {
    /// Concatenation decoder with the context flags of `ablation`.
    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        let (local, global) = ablation.flags();
        self.use_local = local;
        self.use_global = global;
        if ablation != Ablation::LocalGlobal {
            self.decoder = Decoder::Concat;
        }
        self
    }

    pub fn attention_width(&self) -> usize {
        self.d_attn.unwrap_or(2 * self.d_hid)
    }

    /// Width of the vector fed to the scoring MLP.
    pub fn input_width(&self) -> usize {
        match self.decoder {
            Decoder::Concat => {
                2 * self.d_hid * (1 + self.use_local as usize + self.use_global as usize)
            }
            Decoder::Attentive => 4 * self.d_hid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_emb == 0 || self.d_hid == 0 || self.d_mlp == 0 || self.attention_width() == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.decoder == Decoder::Attentive && !(self.use_local && self.use_global) {
            return Err(Error::Config(
                "the attentive decoder needs both local and global context".into(),
            ));
        }
        Ok(())
    }
}

/// Vocabulary plus its embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddings<T> {
    pub vocab: Vocabulary,
    pub table: EmbeddingTable<T>,
}

/// Sentence vectors and section spans of one document, ready for the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDocument<T> {
    pub sentences: Vec<Vec<T>>,
    /// Inclusive `(start, end)` per section.
    pub sections: Vec<(usize, usize)>,
    /// Section index of every sentence.
    pub section_of: Vec<usize>,
}

impl<T: Scalar> WordEmbeddings<T> {
    pub fn new(vocab: Vocabulary, table: EmbeddingTable<T>) -> Result<Self> {
        if vocab.len() != table.rows() {
            return Err(Error::Shape(format!(
                "{} vocabulary entries but {} embedding rows",
                vocab.len(),
                table.rows()
            )));
        }
        Ok(WordEmbeddings { vocab, table })
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    /// Mean of the token vectors (out-of-vocabulary tokens count as zero
    /// rows); the zero vector for a sentence without tokens.
    pub fn encode_sentence(&self, sentence: &Sentence) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        if sentence.tokens.is_empty() {
            return out;
        }
        for t in &sentence.tokens {
            for (o, &x) in out.iter_mut().zip(self.table.row(self.vocab.id(t))) {
                *o += x;
            }
        }
        let n = T::lit(sentence.tokens.len() as f64);
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    pub fn embed(&self, doc: &Document) -> EmbeddedDocument<T> {
        let mut section_of = vec![0; doc.len()];
        for (t, s) in doc.sections.iter().enumerate() {
            section_of[s.start..=s.end].fill(t);
        }
        EmbeddedDocument {
            sentences: doc
                .sentences
                .iter()
                .map(|s| self.encode_sentence(s))
                .collect(),
            sections: doc.sections.iter().map(|s| (s.start, s.end)).collect(),
            section_of,
        }
    }
}

/// Trainable tensors of the scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelIds {
    pub fwd: Gru,
    pub bwd: Gru,
    /// `(v, W_a)` for the attentive decoder.
    pub attention: Option<(ParamId, ParamId)>,
    pub w_mlp: ParamId,
    pub b_mlp: ParamId,
    pub w_out: ParamId,
    pub b_out: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub params: ParamSet<T>,
    pub ids: ModelIds,
}

/// Values produced by the document encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentEncoding<T> {
    pub forward: Vec<Vec<T>>,
    pub backward: Vec<Vec<T>>,
    /// `hf[i] : hb[i]` per sentence.
    pub sentences: Vec<Vec<T>>,
    /// `hf[n-1] : hb[0]`.
    pub document: Vec<T>,
    /// One representation per section.
    pub segments: Vec<Vec<T>>,
    pub section_of: Vec<usize>,
}

/// Tape handles for an encoded document.
#[derive(Debug, Clone)]
pub struct EncodingVars {
    pub forward: Vec<Var>,
    pub backward: Vec<Var>,
    pub sentences: Vec<Var>,
    pub document: Var,
    pub segments: Vec<Var>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ForwardOptions {
    /// Enables dropout.
    pub training: bool,
    /// Replaces the document representation by zeros at the decoder input.
    pub zero_global: bool,
}

impl ForwardOptions {
    pub const INFERENCE: ForwardOptions = ForwardOptions {
        training: false,
        zero_global: false,
    };
    pub const TRAINING: ForwardOptions = ForwardOptions {
        training: true,
        zero_global: false,
    };
}

/// Attention weights for one sentence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionWeights<T> {
    pub document: T,
    pub local: T,
    /// The score sum was within [`ATTENTION_GUARD`] of zero.
    pub fallback: bool,
}

/// Output of [`Model::forward`].
pub struct DocumentGraph<T> {
    pub encoding: EncodingVars,
    pub inputs: Vec<Var>,
    pub logits: Vec<Var>,
    pub attention: Vec<Option<AttentionWeights<T>>>,
}

impl<T> DocumentGraph<T> {
    pub fn attention_fallbacks(&self) -> usize {
        self.attention
            .iter()
            .filter(|a| a.as_ref().is_some_and(|a| a.fallback))
            .count()
    }
}

/// Section representations from precomputed states; the states are read only
/// at `start - 1`, `end`, `start` and `end + 1`.
pub fn segment_representations<T: Scalar>(
    forward: &[Vec<T>],
    backward: &[Vec<T>],
    sections: &[(usize, usize)],
) -> Vec<Vec<T>> {
    let n = forward.len();
    let zero = vec![T::zero(); forward.first().map_or(0, Vec::len)];
    let pad = |states: &'_ [Vec<T>], i: isize| -> Vec<T> {
        if i < 0 || i as usize >= n {
            zero.clone()
        } else {
            states[i as usize].clone()
        }
    };
    sections
        .iter()
        .map(|&(start, end)| {
            let prev = pad(forward, start as isize - 1);
            let next = pad(backward, end as isize + 1);
            forward[end]
                .iter()
                .zip(&prev)
                .map(|(&a, &b)| a - b)
                .chain(backward[start].iter().zip(&next).map(|(&a, &b)| a - b))
                .collect()
        })
        .collect()
}

impl<T: Scalar> Model<T> {
    pub fn new(config: ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut params = ParamSet::new();
        let h = config.d_hid;
        let fwd = Gru::register(&mut params, "gru_fwd", config.d_emb, h, rng);
        let bwd = Gru::register(&mut params, "gru_bwd", config.d_emb, h, rng);
        let attention = (config.decoder == Decoder::Attentive).then(|| {
            let d_a = config.attention_width();
            let v = params.add(
                "attn.v",
                Tensor::uniform(&[d_a], 1.0 / (d_a as f64).sqrt(), rng),
            );
            let w_a = params.add(
                "attn.w_a",
                Tensor::uniform(&[d_a, 4 * h], 1.0 / ((4 * h) as f64).sqrt(), rng),
            );
            (v, w_a)
        });
        let width = config.input_width();
        let w_mlp = params.add(
            "mlp.w",
            Tensor::uniform(&[config.d_mlp, width], 1.0 / (width as f64).sqrt(), rng),
        );
        let b_mlp = params.add("mlp.b", Tensor::zeros(&[config.d_mlp]));
        let w_out = params.add(
            "out.w",
            Tensor::uniform(&[1, config.d_mlp], 1.0 / (config.d_mlp as f64).sqrt(), rng),
        );
        let b_out = params.add("out.b", Tensor::zeros(&[1]));
        Ok(Model {
            config,
            params,
            ids: ModelIds {
                fwd,
                bwd,
                attention,
                w_mlp,
                b_mlp,
                w_out,
                b_out,
            },
        })
    }

    fn check_document(&self, doc: &EmbeddedDocument<T>) -> Result<()> {
        if doc.sentences.is_empty() {
            return Err(Error::EmptyDocument(String::new()));
        }
        if let Some(bad) = doc.sentences.iter().find(|s| s.len() != self.config.d_emb) {
            return Err(Error::Shape(format!(
                "sentence embedding has width {}, model expects {}",
                bad.len(),
                self.config.d_emb
            )));
        }
        let mut next = 0;
        for &(start, end) in &doc.sections {
            if start != next || end < start {
                return Err(Error::Shape(format!(
                    "section ({start}, {end}) is not contiguous"
                )));
            }
            next = end + 1;
        }
        if next != doc.sentences.len() {
            return Err(Error::Shape("sections do not cover the document".into()));
        }
        Ok(())
    }

    /// Records the document encoder on `tape`.
    pub fn encode_on(&self, tape: &mut Tape<'_, T>, doc: &EmbeddedDocument<T>) -> EncodingVars {
        let inputs: Vec<Var> = doc
            .sentences
            .iter()
            .map(|s| tape.input(s.clone()))
            .collect();
        let (hf, hb) = run_bigru(tape, &inputs, &self.ids.fwd, &self.ids.bwd);
        let n = inputs.len();
        let sentences = (0..n).map(|i| tape.concat(&[hf[i], hb[i]])).collect();
        let document = tape.concat(&[hf[n - 1], hb[0]]);
        let zero = tape.input(vec![T::zero(); self.config.d_hid]);
        let segments = doc
            .sections
            .iter()
            .map(|&(start, end)| {
                let before = if start == 0 { zero } else { hf[start - 1] };
                let after = if end + 1 >= n { zero } else { hb[end + 1] };
                let f = tape.sub(hf[end], before);
                let b = tape.sub(hb[start], after);
                tape.concat(&[f, b])
            })
            .collect();
        EncodingVars {
            forward: hf,
            backward: hb,
            sentences,
            document,
            segments,
        }
    }

    /// Runs the document encoder and returns plain values.
    pub fn encode_document(&self, doc: &EmbeddedDocument<T>) -> Result<DocumentEncoding<T>> {
        self.check_document(doc)?;
        let mut tape = Tape::new(&self.params);
        let enc = self.encode_on(&mut tape, doc);
        let read = |vs: &[Var]| vs.iter().map(|&v| tape.value(v).to_vec()).collect();
        Ok(DocumentEncoding {
            forward: read(&enc.forward),
            backward: read(&enc.backward),
            sentences: read(&enc.sentences),
            document: tape.value(enc.document).to_vec(),
            segments: read(&enc.segments),
            section_of: doc.section_of.clone(),
        })
    }

    /// Concatenation decoder input `(d : l_t : sr_i)` with disabled parts left out.
    fn concat_on(&self, tape: &mut Tape<'_, T>, sr: Var, document: Var, local: Var) -> Var {
        let mut parts = Vec::with_capacity(3);
        if self.config.use_global {
            parts.push(document);
        }
        if self.config.use_local {
            parts.push(local);
        }
        parts.push(sr);
        tape.concat(&parts)
    }

    /// Attentive decoder input `(sr_i : context_i)`.
    fn attentive_on(
        &self,
        tape: &mut Tape<'_, T>,
        sr: Var,
        document: Var,
        local: Var,
    ) -> (Var, AttentionWeights<T>) {
        let (v_id, wa_id) = self
            .ids
            .attention
            .expect("attentive decoder has attention parameters");
        let v = tape.param(v_id);
        let w_a = tape.param(wa_id);
        let score = |tape: &mut Tape<'_, T>, context: Var| {
            let joined = tape.concat(&[context, sr]);
            let projected = tape.matvec(w_a, joined);
            let act = tape.tanh(projected);
            tape.dot(v, act)
        };
        let score_d = score(tape, document);
        let score_l = score(tape, local);
        let total = tape.sum(&[score_d, score_l]);
        let (weight_d, weight_l, fallback) = if tape.scalar(total).abs() < T::lit(ATTENTION_GUARD) {
            let half = tape.input(vec![T::lit(0.5)]);
            (half, half, true)
        } else {
            (tape.div(score_d, total), tape.div(score_l, total), false)
        };
        let weights = AttentionWeights {
            document: tape.scalar(weight_d),
            local: tape.scalar(weight_l),
            fallback,
        };
        let a = tape.scale(document, weight_d);
        let b = tape.scale(local, weight_l);
        let context = tape.add(a, b);
        (tape.concat(&[sr, context]), weights)
    }

    /// MLP head; returns the logit.
    fn head_on(
        &self,
        tape: &mut Tape<'_, T>,
        input: Var,
        training: bool,
        rng: &mut impl Rng,
    ) -> Var {
        let w = tape.param(self.ids.w_mlp);
        let b = tape.param(self.ids.b_mlp);
        let hidden = tape.affine(w, input, b);
        let hidden = tape.relu(hidden);
        let hidden = dropout(tape, hidden, self.config.dropout, training, rng);
        let w = tape.param(self.ids.w_out);
        let b = tape.param(self.ids.b_out);
        tape.affine(w, hidden, b)
    }

    /// Records the full scorer for one document. Sentence logits are
    /// independent of one another.
    pub fn forward(
        &self,
        tape: &mut Tape<'_, T>,
        doc: &EmbeddedDocument<T>,
        opts: ForwardOptions,
        rng: &mut impl Rng,
    ) -> Result<DocumentGraph<T>> {
        self.check_document(doc)?;
        let encoding = self.encode_on(tape, doc);
        let document = if opts.zero_global {
            tape.input(vec![T::zero(); 2 * self.config.d_hid])
        } else {
            encoding.document
        };
        let n = doc.sentences.len();
        let mut inputs = Vec::with_capacity(n);
        let mut logits = Vec::with_capacity(n);
        let mut attention = Vec::with_capacity(n);
        for i in 0..n {
            let sr = encoding.sentences[i];
            let local = encoding.segments[doc.section_of[i]];
            let input = match self.config.decoder {
                Decoder::Concat => {
                    attention.push(None);
                    self.concat_on(tape, sr, document, local)
                }
                Decoder::Attentive => {
                    let (input, w) = self.attentive_on(tape, sr, document, local);
                    attention.push(Some(w));
                    input
                }
            };
            inputs.push(input);
            logits.push(self.head_on(tape, input, opts.training, rng));
        }
        Ok(DocumentGraph {
            encoding,
            inputs,
            logits,
            attention,
        })
    }

    /// Per-sentence selection probabilities.
    pub fn score_sentences(
        &self,
        doc: &EmbeddedDocument<T>,
        opts: ForwardOptions,
        rng: &mut impl Rng,
    ) -> Result<Vec<T>> {
        let mut tape = Tape::new(&self.params);
        let graph = self.forward(&mut tape, doc, opts, rng)?;
        Ok(graph
            .logits
            .iter()
            .map(|&l| {
                let p = tape.sigmoid(l);
                tape.scalar(p)
            })
            .collect())
    }

    /// Inference-mode probabilities (no dropout, deterministic).
    pub fn predict(&self, doc: &EmbeddedDocument<T>) -> Result<Vec<T>> {
        self.score_sentences(doc, ForwardOptions::INFERENCE, &mut NoRng)
    }

    /// Like [`Model::predict`] with `zero_global` taken from `opts`.
    pub fn predict_with(&self, doc: &EmbeddedDocument<T>, opts: ForwardOptions) -> Result<Vec<T>> {
        let opts = ForwardOptions {
            training: false,
            ..opts
        };
        self.score_sentences(doc, opts, &mut NoRng)
    }

    /// Concatenation decoder input for sentence `i`.
    pub fn decode_concat(&self, enc: &DocumentEncoding<T>, i: usize) -> Vec<T> {
        let mut tape = Tape::new(&self.params);
        let sr = tape.input(enc.sentences[i].clone());
        let d = tape.input(enc.document.clone());
        let l = tape.input(enc.segments[enc.section_of[i]].clone());
        let out = self.concat_on(&mut tape, sr, d, l);
        tape.value(out).to_vec()
    }

    /// Attentive decoder input for sentence `i`, with its weights.
    pub fn decode_attentive(
        &self,
        enc: &DocumentEncoding<T>,
        i: usize,
    ) -> Result<(Vec<T>, AttentionWeights<T>)> {
        if self.ids.attention.is_none() {
            return Err(Error::Config("model has no attention parameters".into()));
        }
        let mut tape = Tape::new(&self.params);
        let sr = tape.input(enc.sentences[i].clone());
        let d = tape.input(enc.document.clone());
        let l = tape.input(enc.segments[enc.section_of[i]].clone());
        let (out, w) = self.attentive_on(&mut tape, sr, d, l);
        Ok((tape.value(out).to_vec(), w))
    }

    /// Inference-mode probability for one decoder input.
    pub fn probability(&self, input: &[T]) -> T {
        let mut tape = Tape::new(&self.params);
        let x = tape.input(input.to_vec());
        let logit = self.head_on(&mut tape, x, false, &mut NoRng);
        let p = tape.sigmoid(logit);
        tape.scalar(p)
    }

    /// Summed weighted cross-entropy over the document's sentences and its
    /// parameter gradients.
    pub fn loss_and_gradients(
        &self,
        doc: &EmbeddedDocument<T>,
        labels: &[u8],
        pos_weight: T,
        opts: ForwardOptions,
        rng: &mut impl Rng,
    ) -> Result<(T, Gradients<T>)> {
        if labels.len() != doc.sentences.len() {
            return Err(Error::LengthMismatch {
                what: "labels vs sentences",
                left: labels.len(),
                right: doc.sentences.len(),
            });
        }
        let mut tape = Tape::new(&self.params);
        let graph = self.forward(&mut tape, doc, opts, rng)?;
        let terms: Vec<Var> = graph
            .logits
            .iter()
            .zip(labels)
            .map(|(&logit, &y)| tape.weighted_bce(logit, T::lit(y as f64), pos_weight))
            .collect();
        let loss = tape.sum(&terms);
        let value = tape.scalar(loss);
        Ok((value, tape.backward(loss).into_params()))
    }

    /// Weighted cross-entropy without gradients.
    pub fn loss(&self, doc: &EmbeddedDocument<T>, labels: &[u8], pos_weight: T) -> Result<T> {
        let p = self.predict(doc)?;
        Ok(crate::pipeline::weighted_loss_terms(&p, labels, pos_weight))
    }
}

/// Random source for code paths that never draw (inference-mode dropout).
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("inference does not sample")
    }

    fn next_u64(&mut self) -> u64 {
        unreachable!("inference does not sample")
    }

    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("inference does not sample")
    }

    fn try_fill_bytes(&mut self, _: &mut [u8]) -> std::result::Result<(), rand::Error> {
        unreachable!("inference does not sample")
    }
}

/// Self-describing model directory: `model.json`, `params.bin`, `vocab.txt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format_version: u32,
    pub config: ModelConfig,
    pub vocab_size: usize,
    pub params_file: String,
    pub vocab_file: String,
}

pub const MANIFEST_FILE: &str = "model.json";
pub const PARAMS_FILE: &str = "params.bin";
pub const VOCAB_FILE: &str = "vocab.txt";
const EMBEDDING_TENSOR: &str = "embedding.table";

pub fn save_model<T: Scalar>(
    dir: impl AsRef<Path>,
    model: &Model<T>,
    words: &WordEmbeddings<T>,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = ModelManifest {
        format_version: 1,
        config: model.config.clone(),
        vocab_size: words.vocab.len(),
        params_file: PARAMS_FILE.into(),
        vocab_file: VOCAB_FILE.into(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;

    let path = dir.join(VOCAB_FILE);
    let mut vocab = words.vocab.tokens().join("\n");
    vocab.push('\n');
    fs::write(&path, vocab).map_err(|e| Error::io(&path, e))?;

    let table = Tensor::new(
        vec![words.table.rows(), words.table.dim()],
        words.table.data().to_vec(),
    )?;
    write_checkpoint(
        dir.join(PARAMS_FILE),
        model
            .params
            .named()
            .chain(std::iter::once((EMBEDDING_TENSOR, &table))),
    )
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<ModelManifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
}

pub fn load_model<T: Scalar>(dir: impl AsRef<Path>) -> Result<(Model<T>, WordEmbeddings<T>)> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let path = dir.join(&manifest.vocab_file);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let vocab = Vocabulary::from_tokens(text.lines().map(str::to_string).collect())?;
    if vocab.len() != manifest.vocab_size {
        return Err(Error::Checkpoint(format!(
            "manifest lists {} vocabulary entries, {} has {}",
            manifest.vocab_size,
            path.display(),
            vocab.len()
        )));
    }
    let tensors = read_checkpoint::<T>(dir.join(&manifest.params_file))?;
    // Values are overwritten below; the seed only fixes shapes.
    let mut model = Model::new(
        manifest.config.clone(),
        &mut rand::rngs::mock::StepRng::new(0, 1),
    )?;
    model
        .params
        .load_named(tensors.iter().map(|(n, t)| (n.as_str(), t)))?;
    let table = tensors
        .iter()
        .find(|(n, _)| n == EMBEDDING_TENSOR)
        .map(|(_, t)| t)
        .ok_or_else(|| Error::Checkpoint("missing embedding table".into()))?;
    if table.shape() != [vocab.len(), model.config.d_emb] {
        return Err(Error::Checkpoint(format!(
            "embedding table shape {:?} does not match vocabulary {} x {}",
            table.shape(),
            vocab.len(),
            model.config.d_emb
        )));
    }
    let table = EmbeddingTable::from_data(model.config.d_emb, table.data().to_vec())?;
    Ok((model, WordEmbeddings::new(vocab, table)?))
}

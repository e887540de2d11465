//! Training, budgeted extraction and the evaluation harness.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, DEFAULT_VOCAB_CAP};
use crate::diff::{AdamConfig, AdamState, Gradients};
use crate::error::{Error, Result};
use crate::metrics::{approx_randomization, bonferroni, rouge_all, RougeTriple, DEFAULT_TRIALS};
use crate::model::{EmbeddedDocument, ForwardOptions, Model, ModelConfig, WordEmbeddings};
use crate::oracle::{lead_summary, oracle_summary, LabeledDocument, DEFAULT_LABEL_LIMIT};
use crate::scalar::Scalar;

pub const DEFAULT_SUMMARY_LIMIT: usize = 200;
/// Significance level for "not distinguishable from the best system".
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    /// Documents per minibatch.
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub vocab_cap: usize,
    /// Word budget for the greedy oracle.
    pub label_limit: usize,
    /// Word budget for validation summaries.
    pub summary_limit: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            batch_size: 32,
            max_epochs: 50,
            seed: 0,
            vocab_cap: DEFAULT_VOCAB_CAP,
            label_limit: DEFAULT_LABEL_LIMIT,
            summary_limit: DEFAULT_SUMMARY_LIMIT,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr.is_nan()
            || self.lr <= 0.0
            || self.batch_size == 0
            || self.max_epochs == 0
            || self.vocab_cap == 0
            || self.label_limit == 0
            || self.summary_limit == 0
        {
            return Err(Error::Config(
                "training hyperparameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `#negative / #positive` over a whole label set.
pub fn positive_weight<'a>(labels: impl IntoIterator<Item = &'a [u8]>) -> Result<f64> {
    let (mut pos, mut neg) = (0usize, 0usize);
    for l in labels {
        for &y in l {
            if y == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
    }
    if pos == 0 {
        return Err(Error::NoPositiveLabels);
    }
    Ok(neg as f64 / pos as f64)
}

pub(crate) fn weighted_loss_terms<T: Scalar>(p: &[T], y: &[u8], pos_weight: T) -> T {
    p.iter()
        .zip(y)
        .map(|(&p, &y)| {
            if y == 1 {
                -pos_weight * p.ln()
            } else {
                -(T::one() - p).ln()
            }
        })
        .sum()
}

/// `-Σ_i [w_pos·y_i·ln p_i + (1 - y_i)·ln(1 - p_i)]` for one document.
pub fn weighted_loss(p: &[f64], y: &[u8], pos_weight: f64) -> Result<f64> {
    if p.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "probabilities vs labels",
            left: p.len(),
            right: y.len(),
        });
    }
    Ok(weighted_loss_terms(p, y, pos_weight))
}

/// Sentences ranked by probability (ties to the lower index) are taken until
/// their word count meets or exceeds `length_limit`; the sentence that
/// crosses the limit is kept. Returned in document order.
pub fn extract_summary<P: Copy + PartialOrd>(
    doc: &Document,
    p: &[P],
    length_limit: usize,
) -> Vec<usize> {
    assert_eq!(p.len(), doc.len(), "one probability per sentence");
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut words = 0;
    let mut chosen = Vec::new();
    for i in order {
        chosen.push(i);
        words += doc.sentences[i].word_count;
        if words >= length_limit {
            break;
        }
    }
    chosen.sort_unstable();
    chosen
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_rouge2_f: f64,
    /// Seconds since training started.
    pub wall_time: f64,
}

pub struct TrainOutcome<T> {
    /// Parameters from the epoch with the best validation ROUGE-2.
    pub model: Model<T>,
    /// 1-based.
    pub best_epoch: usize,
    pub best_val_rouge2_f: f64,
    pub pos_weight: f64,
    pub log: Vec<EpochRecord>,
}

/// 1-based epoch of the first maximum.
pub fn select_best(val_scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in val_scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i + 1)
}

/// Independent stream per (seed, epoch, document) so parallel workers draw
/// the same dropout masks regardless of scheduling.
fn document_rng(seed: u64, epoch: usize, doc: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) | doc as u64);
    rng
}

struct Prepared<T> {
    embedded: EmbeddedDocument<T>,
    labels: Vec<u8>,
}

fn prepare<T: Scalar>(docs: &[LabeledDocument], words: &WordEmbeddings<T>) -> Vec<Prepared<T>> {
    docs.par_iter()
        .map(|d| Prepared {
            embedded: words.embed(&d.document),
            labels: d.labels.clone(),
        })
        .collect()
}

/// Mean ROUGE-2 F of budgeted extraction over `docs`.
pub fn validation_rouge2<T: Scalar>(
    model: &Model<T>,
    words: &WordEmbeddings<T>,
    docs: &[LabeledDocument],
    summary_limit: usize,
    opts: ForwardOptions,
) -> Result<f64> {
    let scores = docs
        .par_iter()
        .map(|d| {
            let p = model.predict_with(&words.embed(&d.document), opts)?;
            let picked = extract_summary(&d.document, &p, summary_limit);
            let hyp = d.document.tokens_of(&picked);
            Ok(crate::metrics::rouge_n(&hyp, &d.document.reference_tokens(), 2).f1)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len().max(1) as f64)
}

/// Mean per-document weighted loss in inference mode.
pub fn corpus_loss<T: Scalar>(
    model: &Model<T>,
    words: &WordEmbeddings<T>,
    docs: &[LabeledDocument],
    pos_weight: f64,
) -> Result<f64> {
    let losses = docs
        .par_iter()
        .map(|d| {
            model
                .loss(&words.embed(&d.document), &d.labels, T::lit(pos_weight))
                .map(Scalar::to_f64_lossy)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

/// Minibatch Adam on the weighted loss, keeping the parameters of the epoch
/// with the best validation ROUGE-2. `on_epoch` sees every log record as it
/// is produced.
pub fn train<T: Scalar>(
    train_docs: &[LabeledDocument],
    val_docs: &[LabeledDocument],
    words: &WordEmbeddings<T>,
    model_config: &ModelConfig,
    config: &TrainConfig,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let model = Model::new(model_config.clone(), &mut rng)?;
    train_model(
        model,
        rng,
        train_docs,
        val_docs,
        words,
        config,
        ForwardOptions::TRAINING,
        on_epoch,
    )
}

/// [`train`] from given initial parameters; `rng` drives the epoch shuffles.
/// `opts.training` is forced on for the updates; `opts.zero_global` applies
/// to both training and validation.
#[allow(clippy::too_many_arguments)]
pub fn train_model<T: Scalar>(
    mut model: Model<T>,
    mut rng: ChaCha8Rng,
    train_docs: &[LabeledDocument],
    val_docs: &[LabeledDocument],
    words: &WordEmbeddings<T>,
    config: &TrainConfig,
    opts: ForwardOptions,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if train_docs.is_empty() || val_docs.is_empty() {
        return Err(Error::Config(
            "training and validation splits must be non-empty".into(),
        ));
    }
    if words.dim() != model.config.d_emb {
        return Err(Error::Config(format!(
            "embeddings have dimension {}, model expects {}",
            words.dim(),
            model.config.d_emb
        )));
    }
    let pos_weight = positive_weight(train_docs.iter().map(|d| d.labels.as_slice()))?;
    let w = T::lit(pos_weight);
    let data = prepare(train_docs, words);
    let val_opts = ForwardOptions {
        training: false,
        ..opts
    };
    let train_opts = ForwardOptions {
        training: true,
        ..opts
    };
    let mut adam = AdamState::new(
        AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        },
        &model.params,
    );
    let started = Instant::now();
    let mut log = Vec::with_capacity(config.max_epochs);
    let mut best: Option<(usize, f64, Model<T>)> = None;
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let results = batch
                .par_iter()
                .map(|&i| {
                    let mut doc_rng = document_rng(config.seed, epoch, i);
                    model.loss_and_gradients(
                        &data[i].embedded,
                        &data[i].labels,
                        w,
                        train_opts,
                        &mut doc_rng,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let mut grads = Gradients::empty(model.params.len());
            let mut batch_loss = 0.0;
            for (loss, g) in &results {
                batch_loss += loss.to_f64_lossy();
                grads.merge(g);
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b + 1,
                });
            }
            epoch_loss += batch_loss;
            model
                .params
                .accumulate(&grads, T::one() / T::lit(batch.len() as f64));
            adam.step(&mut model.params);
        }
        if !model.params.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: order.len().div_ceil(config.batch_size),
            });
        }
        let val = validation_rouge2(&model, words, val_docs, config.summary_limit, val_opts)?;
        let record = EpochRecord {
            epoch,
            train_loss: epoch_loss / data.len() as f64,
            val_rouge2_f: val,
            wall_time: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        log.push(record);
        if best.as_ref().is_none_or(|(_, b, _)| val > *b) {
            best = Some((epoch, val, model.clone()));
        }
    }
    let (best_epoch, best_val, best_model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model: best_model,
        best_epoch,
        best_val_rouge2_f: best_val,
        pos_weight,
        log,
    })
}

/// Corpus means of the F scores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanScores {
    pub rouge1_f: f64,
    pub rouge2_f: f64,
    pub rouge_l_f: f64,
}

impl MeanScores {
    pub fn of(scores: &[RougeTriple]) -> Self {
        if scores.is_empty() {
            return MeanScores::default();
        }
        let n = scores.len() as f64;
        MeanScores {
            rouge1_f: scores.iter().map(|s| s.rouge1.f1).sum::<f64>() / n,
            rouge2_f: scores.iter().map(|s| s.rouge2.f1).sum::<f64>() / n,
            rouge_l_f: scores.iter().map(|s| s.rouge_l.f1).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub name: String,
    pub mean: MeanScores,
    pub per_document: Vec<RougeTriple>,
}

impl SystemReport {
    pub fn new(name: impl Into<String>, per_document: Vec<RougeTriple>) -> Self {
        SystemReport {
            name: name.into(),
            mean: MeanScores::of(&per_document),
            per_document,
        }
    }

    pub fn rouge2_f(&self) -> Vec<f64> {
        self.per_document.iter().map(|s| s.rouge2.f1).collect()
    }
}

/// Documents whose body word count lies in `[lower, upper)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lower: usize,
    /// `None` for the open-ended last bucket.
    pub upper: Option<usize>,
    pub count: usize,
    pub mean: MeanScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemBuckets {
    pub system: String,
    pub buckets: Vec<Bucket>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub length_limit: usize,
    pub document_ids: Vec<String>,
    pub document_words: Vec<usize>,
    pub systems: Vec<SystemReport>,
    pub bucket_edges: Vec<usize>,
    pub buckets: Vec<SystemBuckets>,
}

impl EvalReport {
    pub fn system(&self, name: &str) -> Option<&SystemReport> {
        self.systems.iter().find(|s| s.name == name)
    }

    /// Tab-separated bucket table, one row per (system, bucket).
    pub fn buckets_tsv(&self) -> String {
        let mut out = String::from("system\tlower\tupper\tcount\trouge1_f\trouge2_f\trougeL_f\n");
        for sb in &self.buckets {
            for b in &sb.buckets {
                let upper = b.upper.map_or_else(|| "inf".to_string(), |u| u.to_string());
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\n",
                    sb.system,
                    b.lower,
                    upper,
                    b.count,
                    b.mean.rouge1_f,
                    b.mean.rouge2_f,
                    b.mean.rouge_l_f
                ));
            }
        }
        out
    }
}

/// Groups documents by total word count; `edges` must be strictly
/// increasing. `k` edges make `k + 1` buckets.
pub fn bucket_by_length(
    words: &[usize],
    scores: &[RougeTriple],
    edges: &[usize],
) -> Result<Vec<Bucket>> {
    if words.len() != scores.len() {
        return Err(Error::LengthMismatch {
            what: "word counts vs scores",
            left: words.len(),
            right: scores.len(),
        });
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "bucket edges must be strictly increasing".into(),
        ));
    }
    let mut members: Vec<Vec<RougeTriple>> = vec![Vec::new(); edges.len() + 1];
    for (&w, s) in words.iter().zip(scores) {
        members[edges.partition_point(|&e| e <= w)].push(*s);
    }
    Ok(members
        .into_iter()
        .enumerate()
        .map(|(k, m)| Bucket {
            lower: if k == 0 { 0 } else { edges[k - 1] },
            upper: edges.get(k).copied(),
            count: m.len(),
            mean: MeanScores::of(&m),
        })
        .collect())
}

fn score_documents(
    docs: &[LabeledDocument],
    summarize: impl Fn(&LabeledDocument) -> Result<Vec<String>> + Sync,
) -> Result<Vec<RougeTriple>> {
    docs.par_iter()
        .map(|d| Ok(rouge_all(&summarize(d)?, &d.document.reference_tokens())))
        .collect()
}

/// Scores the model, Lead and Oracle on `docs` and builds the bucket table.
pub fn evaluate<T: Scalar>(
    model: &Model<T>,
    words: &WordEmbeddings<T>,
    docs: &[LabeledDocument],
    model_name: &str,
    length_limit: usize,
    bucket_edges: &[usize],
) -> Result<EvalReport> {
    let model_scores = score_documents(docs, |d| {
        let p = model.predict(&words.embed(&d.document))?;
        Ok(d.document
            .tokens_of(&extract_summary(&d.document, &p, length_limit)))
    })?;
    let lead = score_documents(docs, |d| Ok(lead_summary(&d.document, length_limit)))?;
    let oracle = score_documents(docs, |d| Ok(d.document.tokens_of(&oracle_summary(d))))?;
    let systems = vec![
        SystemReport::new(model_name, model_scores),
        SystemReport::new("lead", lead),
        SystemReport::new("oracle", oracle),
    ];
    build_report(docs, systems, length_limit, bucket_edges)
}

pub fn build_report(
    docs: &[LabeledDocument],
    systems: Vec<SystemReport>,
    length_limit: usize,
    bucket_edges: &[usize],
) -> Result<EvalReport> {
    let document_words: Vec<usize> = docs.iter().map(|d| d.document.word_count()).collect();
    let buckets = systems
        .iter()
        .map(|s| {
            Ok(SystemBuckets {
                system: s.name.clone(),
                buckets: bucket_by_length(&document_words, &s.per_document, bucket_edges)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EvalReport {
        length_limit,
        document_ids: docs.iter().map(|d| d.document.id.clone()).collect(),
        document_words,
        systems,
        bucket_edges: bucket_edges.to_vec(),
        buckets,
    })
}

/// Per-document scores of one system, keyed by document id.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemScores {
    pub name: String,
    pub document_ids: Vec<String>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub systems: Vec<String>,
    pub means: Vec<f64>,
    /// Number of pairwise tests the p-values are corrected for.
    pub comparisons: usize,
    pub n_trials: usize,
    /// Bonferroni-corrected p-values; the diagonal compares a system with itself.
    pub p_values: Vec<Vec<f64>>,
    pub best: usize,
    /// Systems whose difference from the best is not significant at 0.01,
    /// the best included.
    pub tied_with_best: Vec<bool>,
}

/// Pairwise approximate-randomization tests with Bonferroni correction.
pub fn compare_systems(systems: &[SystemScores], n_trials: usize, seed: u64) -> Result<Comparison> {
    if systems.is_empty() {
        return Err(Error::Config("nothing to compare".into()));
    }
    let ids = &systems[0].document_ids;
    for s in systems {
        if &s.document_ids != ids {
            return Err(Error::Config(format!(
                "system {:?} was evaluated on a different document set",
                s.name
            )));
        }
        if s.scores.len() != ids.len() {
            return Err(Error::LengthMismatch {
                what: "scores vs documents",
                left: s.scores.len(),
                right: ids.len(),
            });
        }
    }
    let k = systems.len();
    let comparisons = (k * (k - 1) / 2).max(1);
    let mut p_values = vec![vec![1.0; k]; k];
    let mut pair = 0u64;
    for i in 0..k {
        for j in i..k {
            let r = approx_randomization(
                &systems[i].scores,
                &systems[j].scores,
                n_trials,
                seed.wrapping_add(pair),
            )?;
            pair += 1;
            let p = bonferroni(&[r.p_value], comparisons)[0];
            p_values[i][j] = p;
            p_values[j][i] = p;
        }
    }
    let means: Vec<f64> = systems
        .iter()
        .map(|s| s.scores.iter().sum::<f64>() / s.scores.len().max(1) as f64)
        .collect();
    let mut best = 0;
    for (i, &m) in means.iter().enumerate() {
        if m > means[best] {
            best = i;
        }
    }
    let tied_with_best = (0..k)
        .map(|i| i == best || p_values[best][i] >= SIGNIFICANCE_LEVEL)
        .collect();
    Ok(Comparison {
        systems: systems.iter().map(|s| s.name.clone()).collect(),
        means,
        comparisons,
        n_trials,
        p_values,
        best,
        tied_with_best,
    })
}

/// Default trial count for [`compare_systems`].
pub const COMPARE_TRIALS: usize = DEFAULT_TRIALS;

/// ROUGE-2 F per document for every system of every report, named
/// `<label>/<system>` when more than one report is given.
pub fn report_scores(reports: &[(String, EvalReport)]) -> BTreeMap<String, SystemScores> {
    let mut out = BTreeMap::new();
    for (label, report) in reports {
        for s in &report.systems {
            let name = if reports.len() > 1 {
                format!("{label}/{}", s.name)
            } else {
                s.name.clone()
            };
            out.insert(
                name.clone(),
                SystemScores {
                    name,
                    document_ids: report.document_ids.clone(),
                    scores: s.rouge2_f(),
                },
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::RougeScore;

    fn doc(sentences: &[&str]) -> Document {
        Document::from_sections("d", &[("s".to_string(), sentences.to_vec())], &["x"]).unwrap()
    }

    #[test]
    fn positive_weight_ratio() {
        let labels = [vec![1u8, 0, 0, 0, 0], vec![0, 1, 0, 0, 0]];
        let w = positive_weight(labels.iter().map(Vec::as_slice)).unwrap();
        assert_eq!(w, 4.0);
        assert!(matches!(
            positive_weight([[0u8, 0].as_slice()]),
            Err(Error::NoPositiveLabels)
        ));
    }

    #[test]
    fn weighted_loss_examples() {
        let l = weighted_loss(&[0.5, 0.5], &[1, 0], 1.0).unwrap();
        assert!((l - 2.0 * 2f64.ln()).abs() < 1e-15);
        let l = weighted_loss(&[1.0 - 1e-12], &[1], 3.0).unwrap();
        assert!(l < 1e-11);
        assert!(weighted_loss(&[0.5], &[1, 0], 1.0).is_err());
    }

    #[test]
    fn weighted_loss_is_bce_at_unit_weight() {
        let p = [0.2f64, 0.7, 0.9];
        let y = [0u8, 1, 1];
        let bce: f64 = p
            .iter()
            .zip(&y)
            .map(|(&p, &y)| -(y as f64 * p.ln() + (1.0 - y as f64) * (1.0 - p).ln()))
            .sum();
        assert!((weighted_loss(&p, &y, 1.0).unwrap() - bce).abs() < 1e-15);
    }

    #[test]
    fn extraction_worked_examples() {
        let d = doc(&["a b c d e", "f g h i j", "k l m n o"]);
        assert_eq!(extract_summary(&d, &[0.9, 0.2, 0.8], 10), [0, 2]);
        assert_eq!(extract_summary(&d, &[0.9, 0.2, 0.8], 1), [0]);
        assert_eq!(extract_summary(&d, &[0.5, 0.5, 0.5], 6), [0, 1]);
        assert_eq!(extract_summary(&d, &[0.5, 0.5, 0.5], 100), [0, 1, 2]);
    }

    #[test]
    fn best_epoch_is_first_maximum() {
        assert_eq!(select_best(&[0.1, 0.3, 0.2]), Some(2));
        assert_eq!(select_best(&[0.3, 0.3]), Some(1));
        assert_eq!(select_best(&[]), None);
    }

    fn triple(f: f64) -> RougeTriple {
        let s = RougeScore::from_pr(f, f);
        RougeTriple {
            rouge1: s,
            rouge2: s,
            rouge_l: s,
        }
    }

    #[test]
    fn buckets_partition_documents() {
        let words = [100, 2999, 3000, 5000];
        let scores: Vec<RougeTriple> = [0.1, 0.2, 0.3, 0.5].into_iter().map(triple).collect();
        let b = bucket_by_length(&words, &scores, &[3000]).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!((b[0].lower, b[0].upper, b[0].count), (0, Some(3000), 2));
        assert_eq!((b[1].lower, b[1].upper, b[1].count), (3000, None, 2));
        assert!((b[0].mean.rouge1_f - 0.15).abs() < 1e-12);
        assert!((b[1].mean.rouge2_f - 0.4).abs() < 1e-12);

        let all = bucket_by_length(&words, &scores, &[]).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].count, 4);

        let one_each = bucket_by_length(&words, &scores, &[1000, 3000, 4000]).unwrap();
        for (b, s) in one_each.iter().zip(&scores) {
            assert_eq!(b.count, 1);
            assert_eq!(b.mean.rouge1_f, s.rouge1.f1);
        }
        assert!(bucket_by_length(&words, &scores, &[5, 5]).is_err());
    }

    fn system(name: &str, scores: Vec<f64>) -> SystemScores {
        SystemScores {
            name: name.into(),
            document_ids: (0..scores.len()).map(|i| i.to_string()).collect(),
            scores,
        }
    }

    #[test]
    fn comparison_cases() {
        let a = system("a", vec![0.4; 20]);
        let c = compare_systems(std::slice::from_ref(&a), 200, 1).unwrap();
        assert_eq!(c.p_values[0][0], 1.0);

        let hi = system("hi", vec![1.0; 20]);
        let lo = system("lo", vec![0.0; 20]);
        let c = compare_systems(&[hi.clone(), lo.clone()], DEFAULT_TRIALS, 3).unwrap();
        assert_eq!(c.comparisons, 1);
        assert!(c.p_values[0][1] < 0.01);
        assert_eq!(c.best, 0);
        assert_eq!(c.tied_with_best, [true, false]);

        let c = compare_systems(&[hi, lo, a], 100, 3).unwrap();
        assert_eq!(c.comparisons, 3);
        assert_eq!(c.p_values[2][2], 1.0);
    }

    #[test]
    fn comparison_rejects_mismatched_documents() {
        let a = system("a", vec![0.1, 0.2]);
        let mut b = system("b", vec![0.1, 0.2]);
        b.document_ids[1] = "other".into();
        assert!(compare_systems(&[a, b], 10, 0).is_err());
    }
}

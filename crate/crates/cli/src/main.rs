mod config;

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use extsum::corpus::{
    build_vocabulary, load_corpus, load_embeddings, tokenize, write_records, Document, LoadOptions,
    DEFAULT_MAX_SENTENCES,
};
use extsum::metrics::rouge_all;
use extsum::model::{load_model, read_manifest, save_model, Ablation, WordEmbeddings};
use extsum::oracle::{generate_labels, label_corpus, LabeledDocument, DEFAULT_LABEL_LIMIT};
use extsum::pipeline::{
    compare_systems, evaluate, extract_summary, report_scores, train, EvalReport, COMPARE_TRIALS,
    DEFAULT_SUMMARY_LIMIT,
};
use extsum::Scalar;
use serde::Deserialize;

use config::{existing, required, Precision, RunConfig};

#[derive(Parser)]
#[command(
    name = "extsum",
    version,
    about = "Extractive summarization of long documents"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attach greedy oracle labels to a corpus file.
    Label(LabelArgs),
    /// Train a model from a run config.
    Train(TrainArgs),
    /// Score a trained model, Lead and Oracle on the test split.
    Evaluate(EvaluateArgs),
    /// Print extractive summaries for documents.
    Summarize(SummarizeArgs),
    /// ROUGE-1/2/L between two text files.
    Rouge(RougeArgs),
    /// Pairwise significance tests between evaluation reports.
    Compare(CompareArgs),
}

#[derive(Args)]
struct LabelArgs {
    input: PathBuf,
    output: PathBuf,
    /// Word budget of the oracle.
    #[arg(long, default_value_t = DEFAULT_LABEL_LIMIT, value_parser = positive())]
    limit: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_SENTENCES)]
    max_sentences: usize,
}

#[derive(Args)]
struct TrainArgs {
    config: PathBuf,
    #[arg(long)]
    ablation: Option<Ablation>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, value_enum)]
    precision: Option<Precision>,
    /// Output model directory (default: paths.checkpoint).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    config: PathBuf,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Word-count bucket edges, e.g. `--buckets 3000`.
    #[arg(long, value_delimiter = ',')]
    buckets: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_SUMMARY_LIMIT)]
    limit: usize,
    #[arg(long)]
    ablation: Option<Ablation>,
    #[arg(long, value_enum)]
    precision: Option<Precision>,
    /// Output directory (default: paths.reports).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// A JSON document or a JSON-lines file of documents.
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SUMMARY_LIMIT, value_parser = positive())]
    limit: usize,
    /// Prefix each sentence with its index and probability.
    #[arg(long, short)]
    verbose: bool,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    precision: Precision,
}

#[derive(Args)]
struct RougeArgs {
    hypothesis: PathBuf,
    reference: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Two or more `report.json` files.
    #[arg(required = true, num_args = 2..)]
    reports: Vec<PathBuf>,
    #[arg(long, default_value_t = COMPARE_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the comparison as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Label(a) => label(a),
        Command::Train(a) => train_command(a),
        Command::Evaluate(a) => evaluate_command(a),
        Command::Summarize(a) => summarize(a),
        Command::Rouge(a) => rouge(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn label(args: LabelArgs) -> Result<()> {
    let opts = LoadOptions {
        max_sentences: args.max_sentences,
    };
    let corpus = load_corpus(&args.input, &opts)?;
    if corpus.skipped > 0 {
        eprintln!("skipped {} empty documents", corpus.skipped);
    }
    let labeled = label_corpus(corpus.documents().collect::<Vec<_>>(), args.limit);
    let records: Vec<_> = labeled.iter().map(LabeledDocument::to_record).collect();
    write_records(&args.output, &records)?;
    let sentences: usize = labeled.iter().map(|d| d.labels.len()).sum();
    let positives: usize = labeled.iter().map(LabeledDocument::positives).sum();
    let empty = labeled.iter().filter(|d| d.positives() == 0).count();
    eprintln!(
        "labeled {} documents: {positives}/{sentences} sentences positive ({:.2}%), {empty} documents without positives",
        labeled.len(),
        100.0 * positives as f64 / sentences.max(1) as f64
    );
    Ok(())
}

fn load_labeled(path: &Path) -> Result<Vec<LabeledDocument>> {
    let corpus = load_corpus(path, &LoadOptions::default())?;
    if corpus.skipped > 0 {
        eprintln!(
            "{}: skipped {} empty documents",
            path.display(),
            corpus.skipped
        );
    }
    corpus
        .entries
        .into_iter()
        .map(LabeledDocument::from_entry)
        .collect::<Result<_, _>>()
        .with_context(|| format!("in {}", path.display()))
}

fn train_command(args: TrainArgs) -> Result<()> {
    let mut run = RunConfig::load(&args.config)?;
    if let Some(a) = args.ablation {
        run.ablation = Some(a);
    }
    if let Some(s) = args.seed {
        run.train.seed = s;
    }
    if let Some(e) = args.epochs {
        run.train.max_epochs = e;
    }
    if let Some(p) = args.precision {
        run.precision = p;
    }
    if let Some(c) = args.checkpoint {
        run.paths.checkpoint = Some(c);
    }
    run.validate()?;
    match run.precision {
        Precision::F32 => train_typed::<f32>(&run),
        Precision::F64 => train_typed::<f64>(&run),
    }
}

fn train_typed<T: Scalar>(run: &RunConfig) -> Result<()> {
    let train_docs = load_labeled(existing(&run.paths.train, "train")?)?;
    let val_docs = load_labeled(existing(&run.paths.valid, "valid")?)?;
    let embeddings = existing(&run.paths.embeddings, "embeddings")?;
    let out = required(&run.paths.checkpoint, "checkpoint")?;
    let model_config = run.model_config();

    let vocab = build_vocabulary(train_docs.iter().map(|d| &d.document), run.train.vocab_cap);
    let (table, coverage) = load_embeddings::<T>(embeddings, &vocab, model_config.d_emb)?;
    eprintln!(
        "vocabulary {} entries, {:.1}% covered by {}",
        vocab.len(),
        100.0 * coverage,
        embeddings.display()
    );
    let words = WordEmbeddings::new(vocab, table)?;

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let log_path = out.join("train_log.jsonl");
    let mut log = BufWriter::new(
        File::create(&log_path).with_context(|| format!("cannot create {}", log_path.display()))?,
    );
    let mut log_error = None;
    let outcome = train(
        &train_docs,
        &val_docs,
        &words,
        &model_config,
        &run.train,
        |record| {
            eprintln!(
                "epoch {:>3}  loss {:.5}  val R-2 F {:.4}  {:.1}s",
                record.epoch, record.train_loss, record.val_rouge2_f, record.wall_time
            );
            let line = serde_json::to_string(record).expect("record serializes");
            if let Err(e) = writeln!(log, "{line}").and_then(|_| log.flush()) {
                log_error.get_or_insert(e);
            }
        },
    )?;
    if let Some(e) = log_error {
        return Err(e).with_context(|| format!("cannot write {}", log_path.display()));
    }
    save_model(out, &outcome.model, &words)?;
    let run_path = out.join("run.json");
    fs::write(&run_path, serde_json::to_string_pretty(run)? + "\n")
        .with_context(|| format!("cannot write {}", run_path.display()))?;
    eprintln!(
        "best epoch {} (val R-2 F {:.4}); model written to {}",
        outcome.best_epoch,
        outcome.best_val_rouge2_f,
        out.display()
    );
    Ok(())
}

fn evaluate_command(args: EvaluateArgs) -> Result<()> {
    let mut run = RunConfig::load(&args.config)?;
    if let Some(a) = args.ablation {
        run.ablation = Some(a);
    }
    if let Some(p) = args.precision {
        run.precision = p;
    }
    run.validate()?;
    let checkpoint = match &args.checkpoint {
        Some(c) => c.as_path(),
        None => existing(&run.paths.checkpoint, "checkpoint")?,
    };
    let manifest = read_manifest(checkpoint)?;
    if manifest.config != run.model_config() {
        bail!(
            "checkpoint {} was trained with {:?}, but the config describes {:?}",
            checkpoint.display(),
            manifest.config,
            run.model_config()
        );
    }
    let out = match &args.out {
        Some(o) => o.as_path(),
        None => required(&run.paths.reports, "reports")?,
    };
    let test = existing(&run.paths.test, "test")?;
    let corpus = load_corpus(test, &LoadOptions::default())?;
    let docs: Vec<LabeledDocument> = corpus
        .entries
        .into_iter()
        .map(|e| match e.labels {
            Some(_) => LabeledDocument::from_entry(e).map_err(Into::into),
            None => Ok(generate_labels(&e.document, run.train.label_limit)),
        })
        .collect::<Result<_>>()?;
    if docs.is_empty() {
        bail!("{} contains no documents", test.display());
    }
    let report = match run.precision {
        Precision::F32 => evaluate_typed::<f32>(checkpoint, &docs, &args),
        Precision::F64 => evaluate_typed::<f64>(checkpoint, &docs, &args),
    }?;

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let json = out.join("report.json");
    fs::write(&json, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("cannot write {}", json.display()))?;
    let tsv = out.join("buckets.tsv");
    fs::write(&tsv, report.buckets_tsv())
        .with_context(|| format!("cannot write {}", tsv.display()))?;

    println!("system\trouge1_f\trouge2_f\trougeL_f");
    for s in &report.systems {
        println!(
            "{}\t{:.4}\t{:.4}\t{:.4}",
            s.name, s.mean.rouge1_f, s.mean.rouge2_f, s.mean.rouge_l_f
        );
    }
    eprintln!("wrote {} and {}", json.display(), tsv.display());
    Ok(())
}

fn evaluate_typed<T: Scalar>(
    checkpoint: &Path,
    docs: &[LabeledDocument],
    args: &EvaluateArgs,
) -> Result<EvalReport> {
    let (model, words) = load_model::<T>(checkpoint)?;
    Ok(evaluate(
        &model,
        &words,
        docs,
        "model",
        args.limit,
        &args.buckets,
    )?)
}

/// Document to summarize; the abstract is optional.
#[derive(Deserialize)]
struct InputDocument {
    #[serde(default)]
    id: String,
    sections: Vec<Vec<String>>,
    #[serde(default)]
    section_names: Vec<String>,
}

fn read_documents(path: &Path) -> Result<Vec<Document>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let inputs: Vec<InputDocument> = match serde_json::from_str::<InputDocument>(&text) {
        Ok(doc) => vec![doc],
        Err(_) => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .with_context(|| format!("{}:{}: invalid document", path.display(), i + 1))
            })
            .collect::<Result<_>>()?,
    };
    inputs
        .into_iter()
        .enumerate()
        .map(|(k, d)| {
            let named: Vec<(String, Vec<String>)> = d
                .sections
                .into_iter()
                .enumerate()
                .map(|(i, s)| {
                    let name = d.section_names.get(i).cloned().unwrap_or_default();
                    (name, s)
                })
                .collect();
            let id = if d.id.is_empty() {
                format!("#{}", k + 1)
            } else {
                d.id
            };
            Document::from_body(id.clone(), &named)
                .with_context(|| format!("document {id:?} has no sentences"))
        })
        .collect()
}

fn summarize(args: SummarizeArgs) -> Result<()> {
    let docs = read_documents(&args.input)?;
    match args.precision {
        Precision::F32 => summarize_typed::<f32>(&docs, &args),
        Precision::F64 => summarize_typed::<f64>(&docs, &args),
    }
}

fn summarize_typed<T: Scalar>(docs: &[Document], args: &SummarizeArgs) -> Result<()> {
    let (model, words) = load_model::<T>(&args.checkpoint)?;
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for (k, doc) in docs.iter().enumerate() {
        let p = model.predict(&words.embed(doc))?;
        if k > 0 {
            writeln!(out)?;
        }
        if args.verbose && docs.len() > 1 {
            writeln!(out, "# {}", doc.id)?;
        }
        for i in extract_summary(doc, &p, args.limit) {
            let text = &doc.sentences[i].raw;
            if args.verbose {
                writeln!(out, "{i}\t{:.6}\t{text}", p[i].to_f64_lossy())?;
            } else {
                writeln!(out, "{text}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn file_tokens(path: &Path) -> Result<Vec<String>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text.lines().flat_map(|l| tokenize(l).tokens).collect())
}

fn rouge(args: RougeArgs) -> Result<()> {
    let hyp = file_tokens(&args.hypothesis)?;
    let reference = file_tokens(&args.reference)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&rouge_all(&hyp, &reference))?
    );
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let mut reports = Vec::with_capacity(args.reports.len());
    let stems: Vec<String> = args
        .reports
        .iter()
        .map(|p| {
            // `runs/bsl/report.json` is labelled `bsl`.
            let named = if p.file_stem().is_some_and(|s| s == "report") {
                p.parent().and_then(Path::file_name)
            } else {
                p.file_stem()
            };
            named.map_or_else(
                || p.display().to_string(),
                |s| s.to_string_lossy().into_owned(),
            )
        })
        .collect();
    let unique = stems.iter().collect::<HashSet<_>>().len() == stems.len();
    for (path, stem) in args.reports.iter().zip(stems) {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let report: EvalReport = serde_json::from_str(&text)
            .with_context(|| format!("{} is not an evaluation report", path.display()))?;
        let label = if unique {
            stem
        } else {
            path.display().to_string()
        };
        reports.push((label, report));
    }
    let systems: Vec<_> = report_scores(&reports).into_values().collect();
    let cmp = compare_systems(&systems, args.trials, args.seed)?;
    println!("# {} systems, {} comparisons, {} trials; * best, = not significantly different (p >= 0.01)", cmp.systems.len(), cmp.comparisons, cmp.n_trials);
    println!("mark\tsystem\tmean_rouge2_f\tp_vs_best");
    for (i, name) in cmp.systems.iter().enumerate() {
        let mark = if i == cmp.best {
            "*"
        } else if cmp.tied_with_best[i] {
            "="
        } else {
            ""
        };
        println!(
            "{mark}\t{name}\t{:.4}\t{:.4}",
            cmp.means[i], cmp.p_values[cmp.best][i]
        );
    }
    if let Some(out) = &args.out {
        fs::write(out, serde_json::to_string_pretty(&cmp)? + "\n")
            .with_context(|| format!("cannot write {}", out.display()))?;
    }
    Ok(())
}

fn positive() -> clap::builder::RangedU64ValueParser<usize> {
    clap::builder::RangedU64ValueParser::new().range(1..)
}

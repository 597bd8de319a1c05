use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semdlp::dlp::{DataState, ReceiverZone};
use semdlp::evaluation::{MutationOp, MutationUnit};
use semdlp::{CentroidMode, ClassifierKind, IdfVariant, TfVariant};

mod commands;
mod config;

use config::{token, Axis, UsageError};

/// TF-IDF document classification and sensitivity policy enforcement.
#[derive(Debug, Parser)]
#[command(name = "semdlp", version)]
struct Cli {
    /// Seed for every random choice: splits, mutations, generated corpora [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML file supplying defaults; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Suppress informational output
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a classifier on a whole corpus and write the model file
    Train(TrainArgs),
    /// Repeated train/test runs over corpora and classifiers
    Evaluate(EvaluateArgs),
    /// Print the predicted category, scores and margin for each file
    Classify(ClassifyArgs),
    /// Classify files, apply a policy and append verdicts to an audit log
    Scan(ScanArgs),
    /// Insert, delete or exchange words, lines or paragraphs of a document
    Mutate(MutateArgs),
    /// Write a synthetic labeled corpus
    GenCorpus(GenCorpusArgs),
}

#[derive(Debug, Args, Default)]
struct ClassifierArgs {
    /// Centroid scoring: centroid-cosine or mean-cosine [default: centroid-cosine]
    #[arg(long, value_parser = token::<CentroidMode>)]
    mode: Option<CentroidMode>,
    /// Neighbours for knn [default: 5]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: Option<u64>,
    /// Naive Bayes additive smoothing [default: 1.0]
    #[arg(long)]
    alpha: Option<f64>,
    /// Term frequency: raw or log [default: raw]
    #[arg(long, value_parser = token::<TfVariant>)]
    tf: Option<TfVariant>,
    /// Inverse document frequency: raw, log or smooth [default: log]
    #[arg(long, value_parser = token::<IdfVariant>)]
    idf: Option<IdfVariant>,
    /// Scale document vectors to unit length [default: true]
    #[arg(long)]
    normalize: Option<bool>,
    /// Stop-list, one word per line
    #[arg(long)]
    stoplist: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Corpus root holding one directory per category
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// centroid, naive-bayes or knn [default: centroid]
    #[arg(long, value_parser = token::<ClassifierKind>)]
    kind: Option<ClassifierKind>,
    /// Model file to write
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip non-UTF-8 files instead of failing
    #[arg(long)]
    lenient: bool,
    #[command(flatten)]
    classifier: ClassifierArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Corpus root, optionally named as NAME=DIR; repeatable
    #[arg(long = "corpus")]
    corpora: Vec<String>,
    /// Classifier to include; repeatable [default: all three]
    #[arg(long = "kind", value_parser = token::<ClassifierKind>)]
    kinds: Vec<ClassifierKind>,
    /// Resampled splits per cell [default: 10]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    runs: Option<u64>,
    /// Share of each category used for training [default: 0.8]
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Split per category [default: true]
    #[arg(long)]
    stratified: Option<bool>,
    /// Accuracy table columns: datasets or categories [default: datasets]
    #[arg(long, value_enum)]
    axis: Option<Axis>,
    /// Write the JSON report here
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the text tables here
    #[arg(long)]
    tables: Option<PathBuf>,
    /// Annotate the comparison with paired t-test p-values
    #[arg(long)]
    t_test: bool,
    #[arg(long)]
    lenient: bool,
    #[command(flatten)]
    classifier: ClassifierArgs,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    stoplist: Option<PathBuf>,
    /// One JSON object per line instead of text
    #[arg(long)]
    json: bool,
    #[arg(required = true)]
    paths: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    policy: Option<PathBuf>,
    /// JSON Lines file that receives one verdict per scanned file
    #[arg(long)]
    audit_log: Option<PathBuf>,
    #[arg(long)]
    stoplist: Option<PathBuf>,
    /// [default: unknown]
    #[arg(long)]
    sender: Option<String>,
    /// [default: unknown]
    #[arg(long)]
    receiver: Option<String>,
    /// in_use, in_transit or at_rest [default: in_transit]
    #[arg(long, value_parser = token::<DataState>)]
    data_state: Option<DataState>,
    /// internal or external [default: external]
    #[arg(long, value_parser = token::<ReceiverZone>)]
    receiver_zone: Option<ReceiverZone>,
    /// Files or directories; directories are walked in name order
    #[arg(required = true)]
    paths: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct MutateArgs {
    /// insert, delete or exchange
    #[arg(long, value_parser = token::<MutationOp>)]
    op: Option<MutationOp>,
    /// Share of units affected, in [0, 1] [default: 0.1]
    #[arg(long)]
    rate: Option<f64>,
    /// word, line or paragraph [default: word]
    #[arg(long, value_parser = token::<MutationUnit>)]
    unit: Option<MutationUnit>,
    /// Whitespace-separated words to draw insertions from
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    input: PathBuf,
}

#[derive(Debug, Args)]
struct GenCorpusArgs {
    /// Directory to write <category>/<doc>.txt files into
    #[arg(long)]
    out: Option<PathBuf>,
    /// [default: 4]
    #[arg(long)]
    categories: Option<usize>,
    /// Documents per category [default: 50]
    #[arg(long)]
    docs: Option<usize>,
    /// Words per document [default: 200]
    #[arg(long)]
    length: Option<usize>,
    /// Topic words per category [default: 100]
    #[arg(long)]
    topic_vocab: Option<usize>,
    /// Shared background words [default: 500]
    #[arg(long)]
    background_vocab: Option<usize>,
    /// Probability of drawing a background word [default: 0]
    #[arg(long)]
    noise: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

//! Experimental protocol: seeded stratified splits, repeated train/test
//! runs, accuracy tables, pairwise win/loss comparison, document mutation
//! and a synthetic corpus generator.

mod compare;
mod experiment;
mod metrics;
mod mutation;
mod split;
mod synthetic;

use thiserror::Error;

use crate::classifiers::ModelError;
use crate::corpus::CorpusError;

pub use compare::{
    compare, render_accuracy_table, render_comparison, AccuracyTable, ComparisonMatrix, WinLoss,
};
pub use experiment::{
    run_experiment, CellResult, DatasetSummary, EvaluationReport, ExperimentConfig,
    NamedClassifier, NamedCorpus, TableAxis,
};
pub use metrics::{accuracy, macro_precision, paired_t_test, PairedTTest};
pub use mutation::{
    mutate_document, mutate_text, robustness, MutationOp, MutationSpec, MutationUnit,
};
pub use split::{split, split_indices, Partition, SplitPlan};
pub use synthetic::{generate_synthetic_corpus, SyntheticSpec};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid split plan: {0}")]
    InvalidPlan(String),
    #[error("category {category:?} has {size} document(s); stratified splitting needs at least 2")]
    CategoryTooSmall { category: String, size: usize },
    #[error("corpus has {0} document(s); splitting needs at least 2")]
    CorpusTooSmall(usize),
    #[error("document {0:?} has no category label")]
    UnlabeledDocument(String),
    #[error("predictions ({predictions}) and truth ({truth}) differ in length")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("accuracy of an empty prediction list is undefined")]
    EmptyInput,
    #[error("training {classifier} on {dataset}, run {run}: {source}")]
    Training {
        classifier: String,
        dataset: String,
        run: usize,
        #[source]
        source: ModelError,
    },
    #[error("comparison table has no value for {classifier} on {column}")]
    MissingCell { classifier: String, column: String },
    #[error("invalid synthetic corpus spec: {0}")]
    InvalidSynthetic(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

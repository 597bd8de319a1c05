//! Statistical content classification for data leakage prevention.
//!
//! Documents are turned into TF-IDF vectors, assigned to a category by a
//! centroid classifier (or one of the Naive Bayes / kNN baselines), and the
//! predicted category is mapped through a sensitivity policy to a remedial
//! action that is recorded in an append-only audit log.
//!
//! Module map:
//!
//! - [`corpus`]: loading labeled document trees, stop-lists and tokenization
//! - [`vectorizer`]: vocabularies, TF / IDF weighting and sparse vectors
//! - [`classifiers`]: centroid, Naive Bayes and kNN models plus persistence
//! - [`evaluation`]: seeded splits, repeated experiments, win/loss comparison,
//!   document mutation and the synthetic corpus generator
//! - [`dlp`]: policy tables, verdicts, audit logging and batch scanning

pub mod classifiers;
pub mod corpus;
pub mod dlp;
pub mod evaluation;
pub mod vectorizer;

pub use classifiers::{
    CentroidMode, CentroidModel, ClassifierKind, KnnModel, Model, ModelError, NaiveBayesModel,
    Prediction,
};
pub use corpus::{
    tokenize, CorpusError, Document, LabeledCorpus, StopList, TokenizedCorpus, TokenizedDocument,
};
pub use dlp::{
    Action, AuditLog, DataState, MatchedRule, PolicyError, PolicyRule, PolicyTable,
    ReceiverZone, SensitivityLevel, TransferContext, Verdict,
};
pub use vectorizer::{
    cosine_similarity, IdfVariant, SparseVector, TfIdfConfig, TfIdfModel, TfVariant, Vocabulary,
};

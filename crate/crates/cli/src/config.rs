//! TOML config file and flag resolution. A setting comes from the flag if
//! given, else from the config file, else from the built-in default.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use semdlp::dlp::{DataState, ReceiverZone};
use semdlp::evaluation::{MutationOp, MutationUnit, TableAxis};
use semdlp::{CentroidMode, ClassifierKind, IdfVariant, TfVariant};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Bad invocation: reported like a clap error, exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Parses a flag value with the type's serde spelling, so flags and the
/// config file accept the same tokens.
pub fn token<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[default]
    Datasets,
    Categories,
}

impl From<Axis> for TableAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Datasets => TableAxis::Datasets,
            Axis::Categories => TableAxis::Categories,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub quiet: Option<bool>,
    pub stoplist: Option<PathBuf>,
    pub classifier: ClassifierSection,
    pub train: TrainSection,
    pub evaluate: EvaluateSection,
    pub classify: ClassifySection,
    pub scan: ScanSection,
    pub mutate: MutateSection,
    pub gen_corpus: GenCorpusSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub kind: Option<ClassifierKind>,
    pub mode: Option<CentroidMode>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub tf: Option<TfVariant>,
    pub idf: Option<IdfVariant>,
    pub normalize: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub lenient: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub corpora: Option<Vec<String>>,
    pub kinds: Option<Vec<ClassifierKind>>,
    pub runs: Option<usize>,
    pub train_fraction: Option<f64>,
    pub stratified: Option<bool>,
    pub axis: Option<Axis>,
    pub report: Option<PathBuf>,
    pub tables: Option<PathBuf>,
    pub t_test: Option<bool>,
    pub lenient: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySection {
    pub model: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub model: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    pub audit_log: Option<PathBuf>,
    pub sender: Option<String>,
    pub receiver: Option<String>,
    pub data_state: Option<DataState>,
    pub receiver_zone: Option<ReceiverZone>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MutateSection {
    pub op: Option<MutationOp>,
    pub rate: Option<f64>,
    pub unit: Option<MutationUnit>,
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenCorpusSection {
    pub out: Option<PathBuf>,
    pub categories: Option<usize>,
    pub docs: Option<usize>,
    pub length: Option<usize>,
    pub topic_vocab: Option<usize>,
    pub background_vocab: Option<usize>,
    pub noise: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }
}

/// Flag, then config value, then default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Like [`pick`] for settings without a default.
pub fn require<T>(flag: Option<T>, file: Option<T>, what: &str) -> Result<T> {
    flag.or(file).ok_or_else(|| usage(format!("missing required setting {what}")))
}

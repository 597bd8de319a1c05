//! JSON model files.
//!
//! ```text
//! {"format_version":1,"kind":"centroid",
//!  "tfidf":{"tf_variant":"raw","idf_variant":"log","normalize":true,
//!           "terms":[...],"df":[...],"corpus_size":N},
//!  "params":{...}}
//! ```
//!
//! The order of `terms` defines vector indices. IDF weights are recomputed
//! from `df` on load, so a saved model predicts bit-identically after a
//! round trip.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    CentroidMode, CentroidModel, ClassifierKind, KnnModel, Model, ModelError, NaiveBayesModel,
};
use crate::vectorizer::{IdfVariant, SparseVector, TfIdfConfig, TfIdfModel, TfVariant, Vocabulary};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct TfIdfBlock {
    tf_variant: TfVariant,
    idf_variant: IdfVariant,
    normalize: bool,
    terms: Vec<String>,
    df: Vec<usize>,
    corpus_size: usize,
}

#[derive(Serialize, Deserialize)]
struct CentroidParams {
    mode: CentroidMode,
    categories: Vec<String>,
    centroids: Vec<SparseVector>,
}

#[derive(Serialize, Deserialize)]
struct NaiveBayesParams {
    alpha: f64,
    categories: Vec<String>,
    log_priors: Vec<f64>,
    log_likelihoods: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct StoredDocument {
    category: usize,
    vector: SparseVector,
}

#[derive(Serialize, Deserialize)]
struct KnnParams {
    k: usize,
    categories: Vec<String>,
    stored: Vec<StoredDocument>,
}

#[derive(Serialize)]
struct ModelFile<'a, P> {
    format_version: u64,
    kind: &'a str,
    tfidf: TfIdfBlock,
    params: P,
}

fn tfidf_block(model: &TfIdfModel) -> TfIdfBlock {
    let config = model.config();
    let vocab = model.vocabulary();
    TfIdfBlock {
        tf_variant: config.tf_variant,
        idf_variant: config.idf_variant,
        normalize: config.normalize,
        terms: vocab.terms().to_vec(),
        df: vocab.document_frequencies().to_vec(),
        corpus_size: vocab.corpus_size(),
    }
}

fn envelope<P: Serialize>(kind: ClassifierKind, tfidf: &TfIdfModel, params: P) -> serde_json::Result<String> {
    serde_json::to_string(&ModelFile {
        format_version: FORMAT_VERSION,
        kind: kind.as_str(),
        tfidf: tfidf_block(tfidf),
        params,
    })
}

/// Serializes `model` to its JSON text (single line, trailing newline).
pub fn to_json(model: &Model) -> String {
    let text = match model {
        Model::Centroid(m) => envelope(
            ClassifierKind::Centroid,
            m.tfidf(),
            CentroidParams {
                mode: m.mode(),
                categories: m.categories().to_vec(),
                centroids: m.centroids().to_vec(),
            },
        ),
        Model::NaiveBayes(m) => envelope(
            ClassifierKind::NaiveBayes,
            m.tfidf(),
            NaiveBayesParams {
                alpha: m.alpha(),
                categories: m.categories().to_vec(),
                log_priors: m.log_priors().to_vec(),
                log_likelihoods: m.log_likelihoods().to_vec(),
            },
        ),
        Model::Knn(m) => envelope(
            ClassifierKind::Knn,
            m.tfidf(),
            KnnParams {
                k: m.k(),
                categories: m.categories().to_vec(),
                stored: m
                    .stored()
                    .iter()
                    .map(|(v, c)| StoredDocument {
                        category: *c,
                        vector: v.clone(),
                    })
                    .collect(),
            },
        ),
    }
    // Every field is a plain number, string or sequence; finite floats only.
    .expect("model serialization cannot fail");
    text + "\n"
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    fs::write(path, to_json(model)).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model, ModelError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_json(&text)
}

/// Byte offset of a serde_json error position (1-based line, byte column).
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column).min(text.len())
}

fn malformed(message: impl Into<String>) -> ModelError {
    ModelError::Malformed {
        offset: None,
        message: message.into(),
    }
}

fn field<T: serde::de::DeserializeOwned>(value: &mut Value, name: &str) -> Result<T, ModelError> {
    let raw = value
        .get_mut(name)
        .map(Value::take)
        .ok_or_else(|| malformed(format!("missing field `{name}`")))?;
    serde_json::from_value(raw).map_err(|e| malformed(format!("field `{name}`: {e}")))
}

fn check_categories(categories: &[String]) -> Result<(), ModelError> {
    if categories.is_empty() {
        return Err(malformed("model has no categories"));
    }
    if categories.windows(2).any(|w| w[0] >= w[1]) {
        return Err(malformed("categories must be sorted and unique"));
    }
    Ok(())
}

fn check_vector(v: &SparseVector, dim: usize, what: &str) -> Result<(), ModelError> {
    match v.max_index() {
        Some(i) if i >= dim => Err(malformed(format!(
            "{what} references index {i} outside vocabulary of {dim} terms"
        ))),
        _ => Ok(()),
    }
}

pub fn from_json(text: &str) -> Result<Model, ModelError> {
    let mut root: Value = serde_json::from_str(text).map_err(|e| ModelError::Malformed {
        offset: Some(byte_offset(text, e.line(), e.column())),
        message: e.to_string(),
    })?;
    let version = root
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| malformed("missing or non-integer `format_version`"))?;
    if version != FORMAT_VERSION {
        return Err(ModelError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let kind: String = field(&mut root, "kind")?;
    let kind: ClassifierKind = kind.parse()?;

    let block: TfIdfBlock = field(&mut root, "tfidf")?;
    let vocabulary = Vocabulary::from_parts(block.terms, block.df, block.corpus_size)
        .map_err(|e| malformed(e.to_string()))?;
    let dim = vocabulary.len();
    let tfidf = TfIdfModel::from_vocabulary(
        vocabulary,
        TfIdfConfig {
            tf_variant: block.tf_variant,
            idf_variant: block.idf_variant,
            normalize: block.normalize,
        },
    );

    Ok(match kind {
        ClassifierKind::Centroid => {
            let p: CentroidParams = field(&mut root, "params")?;
            check_categories(&p.categories)?;
            if p.centroids.len() != p.categories.len() {
                return Err(malformed("one centroid per category required"));
            }
            for c in &p.centroids {
                check_vector(c, dim, "centroid")?;
            }
            Model::Centroid(CentroidModel::from_parts(tfidf, p.categories, p.centroids, p.mode))
        }
        ClassifierKind::NaiveBayes => {
            let p: NaiveBayesParams = field(&mut root, "params")?;
            check_categories(&p.categories)?;
            if p.alpha.is_nan() || p.alpha <= 0.0 {
                return Err(ModelError::InvalidAlpha(p.alpha));
            }
            if p.log_priors.len() != p.categories.len()
                || p.log_likelihoods.len() != p.categories.len()
                || p.log_likelihoods.iter().any(|row| row.len() != dim)
            {
                return Err(malformed("naive bayes tables do not match categories × vocabulary"));
            }
            Model::NaiveBayes(NaiveBayesModel::from_parts(
                tfidf,
                p.categories,
                p.log_priors,
                p.log_likelihoods,
                p.alpha,
            ))
        }
        ClassifierKind::Knn => {
            let p: KnnParams = field(&mut root, "params")?;
            check_categories(&p.categories)?;
            if p.k == 0 || p.k > p.stored.len() {
                return Err(ModelError::InvalidK {
                    k: p.k,
                    documents: p.stored.len(),
                });
            }
            let mut stored = Vec::with_capacity(p.stored.len());
            for s in p.stored {
                check_vector(&s.vector, dim, "stored vector")?;
                if s.category >= p.categories.len() {
                    return Err(malformed(format!("stored category index {} out of range", s.category)));
                }
                if !s.vector.is_empty() && (s.vector.norm() - 1.0).abs() > 1e-9 {
                    return Err(malformed("stored vectors must be unit length"));
                }
                stored.push((s.vector, s.category));
            }
            Model::Knn(KnnModel::from_parts(tfidf, p.categories, stored, p.k))
        }
    })
}

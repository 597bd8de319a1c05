//! Centroid, Naive Bayes and kNN document classifiers behind one
//! prediction contract, plus JSON model persistence.

mod centroid;
mod knn;
mod naive_bayes;
mod persist;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TokenizedCorpus;
use crate::vectorizer::{TfIdfConfig, TfIdfModel, VectorizerError};

pub use centroid::{CentroidMode, CentroidModel};
pub use knn::KnnModel;
pub use naive_bayes::NaiveBayesModel;
pub use persist::{from_json, load_model, save_model, to_json, FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("document {0:?} has no category label")]
    UnlabeledDocument(String),
    #[error("document {id:?} is labeled {category:?}, which is not a corpus category")]
    UnknownCategory { id: String, category: String },
    #[error("category {0:?} has no training documents")]
    EmptyCategory(String),
    #[error("training corpus has no categories")]
    NoCategories,
    #[error("smoothing constant alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("k = {k} is invalid for {documents} training documents")]
    InvalidK { k: usize, documents: usize },
    #[error(transparent)]
    Vectorizer(#[from] VectorizerError),
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },
    #[error("malformed model file{}: {message}", offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    Malformed {
        offset: Option<usize>,
        message: String,
    },
    #[error("unknown classifier kind {0:?}")]
    UnknownKind(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Outcome of classifying one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub category: String,
    pub scores: BTreeMap<String, f64>,
    /// Winning score minus runner-up score (vote share difference for kNN);
    /// 0 when there is a single category.
    pub margin: f64,
}

impl Prediction {
    /// Argmax over `scores` with ties going to the lexicographically
    /// smallest category. Panics if `categories` is empty.
    pub fn from_scores(categories: &[String], scores: &[f64]) -> Self {
        assert_eq!(categories.len(), scores.len());
        let mut order: Vec<usize> = (0..categories.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(Ordering::Equal)
                .then_with(|| categories[a].cmp(&categories[b]))
        });
        let best = order[0];
        let margin = order.get(1).map_or(0.0, |&second| scores[best] - scores[second]);
        Self {
            category: categories[best].clone(),
            scores: categories.iter().cloned().zip(scores.iter().copied()).collect(),
            margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    Centroid,
    NaiveBayes,
    Knn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [Self::Centroid, Self::NaiveBayes, Self::Knn];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Centroid => "centroid",
            Self::NaiveBayes => "naive-bayes",
            Self::Knn => "knn",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::UnknownKind(s.to_string()))
    }
}

/// Everything needed to train one classifier from a tokenized corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub tfidf: TfIdfConfig,
    pub mode: CentroidMode,
    pub k: usize,
    pub alpha: f64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        Self {
            kind,
            tfidf: TfIdfConfig::default(),
            mode: CentroidMode::default(),
            k: 5,
            alpha: 1.0,
        }
    }

    /// Fits the TF-IDF model on `corpus` and trains the configured classifier.
    pub fn train(&self, corpus: &TokenizedCorpus) -> Result<Model, ModelError> {
        let tfidf = TfIdfModel::fit(&corpus.documents, self.tfidf)?;
        Ok(match self.kind {
            ClassifierKind::Centroid => {
                Model::Centroid(CentroidModel::train(corpus, tfidf, self.mode)?)
            }
            ClassifierKind::NaiveBayes => {
                Model::NaiveBayes(NaiveBayesModel::train(corpus, tfidf, self.alpha)?)
            }
            ClassifierKind::Knn => Model::Knn(KnnModel::train(corpus, tfidf, self.k)?),
        })
    }
}

/// Any trained classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Centroid(CentroidModel),
    NaiveBayes(NaiveBayesModel),
    Knn(KnnModel),
}

impl Model {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Model::Centroid(_) => ClassifierKind::Centroid,
            Model::NaiveBayes(_) => ClassifierKind::NaiveBayes,
            Model::Knn(_) => ClassifierKind::Knn,
        }
    }

    pub fn categories(&self) -> &[String] {
        match self {
            Model::Centroid(m) => m.categories(),
            Model::NaiveBayes(m) => m.categories(),
            Model::Knn(m) => m.categories(),
        }
    }

    pub fn tfidf(&self) -> &TfIdfModel {
        match self {
            Model::Centroid(m) => m.tfidf(),
            Model::NaiveBayes(m) => m.tfidf(),
            Model::Knn(m) => m.tfidf(),
        }
    }

    pub fn predict_tokens(&self, tokens: &[String]) -> Prediction {
        match self {
            Model::Centroid(m) => m.predict_tokens(tokens),
            Model::NaiveBayes(m) => m.predict(tokens),
            Model::Knn(m) => m.predict_tokens(tokens),
        }
    }
}

/// Maps every training document to its category index and checks that no
/// category is left without documents.
pub(crate) fn category_assignments(corpus: &TokenizedCorpus) -> Result<Vec<usize>, ModelError> {
    if corpus.categories.is_empty() {
        return Err(ModelError::NoCategories);
    }
    let mut sizes = vec![0usize; corpus.categories.len()];
    let labels = corpus
        .documents
        .iter()
        .map(|doc| {
            let cat = doc
                .category
                .as_ref()
                .ok_or_else(|| ModelError::UnlabeledDocument(doc.id.clone()))?;
            let idx = corpus
                .categories
                .iter()
                .position(|c| c == cat)
                .ok_or_else(|| ModelError::UnknownCategory {
                    id: doc.id.clone(),
                    category: cat.clone(),
                })?;
            sizes[idx] += 1;
            Ok(idx)
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    if let Some(empty) = sizes.iter().position(|&n| n == 0) {
        return Err(ModelError::EmptyCategory(corpus.categories[empty].clone()));
    }
    Ok(labels)
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn prediction_argmax_and_margin() {
        let p = Prediction::from_scores(&names(&["a", "b", "c"]), &[0.2, 0.9, 0.5]);
        assert_eq!(p.category, "b");
        assert!((p.margin - 0.4).abs() < 1e-15);
    }

    #[test]
    fn prediction_ties_go_lexicographic() {
        let p = Prediction::from_scores(&names(&["b", "a"]), &[0.0, 0.0]);
        assert_eq!(p.category, "a");
        assert_eq!(p.margin, 0.0);
        let single = Prediction::from_scores(&names(&["only"]), &[-3.0]);
        assert_eq!(single.margin, 0.0);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("naive-bayes".parse::<ClassifierKind>().unwrap(), ClassifierKind::NaiveBayes);
        assert!(matches!("c45".parse::<ClassifierKind>(), Err(ModelError::UnknownKind(_))));
    }

    #[test]
    fn training_rejects_bad_labels() {
        let mut c = disjoint();
        c.documents[0].category = None;
        assert!(matches!(category_assignments(&c), Err(ModelError::UnlabeledDocument(id)) if id == "a1"));
        let mut c = disjoint();
        c.categories.push("zeta".into());
        assert!(matches!(category_assignments(&c), Err(ModelError::EmptyCategory(z)) if z == "zeta"));
        let mut c = disjoint();
        c.documents[0].category = Some("omega".into());
        assert!(matches!(category_assignments(&c), Err(ModelError::UnknownCategory { .. })));
    }

    #[test]
    fn all_classifiers_fit_disjoint_vocabularies() {
        let corpus = disjoint();
        for kind in ClassifierKind::ALL {
            let mut spec = ClassifierSpec::new(kind);
            spec.k = 1;
            let model = spec.train(&corpus).unwrap();
            assert_eq!(model.kind(), kind);
            for doc in &corpus.documents {
                let p = model.predict_tokens(&doc.tokens);
                assert_eq!(Some(&p.category), doc.category.as_ref(), "{kind} on {}", doc.id);
            }
        }
    }

    #[test]
    fn all_classifiers_fit_disjoint_vocabularies_default_k() {
        // k = 5 over 8 documents: cross-category similarities are zero, so
        // only same-category documents qualify as neighbors.
        let corpus = disjoint();
        let model = ClassifierSpec::new(ClassifierKind::Knn).train(&corpus).unwrap();
        for doc in &corpus.documents {
            assert_eq!(Some(&model.predict_tokens(&doc.tokens).category), doc.category.as_ref());
        }
    }
}

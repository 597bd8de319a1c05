use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{category_assignments, ModelError, Prediction};
use crate::corpus::TokenizedCorpus;
use crate::vectorizer::{cosine_similarity, SparseVector, TfIdfModel};

/// How a test vector is scored against a category centroid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CentroidMode {
    /// Cosine between the test vector and the centroid.
    #[default]
    CentroidCosine,
    /// Dot product of the unit test vector with the centroid, which is the
    /// mean cosine similarity to every training document of the category.
    MeanCosine,
}

impl fmt::Display for CentroidMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CentroidMode::CentroidCosine => "centroid-cosine",
            CentroidMode::MeanCosine => "mean-cosine",
        })
    }
}

/// One centroid per category: the arithmetic mean of the unit-length TF-IDF
/// vectors of that category's training documents. Centroids are kept
/// unnormalized; their norm is reported by [`CentroidModel::tightness`].
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    tfidf: TfIdfModel,
    categories: Vec<String>,
    centroids: Vec<SparseVector>,
    mode: CentroidMode,
}

impl CentroidModel {
    pub fn train(
        corpus: &TokenizedCorpus,
        tfidf: TfIdfModel,
        mode: CentroidMode,
    ) -> Result<Self, ModelError> {
        let labels = category_assignments(corpus)?;
        let mut sums: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); corpus.categories.len()];
        let mut sizes = vec![0usize; corpus.categories.len()];
        for (doc, &cat) in corpus.documents.iter().zip(&labels) {
            sizes[cat] += 1;
            for (i, w) in tfidf.transform(&doc.tokens).normalized().iter() {
                *sums[cat].entry(i).or_insert(0.0) += w;
            }
        }
        let centroids = sums
            .into_iter()
            .zip(sizes)
            .map(|(sum, n)| SparseVector::from_pairs(sum.into_iter().map(|(i, w)| (i, w / n as f64))))
            .collect();
        Ok(Self {
            tfidf,
            categories: corpus.categories.clone(),
            centroids,
            mode,
        })
    }

    pub(crate) fn from_parts(
        tfidf: TfIdfModel,
        categories: Vec<String>,
        centroids: Vec<SparseVector>,
        mode: CentroidMode,
    ) -> Self {
        Self {
            tfidf,
            categories,
            centroids,
            mode,
        }
    }

    pub fn predict(&self, vector: &SparseVector) -> Prediction {
        let scores: Vec<f64> = match self.mode {
            CentroidMode::CentroidCosine => self
                .centroids
                .iter()
                .map(|c| cosine_similarity(vector, c))
                .collect(),
            CentroidMode::MeanCosine => {
                let unit = vector.normalized();
                self.centroids.iter().map(|c| unit.dot(c)).collect()
            }
        };
        Prediction::from_scores(&self.categories, &scores)
    }

    pub fn predict_tokens(&self, tokens: &[String]) -> Prediction {
        self.predict(&self.tfidf.transform(tokens))
    }

    /// Norm of the category centroid. Values near 1 mean the category's
    /// documents point in nearly the same direction.
    pub fn tightness(&self, category: &str) -> Option<f64> {
        self.categories
            .iter()
            .position(|c| c == category)
            .map(|i| self.centroids[i].norm())
    }

    pub fn centroid(&self, category: &str) -> Option<&SparseVector> {
        self.categories
            .iter()
            .position(|c| c == category)
            .map(|i| &self.centroids[i])
    }

    pub fn centroids(&self) -> &[SparseVector] {
        &self.centroids
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn mode(&self) -> CentroidMode {
        self.mode
    }

    pub fn tfidf(&self) -> &TfIdfModel {
        &self.tfidf
    }
}

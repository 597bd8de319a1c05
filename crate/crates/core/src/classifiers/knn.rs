use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::{category_assignments, ModelError, Prediction};
use crate::corpus::TokenizedCorpus;
use crate::vectorizer::{cosine_similarity, SparseVector, TfIdfModel};

/// k-nearest-neighbour classifier over unit TF-IDF vectors.
///
/// Neighbours are the `k` most cosine-similar training documents with
/// nonzero similarity; equal similarities prefer the earlier training
/// document. The category with most votes wins, then the larger summed
/// similarity, then the lexicographically smaller name.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    tfidf: TfIdfModel,
    categories: Vec<String>,
    /// Unit-length (or empty) training vectors with their category index.
    stored: Vec<(SparseVector, usize)>,
    k: usize,
}

impl KnnModel {
    pub fn train(corpus: &TokenizedCorpus, tfidf: TfIdfModel, k: usize) -> Result<Self, ModelError> {
        if k == 0 || k > corpus.documents.len() {
            return Err(ModelError::InvalidK {
                k,
                documents: corpus.documents.len(),
            });
        }
        let labels = category_assignments(corpus)?;
        let stored = corpus
            .documents
            .iter()
            .zip(labels)
            .map(|(doc, cat)| (tfidf.transform(&doc.tokens).normalized(), cat))
            .collect();
        Ok(Self {
            tfidf,
            categories: corpus.categories.clone(),
            stored,
            k,
        })
    }

    pub(crate) fn from_parts(
        tfidf: TfIdfModel,
        categories: Vec<String>,
        stored: Vec<(SparseVector, usize)>,
        k: usize,
    ) -> Self {
        Self {
            tfidf,
            categories,
            stored,
            k,
        }
    }

    /// Indices and similarities of the neighbours of `vector`, nearest first.
    pub fn neighbors(&self, vector: &SparseVector) -> Vec<(usize, f64)> {
        let mut sims: Vec<(usize, f64)> = self
            .stored
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (i, cosine_similarity(vector, v)))
            .filter(|&(_, s)| s > 0.0)
            .collect();
        sims.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        sims.truncate(self.k);
        sims
    }

    pub fn predict(&self, vector: &SparseVector) -> Prediction {
        let n = self.categories.len();
        let mut votes = vec![0usize; n];
        let mut sums = vec![0.0f64; n];
        for (i, sim) in self.neighbors(vector) {
            let cat = self.stored[i].1;
            votes[cat] += 1;
            sums[cat] += sim;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            votes[b]
                .cmp(&votes[a])
                .then(sums[b].partial_cmp(&sums[a]).unwrap_or(Ordering::Equal))
                .then_with(|| self.categories[a].cmp(&self.categories[b]))
        });
        let winner = order[0];
        let margin = order
            .get(1)
            .map_or(0.0, |&r| (votes[winner] - votes[r]) as f64 / self.k as f64);
        Prediction {
            category: self.categories[winner].clone(),
            scores: self
                .categories
                .iter()
                .cloned()
                .zip(sums)
                .collect::<BTreeMap<_, _>>(),
            margin,
        }
    }

    pub fn predict_tokens(&self, tokens: &[String]) -> Prediction {
        self.predict(&self.tfidf.transform(tokens))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn stored(&self) -> &[(SparseVector, usize)] {
        &self.stored
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn tfidf(&self) -> &TfIdfModel {
        &self.tfidf
    }
}

//! Vocabulary construction, TF / IDF weighting and sparse vector algebra.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VectorizerError {
    #[error("cannot build a vocabulary from zero documents")]
    EmptyInput,
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
}

/// Sparse real vector stored as `(index, weight)` pairs sorted by index.
/// Zero weights are never stored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, f64)>", into = "Vec<(usize, f64)>")]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl TryFrom<Vec<(usize, f64)>> for SparseVector {
    type Error = String;

    fn try_from(entries: Vec<(usize, f64)>) -> Result<Self, Self::Error> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err("sparse vector indices must be strictly increasing".into());
        }
        if entries.iter().any(|&(_, w)| w == 0.0 || !w.is_finite()) {
            return Err("sparse vector weights must be finite and nonzero".into());
        }
        Ok(Self { entries })
    }
}

impl From<SparseVector> for Vec<(usize, f64)> {
    fn from(v: SparseVector) -> Self {
        v.entries
    }
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from unordered pairs. Repeated indices are summed and
    /// resulting zeros dropped.
    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, w) in pairs {
            *acc.entry(i).or_insert(0.0) += w;
        }
        Self {
            entries: acc.into_iter().filter(|&(_, w)| w != 0.0).collect(),
        }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self {
            entries: values
                .iter()
                .enumerate()
                .filter(|&(_, &w)| w != 0.0)
                .map(|(i, &w)| (i, w))
                .collect(),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, w) in &self.entries {
            out[i] = w;
        }
        out
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest stored index, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut sum = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                Ordering::Less => {
                    a.next();
                }
                Ordering::Greater => {
                    b.next();
                }
                Ordering::Equal => {
                    sum += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        sum
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        if factor == 0.0 {
            return SparseVector::new();
        }
        Self {
            entries: self.entries.iter().map(|&(i, w)| (i, w * factor)).collect(),
        }
    }

    /// Unit-length copy; the empty vector stays empty.
    pub fn normalized(&self) -> SparseVector {
        let norm = self.norm();
        if norm == 0.0 {
            return self.clone();
        }
        Self {
            entries: self.entries.iter().map(|&(i, w)| (i, w / norm)).collect(),
        }
    }
}

/// Cosine of the angle between `a` and `b`; 0 when either is all-zero.
pub fn cosine_similarity(a: &SparseVector, b: &SparseVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(-1.0, 1.0)
}

/// Term ↔ index mapping with document frequencies.
///
/// Terms are indexed in lexicographic order so the same training documents
/// always yield the same vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    document_frequency: Vec<usize>,
    corpus_size: usize,
}

impl Vocabulary {
    /// Counts, for every term, the number of distinct documents containing it.
    pub fn build<'a, I, D>(documents: I) -> Result<Self, VectorizerError>
    where
        I: IntoIterator<Item = &'a D>,
        D: AsRef<[String]> + 'a + ?Sized,
    {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        let mut corpus_size = 0;
        for doc in documents {
            corpus_size += 1;
            let distinct: HashSet<&str> = doc.as_ref().iter().map(String::as_str).collect();
            for term in distinct {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        if corpus_size == 0 {
            return Err(VectorizerError::EmptyInput);
        }
        let (terms, document_frequency): (Vec<String>, Vec<usize>) =
            df.into_iter().map(|(t, n)| (t.to_owned(), n)).unzip();
        Ok(Self::assemble(terms, document_frequency, corpus_size))
    }

    /// Rebuilds a vocabulary from persisted parts, checking its invariants.
    pub fn from_parts(
        terms: Vec<String>,
        document_frequency: Vec<usize>,
        corpus_size: usize,
    ) -> Result<Self, VectorizerError> {
        let invalid = |m: String| Err(VectorizerError::InvalidVocabulary(m));
        if terms.len() != document_frequency.len() {
            return invalid(format!(
                "{} terms but {} document frequencies",
                terms.len(),
                document_frequency.len()
            ));
        }
        if corpus_size == 0 {
            return invalid("corpus size must be at least 1".into());
        }
        if let Some(w) = terms.windows(2).find(|w| w[0] >= w[1]) {
            return invalid(format!("terms not strictly sorted at {:?}", w[1]));
        }
        if let Some((t, &n)) = terms
            .iter()
            .zip(&document_frequency)
            .find(|(_, &n)| n == 0 || n > corpus_size)
        {
            return invalid(format!(
                "document frequency {n} of {t:?} outside 1..={corpus_size}"
            ));
        }
        Ok(Self::assemble(terms, document_frequency, corpus_size))
    }

    fn assemble(terms: Vec<String>, document_frequency: Vec<usize>, corpus_size: usize) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            terms,
            index,
            document_frequency,
            corpus_size,
        }
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self, index: usize) -> usize {
        self.document_frequency[index]
    }

    pub fn document_frequencies(&self) -> &[usize] {
        &self.document_frequency
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// In-vocabulary occurrence counts keyed by term index.
    pub fn counts(&self, tokens: &[String]) -> BTreeMap<usize, u32> {
        let mut counts = BTreeMap::new();
        for idx in tokens.iter().filter_map(|t| self.index_of(t)) {
            *counts.entry(idx).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TfVariant {
    /// Raw occurrence count.
    #[default]
    Raw,
    /// `1 + ln(count)`.
    Log,
}

/// IDF weighting. `Raw` is the plain ratio `N / df` with no logarithm;
/// `Log` is `ln(N / df)`; `Smooth` is `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdfVariant {
    Raw,
    #[default]
    Log,
    Smooth,
}

impl fmt::Display for TfVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TfVariant::Raw => "raw",
            TfVariant::Log => "log",
        })
    }
}

impl fmt::Display for IdfVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdfVariant::Raw => "raw",
            IdfVariant::Log => "log",
            IdfVariant::Smooth => "smooth",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfIdfConfig {
    pub tf_variant: TfVariant,
    pub idf_variant: IdfVariant,
    pub normalize: bool,
}

impl Default for TfIdfConfig {
    fn default() -> Self {
        Self {
            tf_variant: TfVariant::Raw,
            idf_variant: IdfVariant::Log,
            normalize: true,
        }
    }
}

pub fn term_frequency(tokens: &[String], vocabulary: &Vocabulary, variant: TfVariant) -> SparseVector {
    let entries = vocabulary
        .counts(tokens)
        .into_iter()
        .map(|(i, n)| {
            let n = f64::from(n);
            match variant {
                TfVariant::Raw => (i, n),
                TfVariant::Log => (i, 1.0 + n.ln()),
            }
        })
        .collect();
    SparseVector { entries }
}

pub fn inverse_document_frequency(vocabulary: &Vocabulary, variant: IdfVariant) -> Vec<f64> {
    let n = vocabulary.corpus_size() as f64;
    vocabulary
        .document_frequencies()
        .iter()
        .map(|&df| {
            let df = df as f64;
            match variant {
                IdfVariant::Raw => n / df,
                IdfVariant::Log => (n / df).ln(),
                IdfVariant::Smooth => ((1.0 + n) / (1.0 + df)).ln() + 1.0,
            }
        })
        .collect()
}

/// A fitted vocabulary with its IDF weights and weighting configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    config: TfIdfConfig,
}

impl TfIdfModel {
    pub fn fit<'a, I, D>(documents: I, config: TfIdfConfig) -> Result<Self, VectorizerError>
    where
        I: IntoIterator<Item = &'a D>,
        D: AsRef<[String]> + 'a + ?Sized,
    {
        Ok(Self::from_vocabulary(Vocabulary::build(documents)?, config))
    }

    pub fn from_vocabulary(vocabulary: Vocabulary, config: TfIdfConfig) -> Self {
        let idf = inverse_document_frequency(&vocabulary, config.idf_variant);
        Self {
            vocabulary,
            idf,
            config,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn config(&self) -> TfIdfConfig {
        self.config
    }

    /// TF-IDF vector of a token sequence. Out-of-vocabulary tokens are
    /// dropped; with `normalize` the result has unit length unless empty.
    pub fn transform(&self, tokens: &[String]) -> SparseVector {
        let tf = term_frequency(tokens, &self.vocabulary, self.config.tf_variant);
        let weighted = SparseVector {
            entries: tf
                .iter()
                .map(|(i, w)| (i, w * self.idf[i]))
                .filter(|&(_, w)| w != 0.0)
                .collect(),
        };
        if self.config.normalize {
            weighted.normalized()
        } else {
            weighted
        }
    }
}

impl AsRef<[String]> for crate::corpus::TokenizedDocument {
    fn as_ref(&self) -> &[String] {
        &self.tokens
    }
}

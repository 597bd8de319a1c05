use super::{category_assignments, ModelError, Prediction};
use crate::corpus::TokenizedCorpus;
use crate::vectorizer::TfIdfModel;

/// Multinomial Naive Bayes over raw in-vocabulary token counts with additive
/// (Laplace for `alpha = 1`) smoothing. Probabilities are stored as natural
/// logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    tfidf: TfIdfModel,
    categories: Vec<String>,
    log_priors: Vec<f64>,
    /// `log_likelihoods[c][t]` = ln P(term t | category c).
    log_likelihoods: Vec<Vec<f64>>,
    alpha: f64,
}

impl NaiveBayesModel {
    /// Only the vocabulary of `tfidf` is used for scoring; the model is kept
    /// so every classifier persists the same vectorizer block.
    pub fn train(corpus: &TokenizedCorpus, tfidf: TfIdfModel, alpha: f64) -> Result<Self, ModelError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ModelError::InvalidAlpha(alpha));
        }
        let labels = category_assignments(corpus)?;
        let vocab = tfidf.vocabulary();
        let n_terms = vocab.len();
        let n_cats = corpus.categories.len();

        let mut doc_counts = vec![0usize; n_cats];
        let mut term_counts = vec![vec![0u64; n_terms]; n_cats];
        let mut totals = vec![0u64; n_cats];
        for (doc, &cat) in corpus.documents.iter().zip(&labels) {
            doc_counts[cat] += 1;
            for (idx, n) in vocab.counts(&doc.tokens) {
                term_counts[cat][idx] += u64::from(n);
                totals[cat] += u64::from(n);
            }
        }

        let n_docs = corpus.documents.len() as f64;
        let log_priors = doc_counts.iter().map(|&n| (n as f64 / n_docs).ln()).collect();
        let log_likelihoods = term_counts
            .iter()
            .zip(&totals)
            .map(|(counts, &total)| {
                let denom = total as f64 + alpha * n_terms as f64;
                counts
                    .iter()
                    .map(|&n| ((n as f64 + alpha) / denom).ln())
                    .collect()
            })
            .collect();

        Ok(Self {
            tfidf,
            categories: corpus.categories.clone(),
            log_priors,
            log_likelihoods,
            alpha,
        })
    }

    pub(crate) fn from_parts(
        tfidf: TfIdfModel,
        categories: Vec<String>,
        log_priors: Vec<f64>,
        log_likelihoods: Vec<Vec<f64>>,
        alpha: f64,
    ) -> Self {
        Self {
            tfidf,
            categories,
            log_priors,
            log_likelihoods,
            alpha,
        }
    }

    /// Scores `ln P(c) + Σ count(t)·ln P(t|c)`, skipping unknown tokens.
    /// Counts are aggregated per term before summing, so the result does not
    /// depend on token order.
    pub fn predict(&self, tokens: &[String]) -> Prediction {
        let counts = self.tfidf.vocabulary().counts(tokens);
        let scores: Vec<f64> = self
            .log_priors
            .iter()
            .zip(&self.log_likelihoods)
            .map(|(&prior, lik)| {
                prior
                    + counts
                        .iter()
                        .map(|(&idx, &n)| f64::from(n) * lik[idx])
                        .sum::<f64>()
            })
            .collect();
        Prediction::from_scores(&self.categories, &scores)
    }

    pub fn log_priors(&self) -> &[f64] {
        &self.log_priors
    }

    pub fn log_likelihoods(&self) -> &[Vec<f64>] {
        &self.log_likelihoods
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn tfidf(&self) -> &TfIdfModel {
        &self.tfidf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::test_support::*;
    use crate::vectorizer::TfIdfConfig;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn train(corpus: &TokenizedCorpus, alpha: f64) -> NaiveBayesModel {
        let tfidf = TfIdfModel::fit(&corpus.documents, TfIdfConfig::default()).unwrap();
        NaiveBayesModel::train(corpus, tfidf, alpha).unwrap()
    }

    #[test]
    fn laplace_likelihood_arithmetic() {
        // |V| = 2 (a, b); category "c" has counts a:3, b:1.
        let corpus = corpus(vec![doc("1", "c", "a a a b")]);
        let model = train(&corpus, 1.0);
        assert!((model.log_likelihoods()[0][0].exp() - 4.0 / 6.0).abs() < 1e-9);
        assert!((model.log_likelihoods()[0][1].exp() - 2.0 / 6.0).abs() < 1e-9);
        assert_eq!(model.log_priors()[0], 0.0);
    }

    #[test]
    fn single_category_always_wins() {
        let corpus = corpus(vec![doc("1", "only", "a b"), doc("2", "only", "c")]);
        let model = train(&corpus, 1.0);
        assert_eq!(model.predict(&["zzz".to_string(), "a".to_string()]).category, "only");
        assert_eq!(model.predict(&[]).margin, 0.0);
    }

    #[test]
    fn empty_tokens_pick_largest_prior() {
        let corpus = corpus(vec![
            doc("1", "a", "x"),
            doc("2", "b", "y"),
            doc("3", "b", "y z"),
        ]);
        let p = train(&corpus, 1.0).predict(&[]);
        assert_eq!(p.category, "b");
        assert!((p.scores["b"] - (2.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_alpha_and_empty_category() {
        let c = disjoint();
        let tfidf = TfIdfModel::fit(&c.documents, TfIdfConfig::default()).unwrap();
        for alpha in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                NaiveBayesModel::train(&c, tfidf.clone(), alpha),
                Err(ModelError::InvalidAlpha(_))
            ));
        }
        let mut c2 = c.clone();
        c2.categories.push("empty".into());
        assert!(matches!(
            NaiveBayesModel::train(&c2, tfidf, 1.0),
            Err(ModelError::EmptyCategory(_))
        ));
    }

    /// Independent recount oracle: term counts via string matching, no
    /// vocabulary indices.
    fn oracle_likelihood(corpus: &TokenizedCorpus, cat: &str, term: &str, alpha: f64, vocab: usize) -> f64 {
        let tokens: Vec<&String> = corpus
            .documents
            .iter()
            .filter(|d| d.category.as_deref() == Some(cat))
            .flat_map(|d| d.tokens.iter())
            .collect();
        let count = tokens.iter().filter(|t| t.as_str() == term).count() as f64;
        (count + alpha) / (tokens.len() as f64 + alpha * vocab as f64)
    }

    fn small_corpus() -> impl Strategy<Value = TokenizedCorpus> {
        proptest::collection::vec(
            (prop_oneof![Just("x"), Just("y"), Just("z")], proptest::collection::vec("[a-f]", 0..8)),
            3..15,
        )
        .prop_filter("every category needs a document", |docs| {
            ["x", "y", "z"].iter().all(|c| docs.iter().any(|(d, _)| d == c))
        })
        .prop_map(|docs| {
            corpus(
                docs.into_iter()
                    .enumerate()
                    .map(|(i, (cat, toks))| doc(&i.to_string(), cat, &toks.join(" ")))
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn likelihoods_match_recount(c in small_corpus(), alpha in 0.1..3.0f64) {
            let model = train(&c, alpha);
            let vocab = model.tfidf().vocabulary().clone();
            for (ci, cat) in c.categories.iter().enumerate() {
                let total: f64 = model.log_likelihoods()[ci].iter().map(|l| l.exp()).sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
                for (ti, term) in vocab.terms().iter().enumerate() {
                    let expected = oracle_likelihood(&c, cat, term, alpha, vocab.len());
                    prop_assert!((model.log_likelihoods()[ci][ti].exp() - expected).abs() < 1e-12);
                }
            }
            let prior_sum: f64 = model.log_priors().iter().map(|p| p.exp()).sum();
            prop_assert!((prior_sum - 1.0).abs() < 1e-9);
        }

        #[test]
        fn order_invariant(c in small_corpus(), query in proptest::collection::vec("[a-h]", 0..20), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let model = train(&c, 1.0);
            let mut shuffled = query.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(model.predict(&query), model.predict(&shuffled));
        }
    }

    #[test]
    fn predictions_match_direct_probability_product() {
        // 50 documents over 3 categories with overlapping vocabularies, then
        // compare against Π P(t|c)·P(c) computed without logarithms.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let words = ["aa", "bb", "cc", "dd", "ee", "ff", "gg"];
        let cats = ["x", "y", "z"];
        let docs: Vec<_> = (0..50)
            .map(|i| {
                let cat = cats[i % 3];
                // Category-dependent skew so the classes differ.
                let text: Vec<&str> = (0..rng.random_range(1..12))
                    .map(|_| {
                        let j = (rng.random_range(0..words.len()) + (i % 3) * rng.random_range(0..2)) % words.len();
                        words[j]
                    })
                    .collect();
                doc(&format!("d{i}"), cat, &text.join(" "))
            })
            .collect();
        let c = corpus(docs);
        let model = train(&c, 1.0);
        let vocab_size = model.tfidf().vocabulary().len();
        for d in c.documents.iter().filter(|d| d.tokens.len() <= 20) {
            let mut probs = BTreeMap::new();
            for cat in cats {
                let n_cat = c.documents.iter().filter(|x| x.category.as_deref() == Some(cat)).count();
                let mut p = n_cat as f64 / c.documents.len() as f64;
                for t in &d.tokens {
                    p *= oracle_likelihood(&c, cat, t, 1.0, vocab_size);
                }
                probs.insert(cat, p);
            }
            let best = probs
                .iter()
                .fold(("", -1.0), |acc, (&c, &p)| if p > acc.1 { (c, p) } else { acc })
                .0;
            assert_eq!(model.predict(&d.tokens).category, best, "{}", d.id);
        }
    }
}

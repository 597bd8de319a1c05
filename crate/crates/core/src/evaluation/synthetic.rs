use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{Document, LabeledCorpus};

const WORDS_PER_LINE: usize = 20;
const LINES_PER_PARAGRAPH: usize = 5;

/// Parameters of a generated corpus. Category `c` owns the topic words
/// `<category>t<j>`; the shared background pool is `bg<j>`. Both forms are
/// single alphanumeric tokens, so tokenization leaves them intact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub categories: usize,
    pub docs_per_category: usize,
    pub doc_length: usize,
    pub topic_vocab_size: usize,
    pub background_vocab_size: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            categories: 4,
            docs_per_category: 50,
            doc_length: 200,
            topic_vocab_size: 100,
            background_vocab_size: 500,
            noise: 0.0,
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidSynthetic(m.into()));
        if !(0.0..=1.0).contains(&self.noise) {
            return bad("noise must lie in [0, 1]");
        }
        if self.categories == 0 || self.docs_per_category == 0 || self.doc_length == 0 {
            return bad("categories, docs per category and document length must be positive");
        }
        if self.noise < 1.0 && self.topic_vocab_size == 0 {
            return bad("topic vocabulary is empty");
        }
        if self.noise > 0.0 && self.background_vocab_size == 0 {
            return bad("background vocabulary is empty");
        }
        Ok(())
    }

    pub fn category_name(&self, c: usize) -> String {
        let width = (self.categories.max(1) - 1).to_string().len().max(2);
        format!("cat{c:0width$}")
    }

    pub fn topic_word(&self, c: usize, j: usize) -> String {
        format!("{}t{j}", self.category_name(c))
    }

    pub fn topic_words(&self, c: usize) -> Vec<String> {
        (0..self.topic_vocab_size).map(|j| self.topic_word(c, j)).collect()
    }

    pub fn background_words(&self) -> Vec<String> {
        (0..self.background_vocab_size).map(|j| format!("bg{j}")).collect()
    }
}

/// Builds the corpus with one seeded stream, drawing categories, documents
/// and words in order. Each word comes from the background pool with
/// probability `noise`, otherwise from the document's topic pool, uniformly
/// within the pool. Lines hold 20 words and a blank line follows every
/// fifth line. Ids are `<category>/doc<i>.txt`.
pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> Result<LabeledCorpus, EvalError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let background = spec.background_words();
    let width = (spec.docs_per_category - 1).to_string().len().max(3);
    let mut docs = Vec::with_capacity(spec.categories * spec.docs_per_category);
    for c in 0..spec.categories {
        let cat = spec.category_name(c);
        let topic = spec.topic_words(c);
        for d in 0..spec.docs_per_category {
            let mut text = String::new();
            for w in 0..spec.doc_length {
                if w > 0 {
                    text.push_str(if w % (WORDS_PER_LINE * LINES_PER_PARAGRAPH) == 0 {
                        "\n\n"
                    } else if w % WORDS_PER_LINE == 0 {
                        "\n"
                    } else {
                        " "
                    });
                }
                let word = if rng.random::<f64>() < spec.noise {
                    &background[rng.random_range(0..background.len())]
                } else {
                    &topic[rng.random_range(0..topic.len())]
                };
                text.push_str(word);
            }
            text.push('\n');
            docs.push(Document::labeled(format!("{cat}/doc{d:0width$}.txt"), text, cat.clone()));
        }
    }
    Ok(LabeledCorpus::from_documents(docs)?)
}

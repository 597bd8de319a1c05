use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::Model;
use crate::corpus::{tokenize, Document, StopList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationOp {
    Insert,
    Delete,
    Exchange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationUnit {
    #[default]
    Word,
    Line,
    Paragraph,
}

macro_rules! lowercase_names {
    ($t:ty { $($v:ident => $s:literal),* }) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$v => $s),* })
            }
        }
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.to_ascii_lowercase().as_str() {
                    $($s => Ok(Self::$v),)*
                    _ => Err(format!("unknown {} {s:?}", stringify!($t))),
                }
            }
        }
    };
}

lowercase_names!(MutationOp { Insert => "insert", Delete => "delete", Exchange => "exchange" });
lowercase_names!(MutationUnit { Word => "word", Line => "line", Paragraph => "paragraph" });

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationSpec {
    pub operation: MutationOp,
    /// Clamped to `[0, 1]` when applied.
    pub rate: f64,
    pub unit: MutationUnit,
    pub seed: u64,
}

impl MutationSpec {
    pub fn new(operation: MutationOp, rate: f64, unit: MutationUnit, seed: u64) -> Self {
        Self { operation, rate, unit, seed }
    }

    fn affected(&self, n: usize) -> usize {
        (self.rate.clamp(0.0, 1.0) * n as f64).ceil() as usize
    }
}

/// Splits text into units. Words and lines are what `split_whitespace` and
/// `lines` give; a paragraph is a run of non-blank lines.
fn units(text: &str, unit: MutationUnit) -> Vec<String> {
    match unit {
        MutationUnit::Word => text.split_whitespace().map(str::to_string).collect(),
        MutationUnit::Line => text.lines().map(str::to_string).collect(),
        MutationUnit::Paragraph => {
            let mut out = Vec::new();
            let mut cur: Vec<&str> = Vec::new();
            for line in text.lines() {
                if line.trim().is_empty() {
                    if !cur.is_empty() {
                        out.push(cur.join("\n"));
                        cur.clear();
                    }
                } else {
                    cur.push(line);
                }
            }
            if !cur.is_empty() {
                out.push(cur.join("\n"));
            }
            out
        }
    }
}

fn separator(unit: MutationUnit) -> &'static str {
    match unit {
        MutationUnit::Word => " ",
        MutationUnit::Line => "\n",
        MutationUnit::Paragraph => "\n\n",
    }
}

/// Applies `spec` to `text`. Inserted units are built from `vocabulary`:
/// single words for the word unit, otherwise runs of words as long as the
/// document's mean words per unit. Exchange swaps `min(⌈rate·n⌉, ⌊n/2⌋)`
/// disjoint pairs. The text is returned unchanged when nothing is affected.
pub fn mutate_text(text: &str, spec: &MutationSpec, vocabulary: &[String]) -> String {
    let mut parts = units(text, spec.unit);
    let n = parts.len();
    let count = spec.affected(n);
    if count == 0 || (spec.operation == MutationOp::Insert && vocabulary.is_empty()) {
        return text.to_string();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.operation {
        MutationOp::Insert => {
            let words_per_unit = match spec.unit {
                MutationUnit::Word => 1,
                _ => {
                    let words = text.split_whitespace().count();
                    ((words as f64 / n as f64).round() as usize).max(1)
                }
            };
            for _ in 0..count {
                let unit: Vec<&str> = (0..words_per_unit)
                    .map(|_| vocabulary[rng.random_range(0..vocabulary.len())].as_str())
                    .collect();
                let at = rng.random_range(0..=parts.len());
                parts.insert(at, unit.join(" "));
            }
        }
        MutationOp::Delete => {
            let mut doomed = sample(&mut rng, n, count.min(n)).into_vec();
            doomed.sort_unstable();
            for i in doomed.into_iter().rev() {
                parts.remove(i);
            }
        }
        MutationOp::Exchange => {
            let pairs = count.min(n / 2);
            if pairs == 0 {
                return text.to_string();
            }
            let picked = sample(&mut rng, n, 2 * pairs).into_vec();
            for pair in picked.chunks(2) {
                parts.swap(pair[0], pair[1]);
            }
        }
    }
    parts.join(separator(spec.unit))
}

pub fn mutate_document(doc: &Document, spec: &MutationSpec, vocabulary: &[String]) -> Document {
    Document {
        text: mutate_text(&doc.text, spec, vocabulary),
        ..doc.clone()
    }
}

/// Fraction of documents whose predicted category is unchanged by the
/// mutation. Document `i` is mutated with seed `spec.seed + i` so documents
/// are not all altered at the same positions. An empty list gives 1.0.
pub fn robustness(
    model: &Model,
    documents: &[Document],
    spec: &MutationSpec,
    vocabulary: &[String],
    stoplist: &StopList,
) -> f64 {
    if documents.is_empty() {
        return 1.0;
    }
    let stable = documents
        .iter()
        .enumerate()
        .filter(|(i, doc)| {
            let per_doc = MutationSpec {
                seed: spec.seed.wrapping_add(*i as u64),
                ..*spec
            };
            let before = model.predict_tokens(&tokenize(&doc.text, stoplist)).category;
            let mutated = mutate_text(&doc.text, &per_doc, vocabulary);
            let after = model.predict_tokens(&tokenize(&mutated, stoplist)).category;
            before == after
        })
        .count();
    stable as f64 / documents.len() as f64
}

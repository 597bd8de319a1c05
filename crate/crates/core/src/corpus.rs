//! Document collections, stop-lists and tokenization.
//!
//! A corpus on disk is a directory whose immediate subdirectories are
//! categories; every regular file inside a category directory is one
//! document. Hidden entries (leading `.`) are ignored.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dlp::TransferContext;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error("corpus {0} contains no category directories")]
    NoCategories(PathBuf),
    #[error("empty category {0:?}: no readable documents")]
    EmptyCategory(String),
    #[error("{path}: not valid UTF-8")]
    NonUtf8 { path: PathBuf },
    #[error("stop-list {path}, line {line}: entry {entry:?} contains whitespace")]
    StopWordWhitespace {
        path: PathBuf,
        line: usize,
        entry: String,
    },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("document id must be non-empty")]
    EmptyId,
    #[error("document {id:?} has category {category:?} which is not a corpus category")]
    UnknownCategory { id: String, category: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One unit of text, optionally labeled and optionally carrying the context
/// of the transfer it was observed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<TransferContext>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            category: None,
            context: None,
        }
    }

    pub fn labeled(
        id: impl Into<String>,
        text: impl Into<String>,
        category: impl Into<String>,
    ) -> Self {
        Self {
            category: Some(category.into()),
            ..Self::new(id, text)
        }
    }
}

/// Lowercase words removed during tokenization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopList {
    words: BTreeSet<String>,
}

impl StopList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a stop-list from arbitrary words. Entries are lowercased;
    /// entries containing whitespace or empty entries are dropped.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .filter(|w| !w.is_empty() && !w.chars().any(char::is_whitespace))
            .collect();
        Self { words }
    }

    /// Parses stop-list text: one token per line, `#` comment lines and
    /// blank lines ignored. `origin` only labels errors.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CorpusError> {
        let mut words = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let entry = raw.trim();
            if entry.is_empty() || entry.starts_with('#') {
                continue;
            }
            if entry.chars().any(char::is_whitespace) {
                return Err(CorpusError::StopWordWhitespace {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    entry: entry.to_string(),
                });
            }
            words.insert(entry.to_lowercase());
        }
        Ok(Self { words })
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

pub fn load_stoplist(path: impl AsRef<Path>) -> Result<StopList, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    StopList::parse(&text, path)
}

/// Splits `text` into lowercase terms.
///
/// The text is lowercased, split on every non-alphanumeric character, and
/// tokens shorter than two characters or present in `stoplist` are dropped.
/// Order is preserved and numerals are kept.
pub fn tokenize(text: &str, stoplist: &StopList) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().nth(1).is_some() && !stoplist.contains(t))
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedDocument {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    pub tokens: Vec<String>,
}

impl TokenizedDocument {
    pub fn from_document(doc: &Document, stoplist: &StopList) -> Self {
        Self {
            id: doc.id.clone(),
            category: doc.category.clone(),
            tokens: tokenize(&doc.text, stoplist),
        }
    }
}

/// A validated set of documents together with the ordered category list.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    documents: Vec<Document>,
    categories: Vec<String>,
}

impl LabeledCorpus {
    /// Validates ids (non-empty, unique) and that every labeled document
    /// refers to one of `categories`. Categories are sorted and deduplicated.
    pub fn new(documents: Vec<Document>, categories: Vec<String>) -> Result<Self, CorpusError> {
        let categories: Vec<String> = categories
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if doc.id.is_empty() {
                return Err(CorpusError::EmptyId);
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.id.clone()));
            }
            if let Some(cat) = &doc.category {
                if categories.binary_search(cat).is_err() {
                    return Err(CorpusError::UnknownCategory {
                        id: doc.id.clone(),
                        category: cat.clone(),
                    });
                }
            }
        }
        Ok(Self {
            documents,
            categories,
        })
    }

    /// Like [`LabeledCorpus::new`], taking the category set from the documents.
    pub fn from_documents(documents: Vec<Document>) -> Result<Self, CorpusError> {
        let categories = documents
            .iter()
            .filter_map(|d| d.category.clone())
            .collect();
        Self::new(documents, categories)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Documents at `indices`, keeping the full category list.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            documents: indices.iter().map(|&i| self.documents[i].clone()).collect(),
            categories: self.categories.clone(),
        }
    }

    pub fn tokenize(&self, stoplist: &StopList) -> TokenizedCorpus {
        TokenizedCorpus {
            documents: self
                .documents
                .iter()
                .map(|d| TokenizedDocument::from_document(d, stoplist))
                .collect(),
            categories: self.categories.clone(),
        }
    }
}

/// Tokenized counterpart of [`LabeledCorpus`]; the input to training.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedCorpus {
    pub documents: Vec<TokenizedDocument>,
    pub categories: Vec<String>,
}

impl TokenizedCorpus {
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            documents: indices.iter().map(|&i| self.documents[i].clone()).collect(),
            categories: self.categories.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// Result of [`load_corpus`]: the corpus plus files skipped in lenient mode.
#[derive(Debug)]
pub struct CorpusLoad {
    pub corpus: LabeledCorpus,
    pub skipped: Vec<PathBuf>,
}

fn sorted_entries(dir: &Path) -> Result<Vec<fs::DirEntry>, CorpusError> {
    let mut entries = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err(dir))?;
    entries.retain(|e| !e.file_name().to_string_lossy().starts_with('.'));
    entries.sort_by_key(|e| e.file_name());
    Ok(entries)
}

/// Loads `<root>/<category>/<file>` into a labeled corpus.
///
/// Document ids are `<category>/<file name>`. With `strict`, a non-UTF-8
/// file aborts the load; otherwise it is skipped and reported in
/// [`CorpusLoad::skipped`].
pub fn load_corpus(root: impl AsRef<Path>, strict: bool) -> Result<CorpusLoad, CorpusError> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(CorpusError::MissingRoot(root.to_path_buf()));
    }
    let mut documents = Vec::new();
    let mut categories = Vec::new();
    let mut skipped = Vec::new();
    for entry in sorted_entries(root)? {
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let category = entry.file_name().to_string_lossy().into_owned();
        let before = documents.len();
        for file in sorted_entries(&path)? {
            let file_path = file.path();
            if !file_path.is_file() {
                continue;
            }
            let bytes = fs::read(&file_path).map_err(io_err(&file_path))?;
            match String::from_utf8(bytes) {
                Ok(text) => documents.push(Document::labeled(
                    format!("{category}/{}", file.file_name().to_string_lossy()),
                    text,
                    category.clone(),
                )),
                Err(_) if !strict => skipped.push(file_path),
                Err(_) => return Err(CorpusError::NonUtf8 { path: file_path }),
            }
        }
        if documents.len() == before {
            return Err(CorpusError::EmptyCategory(category));
        }
        categories.push(category);
    }
    if categories.is_empty() {
        return Err(CorpusError::NoCategories(root.to_path_buf()));
    }
    Ok(CorpusLoad {
        corpus: LabeledCorpus::new(documents, categories)?,
        skipped,
    })
}

/// Writes every document to `<root>/<id>`, creating directories as needed.
/// Ids produced by [`load_corpus`] or the synthetic generator map back onto
/// the same layout.
pub fn write_corpus(corpus: &LabeledCorpus, root: impl AsRef<Path>) -> Result<(), CorpusError> {
    let root = root.as_ref();
    for doc in corpus.documents() {
        let path = root.join(&doc.id);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, &doc.text).map_err(io_err(&path))?;
    }
    Ok(())
}

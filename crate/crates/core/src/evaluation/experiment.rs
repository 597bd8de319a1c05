use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::compare::AccuracyTable;
use super::metrics::{accuracy, macro_precision};
use super::split::{split_indices, Partition, SplitPlan};
use super::EvalError;
use crate::classifiers::ClassifierSpec;
use crate::corpus::{LabeledCorpus, StopList, TokenizedCorpus};

#[derive(Debug, Clone)]
pub struct NamedCorpus {
    pub name: String,
    pub corpus: LabeledCorpus,
}

impl NamedCorpus {
    pub fn new(name: impl Into<String>, corpus: LabeledCorpus) -> Self {
        Self { name: name.into(), corpus }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedClassifier {
    pub name: String,
    pub spec: ClassifierSpec,
}

impl NamedClassifier {
    pub fn new(name: impl Into<String>, spec: ClassifierSpec) -> Self {
        Self { name: name.into(), spec }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub name: String,
    pub documents: usize,
    pub categories: Vec<String>,
}

/// Echo of everything that determined the results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub plan: SplitPlan,
    pub stoplist_size: usize,
    pub classifiers: Vec<NamedClassifier>,
    pub datasets: Vec<DatasetSummary>,
}

/// Results of one classifier on one dataset across all runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub classifier: String,
    pub dataset: String,
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub macro_precisions: Vec<f64>,
    pub mean_macro_precision: f64,
    /// Per-category accuracy on that category's test documents, averaged
    /// over the runs in which the category had test documents.
    pub category_accuracy: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub config: ExperimentConfig,
    /// Classifier-major, in input order.
    pub cells: Vec<CellResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableAxis {
    /// One column per dataset.
    #[default]
    Datasets,
    /// One column per category of each dataset.
    Categories,
}

impl EvaluationReport {
    pub fn cell(&self, classifier: &str, dataset: &str) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.classifier == classifier && c.dataset == dataset)
    }

    pub fn classifier_names(&self) -> Vec<String> {
        self.config.classifiers.iter().map(|c| c.name.clone()).collect()
    }

    /// Per-run accuracies of one classifier, concatenated over datasets.
    pub fn run_accuracies(&self, classifier: &str) -> Vec<f64> {
        self.config
            .datasets
            .iter()
            .filter_map(|d| self.cell(classifier, &d.name))
            .flat_map(|c| c.accuracies.iter().copied())
            .collect()
    }

    pub fn accuracy_table(&self, axis: TableAxis) -> AccuracyTable {
        let classifiers = self.classifier_names();
        let mut columns: Vec<(String, String, Option<String>)> = Vec::new();
        let multi = self.config.datasets.len() > 1;
        for d in &self.config.datasets {
            match axis {
                TableAxis::Datasets => columns.push((d.name.clone(), d.name.clone(), None)),
                TableAxis::Categories => {
                    for cat in &d.categories {
                        let label = if multi { format!("{}:{cat}", d.name) } else { cat.clone() };
                        columns.push((label, d.name.clone(), Some(cat.clone())));
                    }
                }
            }
        }
        let values = classifiers
            .iter()
            .map(|clf| {
                columns
                    .iter()
                    .map(|(_, dataset, cat)| {
                        let cell = self.cell(clf, dataset)?;
                        match cat {
                            None => Some(cell.mean_accuracy),
                            Some(cat) => cell.category_accuracy.get(cat).copied(),
                        }
                    })
                    .collect()
            })
            .collect();
        AccuracyTable {
            classifiers,
            columns: columns.into_iter().map(|(label, _, _)| label).collect(),
            values,
        }
    }
}

struct RunOutcome {
    accuracy: f64,
    macro_precision: f64,
    // category -> (correct, total)
    per_category: BTreeMap<String, (usize, usize)>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn run_one(
    spec: &ClassifierSpec,
    data: &TokenizedCorpus,
    part: &Partition,
) -> Result<RunOutcome, crate::classifiers::ModelError> {
    let model = spec.train(&data.subset(&part.train))?;
    let mut predicted = Vec::with_capacity(part.test.len());
    let mut truth = Vec::with_capacity(part.test.len());
    let mut per_category: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for &i in &part.test {
        let doc = &data.documents[i];
        // Labels were checked before any job started.
        let actual = doc.category.clone().expect("labeled test document");
        let guess = model.predict_tokens(&doc.tokens).category;
        let e = per_category.entry(actual.clone()).or_default();
        e.1 += 1;
        if guess == actual {
            e.0 += 1;
        }
        predicted.push(guess);
        truth.push(actual);
    }
    // Partitions always leave at least one test document.
    Ok(RunOutcome {
        accuracy: accuracy(&predicted, &truth).expect("non-empty test set"),
        macro_precision: macro_precision(&predicted, &truth).expect("non-empty test set"),
        per_category,
    })
}

/// Trains and tests every classifier on every corpus for `plan.runs`
/// resampled splits. All classifiers see the same split in a given run.
/// Jobs run in parallel but results are assembled in input order, so the
/// report is a pure function of the inputs.
pub fn run_experiment(
    corpora: &[NamedCorpus],
    classifiers: &[NamedClassifier],
    plan: &SplitPlan,
    stoplist: &StopList,
) -> Result<EvaluationReport, EvalError> {
    plan.validate()?;
    let mut seen = BTreeSet::new();
    if let Some(dup) = classifiers.iter().find(|c| !seen.insert(c.name.as_str())) {
        return Err(EvalError::InvalidPlan(format!("duplicate classifier name {:?}", dup.name)));
    }
    let mut seen = BTreeSet::new();
    if let Some(dup) = corpora.iter().find(|c| !seen.insert(c.name.as_str())) {
        return Err(EvalError::InvalidPlan(format!("duplicate dataset name {:?}", dup.name)));
    }

    let mut prepared = Vec::with_capacity(corpora.len());
    for nc in corpora {
        if let Some(d) = nc.corpus.documents().iter().find(|d| d.category.is_none()) {
            return Err(EvalError::UnlabeledDocument(d.id.clone()));
        }
        let items: Vec<(&str, Option<&str>)> = nc
            .corpus
            .documents()
            .iter()
            .map(|d| (d.id.as_str(), d.category.as_deref()))
            .collect();
        let parts = (0..plan.runs)
            .map(|r| split_indices(&items, plan, r))
            .collect::<Result<Vec<_>, _>>()?;
        prepared.push((nc.corpus.tokenize(stoplist), parts));
    }

    let jobs: Vec<(usize, usize, usize)> = (0..classifiers.len())
        .flat_map(|c| (0..corpora.len()).flat_map(move |d| (0..plan.runs).map(move |r| (c, d, r))))
        .collect();
    let outcomes: Vec<_> = jobs
        .par_iter()
        .map(|&(c, d, r)| {
            let (data, parts) = &prepared[d];
            run_one(&classifiers[c].spec, data, &parts[r]).map_err(|source| EvalError::Training {
                classifier: classifiers[c].name.clone(),
                dataset: corpora[d].name.clone(),
                run: r,
                source,
            })
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut cells = Vec::new();
    for (chunk, (c, d)) in outcomes.chunks(plan.runs).zip(
        (0..classifiers.len()).flat_map(|c| (0..corpora.len()).map(move |d| (c, d))),
    ) {
        let accuracies: Vec<f64> = chunk.iter().map(|o| o.accuracy).collect();
        let macro_precisions: Vec<f64> = chunk.iter().map(|o| o.macro_precision).collect();
        let mut category_accuracy = BTreeMap::new();
        for cat in corpora[d].corpus.categories() {
            let per_run: Vec<f64> = chunk
                .iter()
                .filter_map(|o| o.per_category.get(cat))
                .map(|&(ok, n)| ok as f64 / n as f64)
                .collect();
            if !per_run.is_empty() {
                category_accuracy.insert(cat.clone(), mean(&per_run));
            }
        }
        cells.push(CellResult {
            classifier: classifiers[c].name.clone(),
            dataset: corpora[d].name.clone(),
            mean_accuracy: mean(&accuracies),
            accuracies,
            mean_macro_precision: mean(&macro_precisions),
            macro_precisions,
            category_accuracy,
        });
    }

    Ok(EvaluationReport {
        config: ExperimentConfig {
            plan: *plan,
            stoplist_size: stoplist.len(),
            classifiers: classifiers.to_vec(),
            datasets: corpora
                .iter()
                .map(|nc| DatasetSummary {
                    name: nc.name.clone(),
                    documents: nc.corpus.len(),
                    categories: nc.corpus.categories().to_vec(),
                })
                .collect(),
        },
        cells,
    })
}

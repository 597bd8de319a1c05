use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::LabeledCorpus;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_fraction: f64,
    pub runs: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            runs: 10,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(EvalError::InvalidPlan(format!(
                "train fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        if self.runs == 0 {
            return Err(EvalError::InvalidPlan("runs must be at least 1".into()));
        }
        Ok(())
    }

    /// Seed of one run: base seed plus run index, so a single run can be
    /// re-executed on its own.
    pub fn run_seed(&self, run_index: usize) -> u64 {
        self.seed.wrapping_add(run_index as u64)
    }
}

/// Train and test document indices, each sorted by document id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Number of training items out of `n`: `round(fraction·n)` kept within
/// `1..=n-1` so both sides are non-empty.
fn train_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n - 1)
}

/// Partitions items given as `(id, category)`.
///
/// Items are ordered by id before shuffling, so the partition depends only
/// on the set of items, the plan and the run index.
pub fn split_indices(
    items: &[(&str, Option<&str>)],
    plan: &SplitPlan,
    run_index: usize,
) -> Result<Partition, EvalError> {
    plan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.run_seed(run_index));
    let by_id = |a: &usize, b: &usize| items[*a].0.cmp(items[*b].0);

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    if plan.stratified {
        for (i, (id, cat)) in items.iter().enumerate() {
            let cat = cat.ok_or_else(|| EvalError::UnlabeledDocument(id.to_string()))?;
            groups.entry(cat).or_default().push(i);
        }
        if let Some((cat, g)) = groups.iter().find(|(_, g)| g.len() < 2) {
            return Err(EvalError::CategoryTooSmall {
                category: cat.to_string(),
                size: g.len(),
            });
        }
    } else {
        if items.len() < 2 {
            return Err(EvalError::CorpusTooSmall(items.len()));
        }
        groups.insert("", (0..items.len()).collect());
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for group in groups.values_mut() {
        group.sort_by(by_id);
        group.shuffle(&mut rng);
        let n_train = train_count(group.len(), plan.train_fraction);
        train.extend_from_slice(&group[..n_train]);
        test.extend_from_slice(&group[n_train..]);
    }
    train.sort_by(by_id);
    test.sort_by(by_id);
    Ok(Partition { train, test })
}

pub fn split(
    corpus: &LabeledCorpus,
    plan: &SplitPlan,
    run_index: usize,
) -> Result<(LabeledCorpus, LabeledCorpus), EvalError> {
    let items: Vec<(&str, Option<&str>)> = corpus
        .documents()
        .iter()
        .map(|d| (d.id.as_str(), d.category.as_deref()))
        .collect();
    let p = split_indices(&items, plan, run_index)?;
    Ok((corpus.subset(&p.train), corpus.subset(&p.test)))
}

use std::fmt::Write as _;

use serde::Serialize;

use super::experiment::EvaluationReport;
use super::metrics::paired_t_test;
use super::EvalError;

/// Mean accuracies, one row per classifier and one column per dataset (or
/// per category). A missing value is `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyTable {
    pub classifiers: Vec<String>,
    pub columns: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl AccuracyTable {
    /// Builds a fully populated table from a row-major grid.
    pub fn from_rows(classifiers: &[&str], columns: &[&str], rows: &[&[f64]]) -> Self {
        Self {
            classifiers: classifiers.iter().map(|s| s.to_string()).collect(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            values: rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect(),
        }
    }

    pub fn get(&self, classifier: &str, column: &str) -> Option<f64> {
        let r = self.classifiers.iter().position(|c| c == classifier)?;
        let c = self.columns.iter().position(|c| c == column)?;
        self.values.get(r)?.get(c).copied().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WinLoss {
    pub wins: usize,
    pub losses: usize,
}

/// `wins[r][c]` counts columns where row classifier `r` is strictly more
/// accurate than `c`; `losses[r][c]` counts strictly less. Ties count as
/// neither, so `wins[r][c] + losses[r][c] <= columns.len()`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonMatrix {
    pub classifiers: Vec<String>,
    pub columns: Vec<String>,
    pub wins: Vec<Vec<usize>>,
    pub losses: Vec<Vec<usize>>,
    /// Two-sided paired t-test p-values over per-run accuracies, when
    /// requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_values: Option<Vec<Vec<Option<f64>>>>,
}

impl ComparisonMatrix {
    pub fn get(&self, row: &str, col: &str) -> Option<WinLoss> {
        let r = self.classifiers.iter().position(|c| c == row)?;
        let c = self.classifiers.iter().position(|c| c == col)?;
        Some(WinLoss {
            wins: self.wins[r][c],
            losses: self.losses[r][c],
        })
    }

    /// Adds paired t-tests over the per-run accuracies of each pair, pooled
    /// across datasets. Runs are paired because all classifiers share a split.
    pub fn with_paired_t(mut self, report: &EvaluationReport) -> Self {
        let runs: Vec<Vec<f64>> = self.classifiers.iter().map(|c| report.run_accuracies(c)).collect();
        let n = self.classifiers.len();
        let p = (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| {
                        if r == c {
                            None
                        } else {
                            paired_t_test(&runs[r], &runs[c]).map(|t| t.p_value)
                        }
                    })
                    .collect()
            })
            .collect();
        self.p_values = Some(p);
        self
    }
}

pub fn compare(table: &AccuracyTable) -> Result<ComparisonMatrix, EvalError> {
    let n = table.classifiers.len();
    let mut grid = Vec::with_capacity(n);
    for (r, name) in table.classifiers.iter().enumerate() {
        let row = table.values.get(r);
        let mut vals = Vec::with_capacity(table.columns.len());
        for (c, col) in table.columns.iter().enumerate() {
            match row.and_then(|row| row.get(c)).copied().flatten() {
                Some(v) => vals.push(v),
                None => {
                    return Err(EvalError::MissingCell {
                        classifier: name.clone(),
                        column: col.clone(),
                    })
                }
            }
        }
        grid.push(vals);
    }
    let mut wins = vec![vec![0; n]; n];
    let mut losses = vec![vec![0; n]; n];
    for r in 0..n {
        for c in 0..n {
            for (x, y) in grid[r].iter().zip(&grid[c]) {
                if x > y {
                    wins[r][c] += 1;
                } else if x < y {
                    losses[r][c] += 1;
                }
            }
        }
    }
    Ok(ComparisonMatrix {
        classifiers: table.classifiers.clone(),
        columns: table.columns.clone(),
        wins,
        losses,
        p_values: None,
    })
}

fn render_grid(rows: Vec<Vec<String>>) -> String {
    let width: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = width[c]) } else { format!("{s:>w$}", w = width[c]) })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// Classifiers as rows, columns as in the table, accuracies in percent.
pub fn render_accuracy_table(table: &AccuracyTable) -> String {
    let mut rows = vec![std::iter::once("Classifier".to_string()).chain(table.columns.iter().cloned()).collect()];
    for (name, vals) in table.classifiers.iter().zip(&table.values) {
        let mut row = vec![name.clone()];
        row.extend(vals.iter().map(|v| match v {
            Some(v) => format!("{:.1}", v * 100.0),
            None => "n/a".into(),
        }));
        rows.push(row);
    }
    render_grid(rows)
}

/// One "W/L" cell per ordered pair; the diagonal is left as "-".
pub fn render_comparison(m: &ComparisonMatrix) -> String {
    let mut rows = vec![std::iter::once("W/L".to_string()).chain(m.classifiers.iter().cloned()).collect()];
    for (r, name) in m.classifiers.iter().enumerate() {
        let mut row = vec![name.clone()];
        for c in 0..m.classifiers.len() {
            if r == c {
                row.push("-".into());
                continue;
            }
            let mut cell = format!("{}/{}", m.wins[r][c], m.losses[r][c]);
            if let Some(p) = m.p_values.as_ref().and_then(|p| p[r][c]) {
                let _ = write!(cell, " (p={p:.3})");
            }
            row.push(cell);
        }
        rows.push(row);
    }
    render_grid(rows)
}

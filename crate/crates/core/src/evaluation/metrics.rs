use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EvalError;

/// Fraction of positions where prediction and truth agree.
pub fn accuracy<S: AsRef<str>>(predictions: &[S], truth: &[S]) -> Result<f64, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let correct = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p.as_ref() == t.as_ref())
        .count();
    Ok(correct as f64 / truth.len() as f64)
}

/// Unweighted mean of per-category precision over every category that
/// occurs in either list. A category that is never predicted counts as 0.
pub fn macro_precision<S: AsRef<str>>(predictions: &[S], truth: &[S]) -> Result<f64, EvalError> {
    accuracy(predictions, truth)?;
    // (true positives, predicted)
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (p, t) in predictions.iter().zip(truth) {
        let (p, t) = (p.as_ref(), t.as_ref());
        tally.entry(t).or_default();
        let e = tally.entry(p).or_default();
        e.1 += 1;
        if p == t {
            e.0 += 1;
        }
    }
    let sum: f64 = tally
        .values()
        .map(|&(tp, n)| if n == 0 { 0.0 } else { tp as f64 / n as f64 })
        .sum();
    Ok(sum / tally.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTTest {
    pub t: f64,
    pub df: usize,
    /// Two-sided.
    pub p_value: f64,
}

/// Paired t-test on `a[i] - b[i]`. `None` for fewer than two pairs or
/// unequal lengths. Identical samples give `t = 0, p = 1`; a constant
/// nonzero difference gives an infinite `t` and `p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Option<PairedTTest> {
    let n = a.len();
    if n < 2 || n != b.len() {
        return None;
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    if var == 0.0 {
        return Some(if mean == 0.0 {
            PairedTTest { t: 0.0, df, p_value: 1.0 }
        } else {
            PairedTTest { t: mean.signum() * f64::INFINITY, df, p_value: 0.0 }
        });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df as f64).ok()?;
    let p_value = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Some(PairedTTest { t, df, p_value })
}

//! Probe metrics on held-out data. Information quantities are in bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::{argmax, value_counts, LabeledRows, SubsetEvaluator};

/// Log-likelihood (nats) and accuracy from a single pass over `rows`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeldOutScores {
    pub log_likelihood: f64,
    pub accuracy: f64,
    pub rows: usize,
}

impl HeldOutScores {
    /// Average negative log₂ posterior of the gold value.
    pub fn conditional_entropy_bits(&self) -> f64 {
        -self.log_likelihood / (self.rows as f64 * std::f64::consts::LN_2)
    }
}

pub fn held_out_scores(eval: &SubsetEvaluator<'_>, rows: &LabeledRows) -> Result<HeldOutScores> {
    eval.check_rows(rows)?;
    let mut ll = 0.0;
    let mut correct = 0usize;
    for i in 0..rows.len() {
        let lp = eval.log_posterior(&eval.restrict(rows.row(i)))?;
        let gold = rows.labels()[i];
        ll += lp[gold];
        if argmax(&lp) == gold {
            correct += 1;
        }
    }
    Ok(HeldOutScores { log_likelihood: ll, accuracy: correct as f64 / rows.len() as f64, rows: rows.len() })
}

pub fn accuracy(eval: &SubsetEvaluator<'_>, rows: &LabeledRows) -> Result<f64> {
    Ok(held_out_scores(eval, rows)?.accuracy)
}

/// Plug-in entropy of the empirical label distribution.
pub fn entropy_plugin(labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let n_values = labels.iter().max().map_or(0, |m| m + 1);
    let n = labels.len() as f64;
    value_counts(labels, n_values)
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Frequency of the most common label.
pub fn majority_baseline(labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let n_values = labels.iter().max().map_or(0, |m| m + 1);
    let top = value_counts(labels, n_values).into_iter().max().unwrap_or(0);
    top as f64 / labels.len() as f64
}

/// Upper bound on H(V | H): mean negative log₂ probe posterior of gold values.
pub fn conditional_entropy_upper(eval: &SubsetEvaluator<'_>, rows: &LabeledRows) -> Result<f64> {
    Ok(held_out_scores(eval, rows)?.conditional_entropy_bits())
}

/// Lower-bound MI estimate `H(V) − H_p(V | H)`; not clamped at zero.
pub fn mi_estimate(eval: &SubsetEvaluator<'_>, rows: &LabeledRows) -> Result<f64> {
    Ok(entropy_plugin(rows.labels()) - conditional_entropy_upper(eval, rows)?)
}

pub fn running_max(xs: &[f64]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    xs.iter()
        .map(|&x| {
            best = best.max(x);
            best
        })
        .collect()
}

pub fn lbmi(mi_bits: &[f64]) -> Vec<f64> {
    running_max(mi_bits)
}

pub fn lbnmi(lbmi_bits: &[f64], entropy_bits: f64) -> Result<Vec<f64>> {
    if !(entropy_bits > 0.0) {
        return Err(Error::DegenerateSplit);
    }
    Ok(lbmi_bits.iter().map(|m| m / entropy_bits).collect())
}

/// Metrics along a nested chain of dimension prefixes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCurve {
    pub accuracy: Vec<f64>,
    pub lba: Vec<f64>,
    pub mi_bits: Vec<f64>,
    pub lbmi_bits: Vec<f64>,
    pub lbnmi: Vec<f64>,
    pub entropy_bits: f64,
}

impl MetricCurve {
    pub fn from_prefixes(accuracy: Vec<f64>, mi_bits: Vec<f64>, entropy_bits: f64) -> Result<Self> {
        if accuracy.is_empty() || accuracy.len() != mi_bits.len() {
            return Err(Error::InvalidInput("curve needs matching, nonempty accuracy and MI series".into()));
        }
        let lba = running_max(&accuracy);
        let lbmi_bits = lbmi(&mi_bits);
        let lbnmi = lbnmi(&lbmi_bits, entropy_bits)?;
        Ok(Self { accuracy, lba, mi_bits, lbmi_bits, lbnmi, entropy_bits })
    }

    pub fn len(&self) -> usize {
        self.accuracy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accuracy.is_empty()
    }
}

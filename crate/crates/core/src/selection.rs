//! Dimension-subset search against held-out data.
//!
//! Greedy forward selection keeps, for every value and every held-out row, the
//! whitened residual `z = L⁻¹(h_C − μ_C)` of the current prefix. Scoring a
//! candidate dimension then needs only the bordering row of each value's factor
//! and one dot product per row, so a step costs O(|V| · N · k) per candidate
//! instead of a refit.

use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{Border, CholFactor, LN_2PI};
use crate::metrics::{entropy_plugin, held_out_scores, running_max};
use crate::probe::{log_sum_exp, LabeledRows, ProbeModel, SubsetEvaluator};

pub const DEFAULT_MAX_K: usize = 50;
/// Candidates whose criterion values differ by at most this much are tied;
/// the lower dimension index wins.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Largest number of subsets [`exhaustive_select`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 2_000_000;

pub const TRACE_HEADER: &str = "step\tdim\tcriterion\tloglik_nats\taccuracy\tmi_bits\tlba\tlbmi\tlbnmi";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Criterion {
    #[default]
    #[serde(rename = "loglik")]
    LogLikelihood,
    #[serde(rename = "accuracy")]
    Accuracy,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::LogLikelihood => "loglik",
            Criterion::Accuracy => "accuracy",
        }
    }

    fn pick(self, log_likelihood: f64, accuracy: f64) -> f64 {
        match self {
            Criterion::LogLikelihood => log_likelihood,
            Criterion::Accuracy => accuracy,
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loglik" => Ok(Criterion::LogLikelihood),
            "accuracy" => Ok(Criterion::Accuracy),
            other => Err(Error::InvalidInput(format!("unknown criterion `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub dim: usize,
    pub criterion_value: f64,
    pub log_likelihood: f64,
    pub accuracy: f64,
    pub mi_bits: f64,
    pub lba: f64,
    pub lbmi_bits: f64,
    pub lbnmi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub criterion: Criterion,
    pub attribute: String,
    pub dataset_id: String,
    pub max_k: usize,
    pub entropy_bits: f64,
    pub steps: Vec<TraceStep>,
}

impl SelectionTrace {
    pub fn dims(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.dim).collect()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for s in &self.steps {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                s.step, s.dim, s.criterion_value, s.log_likelihood, s.accuracy, s.mi_bits, s.lba, s.lbmi_bits, s.lbnmi
            )?;
        }
        Ok(())
    }

    /// Reads the dimension column of a trace TSV, in step order.
    pub fn read_tsv_dims<R: BufRead>(input: R) -> Result<Vec<usize>> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim_end() != TRACE_HEADER {
            return Err(Error::Format("trace file does not start with the expected header".into()));
        }
        let mut dims = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let field = line
                .split('\t')
                .nth(1)
                .ok_or_else(|| Error::Format(format!("trace line {} has no dim column", i + 2)))?;
            let dim = field
                .parse()
                .map_err(|_| Error::Format(format!("trace line {}: bad dimension `{field}`", i + 2)))?;
            dims.push(dim);
        }
        Ok(dims)
    }
}

/// Criterion inputs for one candidate prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub dim: usize,
    pub log_likelihood: f64,
    pub accuracy: f64,
}

/// Incremental state of a greedy forward search over held-out rows.
pub struct GreedyState<'a> {
    model: &'a ProbeModel,
    n: usize,
    /// d × n, column-major in the row index
    columns: Vec<f64>,
    labels: Vec<usize>,
    capacity: usize,
    factors: Vec<CholFactor>,
    /// per value: n × capacity whitened residuals
    residuals: Vec<Vec<f64>>,
    /// per value: Σ z² over the prefix, per row
    quad: Vec<Vec<f64>>,
    chosen: Vec<bool>,
}

impl<'a> GreedyState<'a> {
    /// Empty prefix; `capacity` bounds how many dimensions can be pushed.
    pub fn new(model: &'a ProbeModel, rows: &LabeledRows, capacity: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("validation split is empty".into()));
        }
        if rows.dim() != model.dim() {
            return Err(Error::InvalidInput(format!(
                "rows have dimension {} but model has {}",
                rows.dim(),
                model.dim()
            )));
        }
        rows.check_labels(model.n_values())?;
        let (n, d) = (rows.len(), rows.dim());
        let capacity = capacity.min(d);
        let mut columns = vec![0.0; n * d];
        for i in 0..n {
            for (j, &x) in rows.row(i).iter().enumerate() {
                columns[j * n + i] = x;
            }
        }
        let v = model.n_values();
        Ok(Self {
            model,
            n,
            columns,
            labels: rows.labels().to_vec(),
            capacity,
            factors: vec![CholFactor::empty(); v],
            residuals: vec![vec![0.0; n * capacity]; v],
            quad: vec![vec![0.0; n]; v],
            chosen: vec![false; d],
        })
    }

    pub fn prefix(&self) -> &[usize] {
        self.factors[0].dims()
    }

    pub fn len(&self) -> usize {
        self.prefix().len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix().is_empty()
    }

    pub fn is_chosen(&self, dim: usize) -> bool {
        self.chosen[dim]
    }

    fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.n..(j + 1) * self.n]
    }

    /// Scores of the current prefix itself.
    pub fn current_scores(&self) -> CandidateScore {
        let k = self.len();
        let v_count = self.model.n_values();
        let base: Vec<f64> = (0..v_count)
            .map(|v| {
                -0.5 * (k as f64 * LN_2PI + self.factors[v].log_det()) + self.model.ln_class_prior()[v]
            })
            .collect();
        let mut joint = vec![0.0; v_count];
        let mut acc = RowAccumulator::default();
        for i in 0..self.n {
            for v in 0..v_count {
                joint[v] = base[v] - 0.5 * self.quad[v][i];
            }
            acc.add(&joint, self.labels[i]);
        }
        acc.finish(self.prefix().last().copied().unwrap_or(usize::MAX), self.n)
    }

    /// Scores of `prefix ++ [dim]` without modifying the state.
    pub fn score_candidate(&self, dim: usize) -> Result<CandidateScore> {
        let borders = self.borders(dim)?;
        let k = self.len();
        let v_count = self.model.n_values();
        let col = self.column(dim);
        let base: Vec<f64> = (0..v_count)
            .map(|v| {
                let log_det = self.factors[v].log_det() + 2.0 * borders[v].pivot.ln();
                -0.5 * ((k + 1) as f64 * LN_2PI + log_det) + self.model.ln_class_prior()[v]
            })
            .collect();
        let means: Vec<f64> = (0..v_count).map(|v| self.model.gaussian(v).mean()[dim]).collect();
        let mut joint = vec![0.0; v_count];
        let mut acc = RowAccumulator::default();
        for i in 0..self.n {
            for v in 0..v_count {
                let z = &self.residuals[v][i * self.capacity..i * self.capacity + k];
                let znew = (col[i] - means[v] - dot(&borders[v].row, z)) / borders[v].pivot;
                joint[v] = base[v] - 0.5 * (self.quad[v][i] + znew * znew);
            }
            acc.add(&joint, self.labels[i]);
        }
        Ok(acc.finish(dim, self.n))
    }

    /// Scores every unchosen dimension, in increasing dimension order.
    /// Candidates are evaluated in parallel on the current rayon pool.
    pub fn score_all(&self) -> Result<Vec<CandidateScore>> {
        let candidates: Vec<usize> = (0..self.chosen.len()).filter(|&j| !self.chosen[j]).collect();
        candidates.par_iter().map(|&j| self.score_candidate(j)).collect()
    }

    /// Appends `dim` to the prefix.
    pub fn push(&mut self, dim: usize) -> Result<()> {
        if self.len() >= self.capacity {
            return Err(Error::InvalidInput(format!("prefix is already at capacity {}", self.capacity)));
        }
        let borders = self.borders(dim)?;
        let k = self.len();
        let n = self.n;
        let cap = self.capacity;
        let col = self.columns[dim * n..(dim + 1) * n].to_vec();
        for (v, border) in borders.into_iter().enumerate() {
            let mean = self.model.gaussian(v).mean()[dim];
            let residuals = &mut self.residuals[v];
            let quad = &mut self.quad[v];
            for i in 0..n {
                let row = &mut residuals[i * cap..i * cap + k + 1];
                let znew = (col[i] - mean - dot(&border.row, &row[..k])) / border.pivot;
                row[k] = znew;
                quad[i] += znew * znew;
            }
            self.factors[v].push(dim, border);
        }
        self.chosen[dim] = true;
        Ok(())
    }

    fn borders(&self, dim: usize) -> Result<Vec<Border>> {
        if dim >= self.chosen.len() {
            return Err(Error::InvalidInput(format!("dimension {dim} out of range")));
        }
        self.factors
            .iter()
            .zip(self.model.gaussians())
            .map(|(f, g)| f.border(g, dim))
            .collect()
    }
}

#[derive(Default)]
struct RowAccumulator {
    log_likelihood: f64,
    correct: usize,
}

impl RowAccumulator {
    fn add(&mut self, joint: &[f64], gold: usize) {
        let norm = log_sum_exp(joint);
        self.log_likelihood += joint[gold] - norm;
        let mut best = 0;
        for v in 1..joint.len() {
            if joint[v] > joint[best] {
                best = v;
            }
        }
        if best == gold {
            self.correct += 1;
        }
    }

    fn finish(self, dim: usize, n: usize) -> CandidateScore {
        CandidateScore { dim, log_likelihood: self.log_likelihood, accuracy: self.correct as f64 / n as f64 }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l] * b[4 * c + l];
        }
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Index of the best score, lowest index on ties within [`TIE_TOLERANCE`].
fn best_index(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            None => best = Some((i, v)),
            Some((_, b)) if v > b + TIE_TOLERANCE => best = Some((i, v)),
            _ => {}
        }
    }
    best.map(|(i, _)| i)
}

/// Greedy forward selection of up to `max_k` dimensions. Selection continues
/// for the full budget even when the criterion decreases.
pub fn greedy_select(
    model: &ProbeModel,
    validation: &LabeledRows,
    max_k: usize,
    criterion: Criterion,
) -> Result<SelectionTrace> {
    if max_k == 0 {
        return Err(Error::InvalidInput("max_k must be at least 1".into()));
    }
    if validation.is_empty() {
        return Err(Error::InvalidInput("validation split is empty".into()));
    }
    let d = model.dim();
    let budget = if max_k > d {
        log::warn!("max_k = {max_k} exceeds d = {d}; selecting {d} dimensions");
        d
    } else {
        max_k
    };
    let entropy_bits = entropy_plugin(validation.labels());
    if !(entropy_bits > 0.0) {
        return Err(Error::DegenerateSplit);
    }
    let mut state = GreedyState::new(model, validation, budget)?;
    let mut raw = Vec::with_capacity(budget);
    for step in 1..=budget {
        let scores = state.score_all()?;
        let best = best_index(scores.iter().map(|s| criterion.pick(s.log_likelihood, s.accuracy)))
            .expect("at least one candidate remains");
        let chosen = scores[best];
        state.push(chosen.dim)?;
        log::debug!("step {step}: dim {} loglik {:.6}", chosen.dim, chosen.log_likelihood);
        raw.push(chosen);
    }
    Ok(build_trace(model, criterion, budget, entropy_bits, &raw, validation.len()))
}

/// Trace for a fixed dimension sequence, scoring every prefix on `rows`.
pub fn score_prefixes(
    model: &ProbeModel,
    rows: &LabeledRows,
    dims: &[usize],
    criterion: Criterion,
) -> Result<SelectionTrace> {
    if dims.is_empty() {
        return Err(Error::InvalidInput("no dimensions to score".into()));
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("evaluation split is empty".into()));
    }
    let entropy_bits = entropy_plugin(rows.labels());
    if !(entropy_bits > 0.0) {
        return Err(Error::DegenerateSplit);
    }
    let mut state = GreedyState::new(model, rows, dims.len())?;
    let mut raw = Vec::with_capacity(dims.len());
    for &dim in dims {
        if dim < model.dim() && state.is_chosen(dim) {
            return Err(Error::InvalidInput(format!("dimension {dim} appears twice")));
        }
        raw.push(state.score_candidate(dim)?);
        state.push(dim)?;
    }
    Ok(build_trace(model, criterion, dims.len(), entropy_bits, &raw, rows.len()))
}

fn build_trace(
    model: &ProbeModel,
    criterion: Criterion,
    max_k: usize,
    entropy_bits: f64,
    raw: &[CandidateScore],
    n: usize,
) -> SelectionTrace {
    let mi: Vec<f64> = raw
        .iter()
        .map(|s| entropy_bits + s.log_likelihood / (n as f64 * std::f64::consts::LN_2))
        .collect();
    let acc: Vec<f64> = raw.iter().map(|s| s.accuracy).collect();
    let lba = running_max(&acc);
    let lbmi = running_max(&mi);
    let steps = raw
        .iter()
        .enumerate()
        .map(|(i, s)| TraceStep {
            step: i + 1,
            dim: s.dim,
            criterion_value: criterion.pick(s.log_likelihood, s.accuracy),
            log_likelihood: s.log_likelihood,
            accuracy: s.accuracy,
            mi_bits: mi[i],
            lba: lba[i],
            lbmi_bits: lbmi[i],
            lbnmi: lbmi[i] / entropy_bits,
        })
        .collect();
    SelectionTrace {
        criterion,
        attribute: model.schema().attribute.clone(),
        dataset_id: model.provenance.dataset_id.clone(),
        max_k,
        entropy_bits,
        steps,
    }
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn n_choose_k(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Best size-`k` subset by enumeration in lexicographic order; ties go to the
/// lexicographically first subset.
pub fn exhaustive_select(
    model: &ProbeModel,
    validation: &LabeledRows,
    k: usize,
    criterion: Criterion,
) -> Result<(Vec<usize>, f64)> {
    let d = model.dim();
    if k == 0 || k > d {
        return Err(Error::InvalidInput(format!("subset size {k} must be in 1..={d}")));
    }
    if validation.is_empty() {
        return Err(Error::InvalidInput("validation split is empty".into()));
    }
    let count = n_choose_k(d, k);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge { count, limit: EXHAUSTIVE_LIMIT });
    }
    let mut search = Exhaustive {
        model,
        rows: validation,
        k,
        criterion,
        best: None,
    };
    let root = vec![CholFactor::empty(); model.n_values()];
    search.descend(&root, 0)?;
    let (subset, value) = search.best.expect("k <= d guarantees at least one subset");
    Ok((subset, value))
}

struct Exhaustive<'m, 'r> {
    model: &'m ProbeModel,
    rows: &'r LabeledRows,
    k: usize,
    criterion: Criterion,
    best: Option<(Vec<usize>, f64)>,
}

impl Exhaustive<'_, '_> {
    fn descend(&mut self, factors: &[CholFactor], start: usize) -> Result<()> {
        let depth = factors[0].len();
        if depth == self.k {
            let eval = SubsetEvaluator::from_factors(self.model, factors.to_vec())?;
            let scores = held_out_scores(&eval, self.rows)?;
            let value = self.criterion.pick(scores.log_likelihood, scores.accuracy);
            let better = match &self.best {
                None => true,
                Some((_, b)) => value > b + TIE_TOLERANCE,
            };
            if better {
                self.best = Some((factors[0].dims().to_vec(), value));
            }
            return Ok(());
        }
        let d = self.model.dim();
        let remaining = self.k - depth;
        for j in start..=d - remaining {
            let next = factors
                .iter()
                .zip(self.model.gaussians())
                .map(|(f, g)| f.extend(g, j))
                .collect::<Result<Vec<_>>>()?;
            self.descend(&next, j + 1)?;
        }
        Ok(())
    }
}

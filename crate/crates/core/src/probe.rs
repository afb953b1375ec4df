//! The decomposable generative probe.
//!
//! One Gaussian per attribute value plus a categorical prior over values. The
//! model is fit once on all `d` dimensions; a probe for any subset `C` is read
//! off by marginalizing each value's Gaussian, which is what
//! [`SubsetEvaluator`] does.

use std::collections::BTreeMap;
use std::path::Path;

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, CholFactor, GaussianParams};
use crate::giw::{self, GiwHyperparams, HyperPolicy, PriorScope, SufficientStats};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// An attribute and its ordered list of values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub attribute: String,
    pub values: Vec<String>,
}

impl AttributeSchema {
    pub fn new(attribute: impl Into<String>, values: Vec<String>) -> Result<Self> {
        let attribute = attribute.into();
        if attribute.is_empty() {
            return Err(Error::InvalidInput("attribute name is empty".into()));
        }
        if values.is_empty() {
            return Err(Error::InvalidInput(format!("attribute `{attribute}` has no values")));
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(Error::InvalidInput(format!("value `{v}` listed twice for `{attribute}`")));
            }
        }
        Ok(Self { attribute, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// Embedding rows (row-major, full dimension) with value labels given as
/// indices into an [`AttributeSchema`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRows {
    dim: usize,
    data: Vec<f64>,
    labels: Vec<usize>,
}

impl LabeledRows {
    pub fn new(dim: usize, data: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("rows must have at least one dimension".into()));
        }
        if data.len() != dim * labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} values do not form {} rows of dimension {dim}",
                data.len(),
                labels.len()
            )));
        }
        Ok(Self { dim, data, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput("rows have inconsistent lengths".into()));
        }
        Self::new(dim, rows.concat(), labels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Rows with label `value` as an N_v × d matrix.
    pub fn value_matrix(&self, value: usize) -> DMatrix<f64> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == value).collect();
        DMatrix::from_fn(idx.len(), self.dim, |r, c| self.data[idx[r] * self.dim + c])
    }

    /// All rows as an N × d matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.data)
    }

    /// Same rows keeping only the columns in `dims`, in that order.
    pub fn select_columns(&self, dims: &[usize]) -> Result<LabeledRows> {
        gaussian::validate_subset(dims, self.dim)?;
        let data = (0..self.len())
            .flat_map(|i| dims.iter().map(move |&j| self.data[i * self.dim + j]))
            .collect();
        LabeledRows::new(dims.len(), data, self.labels.clone())
    }

    pub(crate) fn check_labels(&self, n_values: usize) -> Result<()> {
        match self.labels.iter().find(|&&l| l >= n_values) {
            Some(l) => Err(Error::InvalidInput(format!(
                "label index {l} is outside the schema's {n_values} values"
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub dataset_id: String,
    pub hyperparams: Option<HyperPolicy>,
    pub fit_unix_time: u64,
    pub tool_version: String,
    /// Input file name to SHA-256 digest.
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    #[serde(default)]
    pub config: serde_json::Value,
}

/// Per-value Gaussians and the categorical value prior for one attribute.
#[derive(Debug, Clone)]
pub struct ProbeModel {
    schema: AttributeSchema,
    gaussians: Vec<GaussianParams>,
    class_prior: Vec<f64>,
    ln_prior: Vec<f64>,
    dim: usize,
    pub provenance: Provenance,
}

impl ProbeModel {
    /// Assembles a model from parts; `gaussians` and `class_prior` follow the
    /// schema's value order.
    pub fn new(
        schema: AttributeSchema,
        gaussians: Vec<GaussianParams>,
        class_prior: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = schema.len();
        if gaussians.len() != n || class_prior.len() != n {
            return Err(Error::InvalidInput(format!(
                "schema has {n} values but got {} gaussians and {} prior entries",
                gaussians.len(),
                class_prior.len()
            )));
        }
        let dim = gaussians[0].dim();
        if gaussians.iter().any(|g| g.dim() != dim) {
            return Err(Error::InvalidInput("value gaussians have different dimensions".into()));
        }
        if class_prior.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidInput("class prior entries must be positive".into()));
        }
        let total: f64 = class_prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("class prior sums to {total}, not 1")));
        }
        let ln_prior = class_prior.iter().map(|p| p.ln()).collect();
        Ok(Self { schema, gaussians, class_prior, ln_prior, dim, provenance })
    }

    /// Fits the probe on training rows: a MAP Gaussian per value under a GIW
    /// prior and class frequencies for the categorical prior.
    pub fn fit(schema: AttributeSchema, train: &LabeledRows, policy: &HyperPolicy) -> Result<Self> {
        policy.validate()?;
        train.check_labels(schema.len())?;
        let d = train.dim();
        let counts = value_counts(train.labels(), schema.len());
        for (v, &c) in counts.iter().enumerate() {
            if c < 2 {
                return Err(Error::InsufficientData(format!(
                    "value `{}` of `{}` has {c} training rows, need at least 2",
                    schema.values[v], schema.attribute
                )));
            }
        }
        let pooled_prior = match (policy.mle, policy.scope) {
            (false, PriorScope::Pooled) => {
                Some(giw::hyperparams_with(&train.matrix(), policy.k0, policy.nu0_offset)?)
            }
            _ => None,
        };
        let mut gaussians = Vec::with_capacity(schema.len());
        for v in 0..schema.len() {
            let data = train.value_matrix(v);
            let prior = if policy.mle {
                GiwHyperparams::mle_reduction(d)
            } else if let Some(p) = &pooled_prior {
                p.clone()
            } else {
                giw::hyperparams_with(&data, policy.k0, policy.nu0_offset)?
            };
            let stats = SufficientStats::from_rows(&data);
            let post = giw::posterior_update(&prior, &stats)?;
            gaussians.push(giw::map_estimate(&post)?);
        }
        let total = train.len() as f64;
        let class_prior = counts.iter().map(|&c| c as f64 / total).collect();
        let provenance = Provenance {
            hyperparams: Some(policy.clone()),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            ..Provenance::default()
        };
        Self::new(schema, gaussians, class_prior, provenance)
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_values(&self) -> usize {
        self.schema.len()
    }

    pub fn gaussians(&self) -> &[GaussianParams] {
        &self.gaussians
    }

    pub fn gaussian(&self, value: usize) -> &GaussianParams {
        &self.gaussians[value]
    }

    pub fn class_prior(&self) -> &[f64] {
        &self.class_prior
    }

    pub fn ln_class_prior(&self) -> &[f64] {
        &self.ln_prior
    }

    pub fn evaluator(&self, subset: &[usize]) -> Result<SubsetEvaluator<'_>> {
        SubsetEvaluator::new(self, subset)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            schema: self.schema.clone(),
            dim: self.dim,
            class_prior: self
                .schema
                .values
                .iter()
                .cloned()
                .zip(self.class_prior.iter().copied())
                .collect(),
            gaussians: self
                .schema
                .values
                .iter()
                .cloned()
                .zip(self.gaussians.iter().map(|g| GaussianDocument {
                    mean: g.mean().iter().copied().collect(),
                    cov: g.cov().transpose().iter().copied().collect(),
                }))
                .collect(),
            provenance: self.provenance.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format version {}",
                doc.format_version
            )));
        }
        let d = doc.dim;
        let mut gaussians = Vec::with_capacity(doc.schema.len());
        let mut prior = Vec::with_capacity(doc.schema.len());
        for value in &doc.schema.values {
            let g = doc
                .gaussians
                .get(value)
                .ok_or_else(|| Error::Format(format!("model has no gaussian for `{value}`")))?;
            let p = doc
                .class_prior
                .get(value)
                .ok_or_else(|| Error::Format(format!("model has no prior for `{value}`")))?;
            if g.mean.len() != d || g.cov.len() != d * d {
                return Err(Error::Format(format!("gaussian for `{value}` does not have dimension {d}")));
            }
            gaussians.push(GaussianParams::new(
                DVector::from_vec(g.mean.clone()),
                DMatrix::from_row_slice(d, d, &g.cov),
            )?);
            prior.push(*p);
        }
        if doc.gaussians.len() != doc.schema.len() || doc.class_prior.len() != doc.schema.len() {
            return Err(Error::Format("model lists values outside its schema".into()));
        }
        Self::new(doc.schema, gaussians, prior, doc.provenance)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    schema: AttributeSchema,
    dim: usize,
    class_prior: IndexMap<String, f64>,
    gaussians: IndexMap<String, GaussianDocument>,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct GaussianDocument {
    mean: Vec<f64>,
    /// row-major
    cov: Vec<f64>,
}

pub(crate) fn value_counts(labels: &[usize], n_values: usize) -> Vec<usize> {
    let mut counts = vec![0; n_values];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Number of free parameters of a probe: `n(d(d+1)/2 + d) + (n − 1)`.
pub fn param_count(d: u64, n_values: u64) -> u64 {
    n_values * gaussian_param_count(d) + n_values.saturating_sub(1)
}

/// Mean plus covariance parameters of one `d`-dimensional Gaussian.
pub fn gaussian_param_count(d: u64) -> u64 {
    d * (d + 1) / 2 + d
}

/// ln Σ exp(xᵢ), stable for large magnitudes.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// A probe restricted to a subset of dimensions, with one factor per value.
#[derive(Debug, Clone)]
pub struct SubsetEvaluator<'a> {
    model: &'a ProbeModel,
    subset: Vec<usize>,
    factors: Vec<CholFactor>,
}

impl<'a> SubsetEvaluator<'a> {
    /// Builds factors by bordering one dimension at a time, in subset order.
    pub fn new(model: &'a ProbeModel, subset: &[usize]) -> Result<Self> {
        gaussian::validate_subset(subset, model.dim())?;
        let factors = model
            .gaussians
            .iter()
            .map(|g| {
                subset
                    .iter()
                    .try_fold(CholFactor::empty(), |f, &j| f.extend(g, j))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { model, subset: subset.to_vec(), factors })
    }

    /// Uses precomputed per-value factors, which must all cover the same dims.
    pub fn from_factors(model: &'a ProbeModel, factors: Vec<CholFactor>) -> Result<Self> {
        if factors.len() != model.n_values() {
            return Err(Error::InvalidInput("need one factor per value".into()));
        }
        let subset = factors[0].dims().to_vec();
        if factors.iter().any(|f| f.dims() != subset.as_slice()) {
            return Err(Error::InvalidInput("factors cover different dimensions".into()));
        }
        Ok(Self { model, subset, factors })
    }

    pub fn model(&self) -> &'a ProbeModel {
        self.model
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn factors(&self) -> &[CholFactor] {
        &self.factors
    }

    /// Picks the subset's coordinates out of a full-dimension row.
    pub fn restrict(&self, row: &[f64]) -> Vec<f64> {
        self.subset.iter().map(|&j| row[j]).collect()
    }

    /// ln p(h_C, v) for every value.
    pub fn log_joint(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.model
            .gaussians
            .iter()
            .zip(&self.factors)
            .zip(&self.model.ln_prior)
            .map(|((g, f), lp)| Ok(gaussian::log_pdf(h, g, f)? + lp))
            .collect()
    }

    /// ln p(v | h_C) for every value.
    pub fn log_posterior(&self, h: &[f64]) -> Result<Vec<f64>> {
        let mut joint = self.log_joint(h)?;
        let norm = log_sum_exp(&joint);
        for x in &mut joint {
            *x -= norm;
        }
        Ok(joint)
    }

    /// p(v | h_C), normalized with log-sum-exp.
    pub fn posterior(&self, h: &[f64]) -> Result<Vec<f64>> {
        let lp = self.log_posterior(h)?;
        let probs: Vec<f64> = lp.iter().map(|x| x.exp()).collect();
        let total: f64 = probs.iter().sum();
        Ok(probs.into_iter().map(|p| p / total).collect())
    }

    /// Most probable value; ties go to the earliest value in schema order.
    pub fn predict(&self, h: &[f64]) -> Result<usize> {
        Ok(argmax(&self.log_joint(h)?))
    }

    /// Σₙ ln p(v⁽ⁿ⁾ | h⁽ⁿ⁾_C) over full-dimension rows, summed in row order.
    pub fn log_likelihood(&self, rows: &LabeledRows) -> Result<f64> {
        self.check_rows(rows)?;
        let mut total = 0.0;
        for i in 0..rows.len() {
            let lp = self.log_posterior(&self.restrict(rows.row(i)))?;
            total += lp[rows.labels()[i]];
        }
        Ok(total)
    }

    pub(crate) fn check_rows(&self, rows: &LabeledRows) -> Result<()> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("no rows to evaluate".into()));
        }
        if rows.dim() != self.model.dim() {
            return Err(Error::InvalidInput(format!(
                "rows have dimension {} but model has {}",
                rows.dim(),
                self.model.dim()
            )));
        }
        rows.check_labels(self.model.n_values())
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_pd, scalar_gaussian};
    use approx::assert_relative_eq;

    fn schema2() -> AttributeSchema {
        AttributeSchema::new("Tense", vec!["PRS".into(), "PST".into()]).unwrap()
    }

    fn identical_model(prior: [f64; 2]) -> ProbeModel {
        let g = random_pd(3, 1);
        ProbeModel::new(schema2(), vec![g.clone(), g], prior.to_vec(), Provenance::default()).unwrap()
    }

    #[test]
    fn schema_rejects_duplicates_and_empty() {
        assert!(AttributeSchema::new("A", vec![]).is_err());
        assert!(AttributeSchema::new("A", vec!["x".into(), "x".into()]).is_err());
        assert!(AttributeSchema::new("", vec!["x".into()]).is_err());
    }

    #[test]
    fn identical_gaussians_return_the_prior() {
        let m = identical_model([0.5, 0.5]);
        let e = m.evaluator(&[0, 2]).unwrap();
        let p = e.posterior(&[3.0, -7.0]).unwrap();
        assert_relative_eq!(p[0], 0.5, epsilon = 1e-15);

        let m = identical_model([0.75, 0.25]);
        let e = m.evaluator(&[1]).unwrap();
        let p = e.posterior(&[12.0]).unwrap();
        assert_relative_eq!(p[0], 0.75, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn one_dimensional_logistic_posterior() {
        let m = ProbeModel::new(
            schema2(),
            vec![scalar_gaussian(0.0, 1.0), scalar_gaussian(2.0, 1.0)],
            vec![0.5, 0.5],
            Provenance::default(),
        )
        .unwrap();
        let e = m.evaluator(&[0]).unwrap();
        let p = e.posterior(&[1.0]).unwrap();
        assert_relative_eq!(p[0], 0.5, epsilon = 1e-15);
        let p = e.posterior(&[0.0]).unwrap();
        // log-likelihood ratio at h = 0 is 2
        assert_relative_eq!(p[0], 0.880_797_077_977_882_3, epsilon = 1e-12);
        assert_relative_eq!(p[1], 0.119_202_922_022_117_7, epsilon = 1e-12);
    }

    #[test]
    fn log_likelihood_examples() {
        let m = identical_model([0.5, 0.5]);
        let e = m.evaluator(&[0, 1, 2]).unwrap();
        let rows = LabeledRows::from_rows(&vec![vec![0.1, 0.2, 0.3]; 10], vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 0]).unwrap();
        assert_relative_eq!(e.log_likelihood(&rows).unwrap(), 10.0 * 0.5f64.ln(), epsilon = 1e-12);

        let m = identical_model([0.75, 0.25]);
        let e = m.evaluator(&[1]).unwrap();
        let rows = LabeledRows::from_rows(&[vec![0.0, 0.0, 0.0]], vec![0]).unwrap();
        assert_relative_eq!(e.log_likelihood(&rows).unwrap(), 0.75f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn separated_log_likelihood_is_near_zero() {
        let m = ProbeModel::new(
            schema2(),
            vec![scalar_gaussian(-10.0, 1.0), scalar_gaussian(10.0, 1.0)],
            vec![0.5, 0.5],
            Provenance::default(),
        )
        .unwrap();
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![if i % 2 == 0 { -10.0 } else { 10.0 } + (i as f64 / 100.0 - 0.5)]).collect();
        let labels = (0..100).map(|i| i % 2).collect();
        let ll = m.evaluator(&[0]).unwrap().log_likelihood(&LabeledRows::from_rows(&rows, labels).unwrap()).unwrap();
        assert!(ll.abs() < 1e-3, "{ll}");
    }

    #[test]
    fn unknown_label_rejected() {
        let m = identical_model([0.5, 0.5]);
        let rows = LabeledRows::from_rows(&[vec![0.0; 3]], vec![2]).unwrap();
        assert!(matches!(m.evaluator(&[0]).unwrap().log_likelihood(&rows), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn fit_counts_and_means() {
        let rows: Vec<Vec<f64>> = (0..400).map(|i| if i < 300 { vec![1.0, 2.0] } else { vec![-3.0, 0.5] }).collect();
        let labels = (0..400).map(|i| usize::from(i >= 300)).collect();
        let train = LabeledRows::from_rows(&rows, labels).unwrap();
        let m = ProbeModel::fit(schema2(), &train, &HyperPolicy::default()).unwrap();
        assert_eq!(m.class_prior(), &[0.75, 0.25]);
        for (v, want) in [[1.0, 2.0], [-3.0, 0.5]].iter().enumerate() {
            for (got, want) in m.gaussian(v).mean().iter().zip(want) {
                assert!((got - want).abs() < 1e-12, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn fit_needs_two_rows_per_value() {
        let train = LabeledRows::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], vec![0, 0, 1]).unwrap();
        let err = ProbeModel::fit(schema2(), &train, &HyperPolicy::default()).unwrap_err();
        assert!(matches!(&err, Error::InsufficientData(msg) if msg.contains("PST")), "{err}");
    }

    #[test]
    fn pooled_scope_fits() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
        let labels = (0..40).map(|i| i % 2).collect();
        let train = LabeledRows::from_rows(&rows, labels).unwrap();
        let policy = HyperPolicy { scope: PriorScope::Pooled, ..Default::default() };
        let pooled = ProbeModel::fit(schema2(), &train, &policy).unwrap();
        let value = ProbeModel::fit(schema2(), &train, &HyperPolicy::default()).unwrap();
        assert_ne!(pooled.gaussian(0).cov(), value.gaussian(0).cov());
    }

    #[test]
    fn param_counts() {
        assert_eq!(gaussian_param_count(300), 45450);
        assert_eq!(gaussian_param_count(768), 296064);
        assert_eq!(param_count(2, 2), 11);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = ProbeModel::new(
            schema2(),
            vec![random_pd(4, 3), random_pd(4, 4)],
            vec![0.3, 0.7],
            Provenance { dataset_id: "abc".into(), ..Default::default() },
        )
        .unwrap();
        let back = ProbeModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.schema(), m.schema());
        assert_eq!(back.class_prior(), m.class_prior());
        for v in 0..2 {
            assert_eq!(back.gaussian(v).mean(), m.gaussian(v).mean());
            assert_eq!(back.gaussian(v).cov(), m.gaussian(v).cov());
        }
        assert_eq!(back.provenance, m.provenance);
    }

    #[test]
    fn json_rejects_other_versions() {
        let m = identical_model([0.5, 0.5]);
        let text = m.to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(ProbeModel::from_json(&text), Err(Error::Format(_))));
    }

    #[test]
    fn log_sum_exp_extremes() {
        assert_relative_eq!(log_sum_exp(&[1000.0, 1000.0]), 1000.0 + 2f64.ln());
        assert_relative_eq!(log_sum_exp(&[-1e6, 0.0]), 0.0);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}

//! Synthetic datasets with known structure, and brute-force oracles.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{EmbeddingDataset, LabeledToken, Split};
use crate::error::{Error, Result};
use crate::probe::{log_sum_exp, LabeledRows, ProbeModel};
use crate::selection::{n_choose_k, Criterion, EXHAUSTIVE_LIMIT, TIE_TOLERANCE};

pub const GENERATOR_NAME: &str = "ChaCha8Rng";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthValue {
    pub name: String,
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Row-major rows; identity when absent.
    #[serde(default)]
    pub cov: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub d: usize,
    #[serde(default = "default_attribute")]
    pub attribute: String,
    pub values: Vec<SynthValue>,
    /// (train, validation, test)
    pub n_per_split: [usize; 3],
    pub seed: u64,
    #[serde(default)]
    pub informative_dims: Vec<usize>,
}

fn default_attribute() -> String {
    "Synth".to_string()
}

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SynthSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Two equally weighted unit-variance classes whose means differ by
    /// `separation` standard deviations on `dim` only.
    pub fn separated(d: usize, dim: usize, separation: f64, n_per_split: [usize; 3], seed: u64) -> Self {
        let mut shifted = vec![0.0; d];
        shifted[dim] = separation;
        Self {
            d,
            attribute: "Tense".into(),
            values: vec![
                SynthValue { name: "PRS".into(), weight: 0.5, mean: vec![0.0; d], cov: None },
                SynthValue { name: "PST".into(), weight: 0.5, mean: shifted, cov: None },
            ],
            n_per_split,
            seed,
            informative_dims: vec![dim],
        }
    }

    /// Classes with identical parameters and the given weights.
    pub fn no_signal(d: usize, weights: &[f64], n_per_split: [usize; 3], seed: u64) -> Self {
        Self {
            d,
            attribute: "Case".into(),
            values: weights
                .iter()
                .enumerate()
                .map(|(i, &w)| SynthValue { name: format!("V{i}"), weight: w, mean: vec![0.0; d], cov: None })
                .collect(),
            n_per_split,
            seed,
            informative_dims: vec![],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 {
            return Err(Error::InvalidSpec("d must be positive".into()));
        }
        if self.values.len() < 2 {
            return Err(Error::InvalidSpec("need at least two values".into()));
        }
        for (i, v) in self.values.iter().enumerate() {
            if self.values[..i].iter().any(|o| o.name == v.name) {
                return Err(Error::InvalidSpec(format!("value `{}` listed twice", v.name)));
            }
            if !(v.weight > 0.0) {
                return Err(Error::InvalidSpec(format!("weight of `{}` must be positive", v.name)));
            }
            if v.mean.len() != d {
                return Err(Error::InvalidSpec(format!("mean of `{}` must have length {d}", v.name)));
            }
            self.cov_matrix(v)?
                .cholesky()
                .ok_or_else(|| Error::InvalidSpec(format!("covariance of `{}` is not positive definite", v.name)))?;
        }
        let total: f64 = self.values.iter().map(|v| v.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!("weights sum to {total}, not 1")));
        }
        if let Some(&j) = self.informative_dims.iter().find(|&&j| j >= d) {
            return Err(Error::InvalidSpec(format!("informative dimension {j} out of range")));
        }
        let quiet: Vec<usize> = (0..d).filter(|j| !self.informative_dims.contains(j)).collect();
        let first = &self.values[0];
        let first_cov = self.cov_matrix(first)?;
        for v in &self.values[1..] {
            let cov = self.cov_matrix(v)?;
            for &a in &quiet {
                if v.mean[a] != first.mean[a] || quiet.iter().any(|&b| cov[(a, b)] != first_cov[(a, b)]) {
                    return Err(Error::InvalidSpec(format!(
                        "dimension {a} is not declared informative but `{}` differs from `{}` there",
                        v.name, first.name
                    )));
                }
            }
        }
        Ok(())
    }

    fn cov_matrix(&self, v: &SynthValue) -> Result<DMatrix<f64>> {
        match &v.cov {
            None => Ok(DMatrix::identity(self.d, self.d)),
            Some(rows) => {
                if rows.len() != self.d || rows.iter().any(|r| r.len() != self.d) {
                    return Err(Error::InvalidSpec(format!("covariance of `{}` must be {0}x{0}", self.d)));
                }
                Ok(DMatrix::from_fn(self.d, self.d, |i, j| rows[i][j]))
            }
        }
    }
}

/// Provenance stored next to generated files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthProvenance {
    pub generator: String,
    pub seed: u64,
    pub spec: SynthSpec,
}

/// Samples labels from the class weights and vectors from the class
/// Gaussians, split by split (train, validation, test). Word forms are
/// `w<row>` so type counts equal token counts.
pub fn generate(spec: &SynthSpec) -> Result<EmbeddingDataset> {
    spec.validate()?;
    let d = spec.d;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let chooser = WeightedIndex::new(spec.values.iter().map(|v| v.weight))
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let factors: Vec<DMatrix<f64>> = spec
        .values
        .iter()
        .map(|v| Ok(spec.cov_matrix(v)?.cholesky().expect("validated").l()))
        .collect::<Result<_>>()?;
    let total: usize = spec.n_per_split.iter().sum();
    let mut embeddings = Vec::with_capacity(total * d);
    let mut tokens = Vec::with_capacity(total);
    for split in Split::ALL {
        for _ in 0..spec.n_per_split[split.index()] {
            let row_index = tokens.len();
            let v = chooser.sample(&mut rng);
            let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let x = DVector::from_column_slice(&spec.values[v].mean) + &factors[v] * z;
            embeddings.extend(x.iter().map(|&xi| xi as f32));
            tokens.push(LabeledToken {
                row_index,
                word_form: format!("w{row_index}"),
                split,
                tag: [(spec.attribute.clone(), spec.values[v].name.clone())].into_iter().collect(),
            });
        }
    }
    let mut dataset = EmbeddingDataset::new(d, embeddings, tokens)?;
    dataset.id = format!("synth:{}:{}", GENERATOR_NAME, spec.seed);
    Ok(dataset)
}

/// One-dimensional class-conditional Gaussian: (weight, mean, variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Class1d {
    pub weight: f64,
    pub mean: f64,
    pub var: f64,
}

fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean) * (x - mean) / var)
}

/// p(h) · H(V | h) in bits.
fn mixed_conditional_entropy_density(classes: &[Class1d], h: f64) -> f64 {
    let joint: Vec<f64> = classes.iter().map(|c| c.weight.ln() + ln_normal(h, c.mean, c.var)).collect();
    let ln_p = log_sum_exp(&joint);
    if ln_p == f64::NEG_INFINITY {
        return 0.0;
    }
    let entropy: f64 = joint
        .iter()
        .map(|&lj| {
            let lp = lj - ln_p;
            if lp == f64::NEG_INFINITY {
                0.0
            } else {
                -lp.exp() * lp / std::f64::consts::LN_2
            }
        })
        .sum();
    ln_p.exp() * entropy
}

/// Integration window covering every class to ±12 standard deviations.
pub fn integration_window(classes: &[Class1d]) -> (f64, f64) {
    let lo = classes.iter().map(|c| c.mean - 12.0 * c.var.sqrt()).fold(f64::INFINITY, f64::min);
    let hi = classes.iter().map(|c| c.mean + 12.0 * c.var.sqrt()).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// I(V; H) in bits for a mixture of 1-D Gaussian classes, by adaptive Simpson
/// quadrature of `H(V) − ∫ p(h) H(V|h) dh`.
pub fn true_mi_1d(classes: &[Class1d]) -> f64 {
    let total: f64 = classes.iter().map(|c| c.weight).sum();
    let classes: Vec<Class1d> = classes.iter().map(|c| Class1d { weight: c.weight / total, ..*c }).collect();
    let h_v: f64 = classes.iter().map(|c| -c.weight * c.weight.log2()).sum();
    let (lo, hi) = integration_window(&classes);
    let f = |h: f64| mixed_conditional_entropy_density(&classes, h);
    const PANELS: usize = 256;
    let width = (hi - lo) / PANELS as f64;
    let conditional: f64 = (0..PANELS)
        .map(|i| {
            let a = lo + i as f64 * width;
            adaptive_simpson(&f, a, a + width, 1e-9 / PANELS as f64, 30)
        })
        .sum();
    h_v - conditional
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Exhaustive subset search implemented independently of the incremental
/// factor machinery: each subset's covariances are sliced out, inverted and
/// their determinants taken directly.
pub fn brute_force_best_subset(
    model: &ProbeModel,
    validation: &LabeledRows,
    k: usize,
    criterion: Criterion,
) -> Result<(Vec<usize>, f64)> {
    let d = model.dim();
    if k == 0 || k > d {
        return Err(Error::InvalidInput(format!("subset size {k} must be in 1..={d}")));
    }
    let count = n_choose_k(d, k);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge { count, limit: EXHAUSTIVE_LIMIT });
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let value = naive_score(model, validation, &subset, criterion)?;
        if best.as_ref().is_none_or(|(_, b)| value > b + TIE_TOLERANCE) {
            best = Some((subset.clone(), value));
        }
        // next combination in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| subset[i] < d - k + i) else {
            break;
        };
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
    Ok(best.expect("at least one subset"))
}

/// Fits, then runs [`brute_force_best_subset`] against the validation split.
pub fn brute_force_best_subset_on(
    dataset: &EmbeddingDataset,
    attribute: &str,
    k: usize,
    policy: &crate::giw::HyperPolicy,
) -> Result<(Vec<usize>, f64)> {
    let filtered = crate::data::filter_attribute_values(dataset, attribute)?;
    let schema = filtered
        .schema()
        .ok_or_else(|| Error::InsufficientData(format!("`{attribute}` has fewer than two usable values")))?;
    let train = filtered.labeled_rows(dataset, Split::Train)?;
    let validation = filtered.labeled_rows(dataset, Split::Validation)?;
    let model = ProbeModel::fit(schema, &train, policy)?;
    brute_force_best_subset(&model, &validation, k, Criterion::LogLikelihood)
}

fn naive_score(model: &ProbeModel, rows: &LabeledRows, subset: &[usize], criterion: Criterion) -> Result<f64> {
    let k = subset.len();
    let per_value: Vec<(DVector<f64>, DMatrix<f64>, f64)> = model
        .gaussians()
        .iter()
        .zip(model.ln_class_prior())
        .map(|(g, lp)| {
            let mean = DVector::from_fn(k, |i, _| g.mean()[subset[i]]);
            let cov = DMatrix::from_fn(k, k, |i, j| g.cov()[(subset[i], subset[j])]);
            let det = cov.determinant();
            let inv = cov
                .try_inverse()
                .ok_or(Error::NotPositiveDefinite { index: 0, pivot: det })?;
            let constant = lp - 0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + det.ln());
            Ok((mean, inv, constant))
        })
        .collect::<Result<_>>()?;
    let mut ll = 0.0;
    let mut correct = 0usize;
    for i in 0..rows.len() {
        let row = rows.row(i);
        let h = DVector::from_fn(k, |j, _| row[subset[j]]);
        let joint: Vec<f64> = per_value
            .iter()
            .map(|(mean, inv, c)| {
                let r = &h - mean;
                c - 0.5 * r.dot(&(inv * &r))
            })
            .collect();
        let max = joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let norm = max + joint.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        let gold = rows.labels()[i];
        ll += joint[gold] - norm;
        let pred = joint
            .iter()
            .enumerate()
            .fold(0, |b, (v, &x)| if x > joint[b] { v } else { b });
        if pred == gold {
            correct += 1;
        }
    }
    Ok(match criterion {
        Criterion::LogLikelihood => ll,
        Criterion::Accuracy => correct as f64 / rows.len() as f64,
    })
}

#![allow(dead_code)]

use morphoscope::{AttributeSchema, GaussianParams, LabeledRows, ProbeModel};
use morphoscope::probe::Provenance;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn random_pd(d: usize, rng: &mut ChaCha8Rng) -> GaussianParams {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let cov = &a * a.transpose() + DMatrix::identity(d, d) * 0.5;
    let mean = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
    GaussianParams::new(mean, cov).unwrap()
}

pub fn schema(n_values: usize) -> AttributeSchema {
    AttributeSchema::new("Case", (0..n_values).map(|v| format!("V{v}")).collect()).unwrap()
}

pub fn random_model(d: usize, n_values: usize, seed: u64) -> ProbeModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussians = (0..n_values).map(|_| random_pd(d, &mut rng)).collect();
    let raw: Vec<f64> = (0..n_values).map(|_| rng.random_range(0.5..2.0)).collect();
    let total: f64 = raw.iter().sum();
    let prior = raw.iter().map(|w| w / total).collect();
    ProbeModel::new(schema(n_values), gaussians, prior, Provenance::default()).unwrap()
}

/// Rows drawn from the model's own class Gaussians, labels cycling through values.
pub fn sample_rows(model: &ProbeModel, n: usize, seed: u64) -> LabeledRows {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = model.dim();
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let v = i % model.n_values();
        let g = model.gaussian(v);
        let l = g.cov().clone().cholesky().unwrap().l();
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let x = g.mean() + l * z;
        data.extend(x.iter());
        labels.push(v);
    }
    LabeledRows::new(d, data, labels).unwrap()
}

/// Class `v` ~ N(shift·v on the first `signal` dims, I).
pub fn shifted_rows(d: usize, n_values: usize, n: usize, signal: usize, shift: f64, seed: u64) -> LabeledRows {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let v = i % n_values;
        for j in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(z + if j < signal { shift * v as f64 * (j + 1) as f64 } else { 0.0 });
        }
        labels.push(v);
    }
    LabeledRows::new(d, data, labels).unwrap()
}

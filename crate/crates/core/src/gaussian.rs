//! Dense multivariate Gaussian primitives.
//!
//! A [`GaussianParams`] holds a mean and a positive-definite covariance together
//! with the Cholesky factor of the full covariance. Densities on a subset of
//! dimensions are evaluated through a [`CholFactor`] that covers exactly that
//! subset; factors can be grown one dimension at a time by bordering, which
//! costs one triangular solve and one scalar pivot.
//!
//! All densities are natural-log.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// ln(2π)
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Mean and covariance of a multivariate Gaussian, plus the cached factor of
/// the full covariance.
#[derive(Debug, Clone)]
pub struct GaussianParams {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    factor: CholFactor,
}

impl GaussianParams {
    /// Validates shape and symmetry, then factorizes the covariance. If the
    /// plain factorization fails, a diagonal jitter of `ε · trace / d` is added
    /// with ε growing from 1e-10 to 1e-4; the stored covariance includes any
    /// jitter that was needed so that every principal submatrix stays PD.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidInput("gaussian must have at least one dimension".into()));
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::InvalidInput(format!(
                "covariance is {}x{} but mean has length {d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("gaussian parameters must be finite".into()));
        }
        let scale = cov.amax();
        let tol = 1e-9 * scale;
        for i in 0..d {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > tol {
                    return Err(Error::InvalidInput(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        // Symmetrize exactly so that row and column access agree.
        let mut cov = cov;
        for i in 0..d {
            for j in 0..i {
                let avg = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = avg;
                cov[(j, i)] = avg;
            }
        }

        let dims: Vec<usize> = (0..d).collect();
        let (factor, jitter) = factorize_with_jitter(&cov, &dims)?;
        if jitter > 0.0 {
            log::warn!("covariance needed diagonal jitter {jitter:e} to factorize");
            for i in 0..d {
                cov[(i, i)] += jitter;
            }
        }
        Ok(Self { mean, cov, factor })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Factor of the full covariance, covering dimensions `0..d` in order.
    pub fn factor(&self) -> &CholFactor {
        &self.factor
    }

    /// Log-density of a full-length vector.
    pub fn log_pdf_full(&self, x: &[f64]) -> Result<f64> {
        log_pdf(x, self, &self.factor)
    }

    /// Parameters of the marginal over `subset`, in subset order.
    pub fn marginalize(&self, subset: &[usize]) -> Result<GaussianParams> {
        marginalize(self, subset)
    }
}

/// Natural-log density of `x` (already restricted to `factor.dims()`) under the
/// marginal of `params` on those dimensions.
pub fn log_pdf(x: &[f64], params: &GaussianParams, factor: &CholFactor) -> Result<f64> {
    let k = factor.len();
    if x.len() != k {
        return Err(Error::InvalidInput(format!(
            "point has {} coordinates but factor covers {k} dimensions",
            x.len()
        )));
    }
    if factor.dims.iter().any(|&j| j >= params.dim()) {
        return Err(Error::InvalidInput("factor dimensions exceed parameter dimension".into()));
    }
    let mut z: Vec<f64> = x
        .iter()
        .zip(&factor.dims)
        .map(|(xi, &j)| xi - params.mean[j])
        .collect();
    factor.solve_lower_in_place(&mut z);
    let quad: f64 = z.iter().map(|v| v * v).sum();
    Ok(-0.5 * (k as f64 * LN_2PI + factor.log_det + quad))
}

/// Restricts mean and covariance to `subset`, preserving the subset's order.
pub fn marginalize(params: &GaussianParams, subset: &[usize]) -> Result<GaussianParams> {
    validate_subset(subset, params.dim())?;
    let mean = DVector::from_iterator(subset.len(), subset.iter().map(|&i| params.mean[i]));
    let cov = DMatrix::from_fn(subset.len(), subset.len(), |r, c| params.cov[(subset[r], subset[c])]);
    GaussianParams::new(mean, cov)
}

pub(crate) fn validate_subset(subset: &[usize], d: usize) -> Result<()> {
    let mut seen = vec![false; d];
    for &i in subset {
        if i >= d {
            return Err(Error::InvalidInput(format!("dimension {i} out of range for d = {d}")));
        }
        if seen[i] {
            return Err(Error::InvalidInput(format!("dimension {i} appears twice in subset")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Lower-triangular Cholesky factor of a covariance submatrix.
///
/// Rows are stored packed: row `i` holds `i + 1` entries. `dims` lists the
/// original dimension indices the factor covers, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    packed: Vec<f64>,
    log_det: f64,
    dims: Vec<usize>,
}

/// New last row of a bordered factor: `row` solves `L·row = Σ[dims, new]` and
/// `pivot` is the new diagonal entry.
#[derive(Debug, Clone)]
pub struct Border {
    pub row: Vec<f64>,
    pub pivot: f64,
}

impl Default for CholFactor {
    fn default() -> Self {
        Self::empty()
    }
}

impl CholFactor {
    pub fn empty() -> Self {
        Self { packed: Vec::new(), log_det: 0.0, dims: Vec::new() }
    }

    /// Fresh factorization of `params.cov()` restricted to `dims`.
    pub fn factorize(params: &GaussianParams, dims: &[usize]) -> Result<Self> {
        validate_subset(dims, params.dim())?;
        Ok(factorize_with_jitter(&params.cov, dims)?.0)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// ln |Σ_C| = 2 Σ ln L_ii
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Row `i` of the lower factor, entries `0..=i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.packed[start..start + i + 1]
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.row(i)[i]
    }

    /// Dense copy of the lower factor.
    pub fn lower(&self) -> DMatrix<f64> {
        let k = self.len();
        DMatrix::from_fn(k, k, |i, j| if j <= i { self.row(i)[j] } else { 0.0 })
    }

    /// Forward substitution `L z = b`, overwriting `b` with `z`.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.len());
        for i in 0..b.len() {
            let row = self.row(i);
            let mut acc = b[i];
            for j in 0..i {
                acc -= row[j] * b[j];
            }
            b[i] = acc / row[i];
        }
    }

    /// Computes the bordering row for appending `new_dim`, applying the
    /// jitter policy to the new pivot only.
    pub fn border(&self, params: &GaussianParams, new_dim: usize) -> Result<Border> {
        let d = params.dim();
        if new_dim >= d {
            return Err(Error::InvalidInput(format!("dimension {new_dim} out of range for d = {d}")));
        }
        if self.dims.contains(&new_dim) {
            return Err(Error::InvalidInput(format!("dimension {new_dim} is already in the factor")));
        }
        let mut row: Vec<f64> = self.dims.iter().map(|&i| params.cov[(i, new_dim)]).collect();
        self.solve_lower_in_place(&mut row);
        let base = params.cov[(new_dim, new_dim)] - row.iter().map(|v| v * v).sum::<f64>();
        if base > 0.0 && base.is_finite() {
            return Ok(Border { row, pivot: base.sqrt() });
        }
        let trace: f64 = self
            .dims
            .iter()
            .chain(std::iter::once(&new_dim))
            .map(|&i| params.cov[(i, i)])
            .sum();
        let mean_diag = trace / (self.len() + 1) as f64;
        let mut eps = JITTER_START;
        while eps <= JITTER_MAX * (1.0 + 1e-12) {
            let sq = base + eps * mean_diag;
            if sq > 0.0 && sq.is_finite() {
                log::warn!("bordered pivot for dimension {new_dim} needed jitter {eps:e}");
                return Ok(Border { row, pivot: sq.sqrt() });
            }
            eps *= 10.0;
        }
        Err(Error::NotPositiveDefinite { index: self.len(), pivot: base })
    }

    /// Appends a precomputed border for `new_dim`.
    pub fn push(&mut self, new_dim: usize, border: Border) {
        debug_assert_eq!(border.row.len(), self.len());
        self.packed.extend_from_slice(&border.row);
        self.packed.push(border.pivot);
        self.log_det += 2.0 * border.pivot.ln();
        self.dims.push(new_dim);
    }

    /// Factor of the submatrix for `dims ++ [new_dim]`, by bordering.
    pub fn extend(&self, params: &GaussianParams, new_dim: usize) -> Result<CholFactor> {
        let border = self.border(params, new_dim)?;
        let mut next = self.clone();
        next.push(new_dim, border);
        Ok(next)
    }
}

/// Fresh factorization of `cov[dims, dims]` with the jitter policy. Returns the
/// factor and the absolute diagonal jitter that was added (0 if none).
fn factorize_with_jitter(cov: &DMatrix<f64>, dims: &[usize]) -> Result<(CholFactor, f64)> {
    let k = dims.len();
    if k == 0 {
        return Ok((CholFactor::empty(), 0.0));
    }
    let mean_diag = dims.iter().map(|&i| cov[(i, i)]).sum::<f64>() / k as f64;
    let mut jitter = 0.0;
    let mut eps = JITTER_START;
    loop {
        match cholesky_packed(cov, dims, jitter) {
            Ok(factor) => return Ok((factor, jitter)),
            Err((index, pivot)) => {
                if eps > JITTER_MAX * (1.0 + 1e-12) || !(mean_diag > 0.0) {
                    return Err(Error::NotPositiveDefinite { index, pivot });
                }
                jitter = eps * mean_diag;
                eps *= 10.0;
            }
        }
    }
}

fn cholesky_packed(
    cov: &DMatrix<f64>,
    dims: &[usize],
    jitter: f64,
) -> std::result::Result<CholFactor, (usize, f64)> {
    let k = dims.len();
    let mut packed = vec![0.0; k * (k + 1) / 2];
    let mut log_det = 0.0;
    for i in 0..k {
        let ri = i * (i + 1) / 2;
        for j in 0..=i {
            let rj = j * (j + 1) / 2;
            let mut sum = cov[(dims[i], dims[j])];
            for p in 0..j {
                sum -= packed[ri + p] * packed[rj + p];
            }
            if i == j {
                sum += jitter;
                if !(sum > 0.0) || !sum.is_finite() {
                    return Err((i, sum));
                }
                let l = sum.sqrt();
                packed[ri + i] = l;
                log_det += 2.0 * l.ln();
            } else {
                packed[ri + j] = sum / packed[rj + j];
            }
        }
    }
    Ok(CholFactor { packed, log_det, dims: dims.to_vec() })
}

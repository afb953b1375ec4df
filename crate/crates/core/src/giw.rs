//! Gaussian–inverse-Wishart conjugate prior.
//!
//! Default hyperparameters follow the usual regularized-QDA recipe: the prior
//! mean is the empirical mean, the scale matrix is the diagonal of the
//! empirical (population) covariance, `ν₀ = d + 2` and `k₀ = 0.01`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::gaussian::GaussianParams;

pub const DEFAULT_K0: f64 = 0.01;
pub const DEFAULT_NU0_OFFSET: f64 = 2.0;

/// Relative floor on each prior variance, as a fraction of the mean variance.
const VARIANCE_FLOOR_REL: f64 = 1e-6;
/// Absolute floor used when every dimension has zero variance.
const VARIANCE_FLOOR_ABS: f64 = 1e-12;

/// Hyperparameters `(μ, k, Λ, ν)`, used for both the prior and the posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct GiwHyperparams {
    pub mu: DVector<f64>,
    pub k: f64,
    pub lambda: DMatrix<f64>,
    pub nu: f64,
}

impl GiwHyperparams {
    /// Validated constructor for a proper prior.
    pub fn new(mu: DVector<f64>, k: f64, lambda: DMatrix<f64>, nu: f64) -> Result<Self> {
        let d = mu.len();
        if lambda.nrows() != d || lambda.ncols() != d {
            return Err(Error::InvalidInput("scale matrix does not match mean dimension".into()));
        }
        if !(k > 0.0) {
            return Err(Error::InvalidInput(format!("k0 must be positive, got {k}")));
        }
        if !(nu > d as f64 - 1.0) {
            return Err(Error::InvalidInput(format!("nu0 must exceed d - 1 = {}, got {nu}", d - 1)));
        }
        if lambda.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite { index: 0, pivot: f64::NAN });
        }
        Ok(Self { mu, k, lambda, nu })
    }

    /// The improper prior `k₀ = 0, Λ₀ = 0, ν₀ = −(d + 2)` whose MAP estimate is
    /// the maximum-likelihood estimate. Only meaningful for testing.
    pub fn mle_reduction(d: usize) -> Self {
        Self {
            mu: DVector::zeros(d),
            k: 0.0,
            lambda: DMatrix::zeros(d, d),
            nu: -(d as f64 + 2.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Count, empirical mean and scatter matrix of one value's data.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub count: usize,
    pub mean_hat: DVector<f64>,
    pub scatter: DMatrix<f64>,
}

impl SufficientStats {
    pub fn empty(d: usize) -> Self {
        Self { count: 0, mean_hat: DVector::zeros(d), scatter: DMatrix::zeros(d, d) }
    }

    /// Two-pass statistics over the rows of `data` (N × d).
    pub fn from_rows(data: &DMatrix<f64>) -> Self {
        let (n, d) = data.shape();
        if n == 0 {
            return Self::empty(d);
        }
        let mean_hat = data.row_mean().transpose();
        let mut centered = data.clone();
        for mut row in centered.row_iter_mut() {
            row -= mean_hat.transpose();
        }
        let scatter = centered.tr_mul(&centered);
        Self { count: n, mean_hat, scatter }
    }

    pub fn dim(&self) -> usize {
        self.mean_hat.len()
    }
}

/// Which rows feed the prior moments `μ₀` and `Λ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorScope {
    /// Each value's own training rows.
    #[default]
    Value,
    /// All training rows of the attribute.
    Pooled,
}

/// Hyperparameter choices for fitting a probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperPolicy {
    pub k0: f64,
    /// `ν₀ = d + nu0_offset`
    pub nu0_offset: f64,
    pub scope: PriorScope,
    /// Use the MLE-reducing improper prior instead. Test-only.
    #[serde(default)]
    pub mle: bool,
}

impl Default for HyperPolicy {
    fn default() -> Self {
        Self { k0: DEFAULT_K0, nu0_offset: DEFAULT_NU0_OFFSET, scope: PriorScope::Value, mle: false }
    }
}

impl HyperPolicy {
    pub fn mle() -> Self {
        Self { mle: true, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mle {
            return Ok(());
        }
        if !(self.k0 > 0.0) || !self.k0.is_finite() {
            return Err(Error::InvalidInput(format!("k0 must be positive, got {}", self.k0)));
        }
        if !(self.nu0_offset > -1.0) || !self.nu0_offset.is_finite() {
            return Err(Error::InvalidInput(format!(
                "nu0 offset must exceed -1, got {}",
                self.nu0_offset
            )));
        }
        Ok(())
    }
}

/// Default prior from one block of data (N × d), N ≥ 2.
pub fn default_hyperparams(data: &DMatrix<f64>) -> Result<GiwHyperparams> {
    hyperparams_with(data, DEFAULT_K0, DEFAULT_NU0_OFFSET)
}

pub(crate) fn hyperparams_with(data: &DMatrix<f64>, k0: f64, nu0_offset: f64) -> Result<GiwHyperparams> {
    let (n, d) = data.shape();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "prior needs at least 2 rows, got {n}"
        )));
    }
    let mu0 = data.row_mean().transpose();
    let variances: Vec<f64> = (0..d)
        .map(|j| {
            let col = data.column(j);
            col.iter().map(|x| (x - mu0[j]).powi(2)).sum::<f64>() / n as f64
        })
        .collect();
    let floored = floor_variances(&variances);
    let lambda0 = DMatrix::from_diagonal(&DVector::from_vec(floored));
    GiwHyperparams::new(mu0, k0, lambda0, d as f64 + nu0_offset)
}

fn floor_variances(variances: &[f64]) -> Vec<f64> {
    let mean_var = variances.iter().sum::<f64>() / variances.len() as f64;
    let floor = if mean_var > 0.0 { VARIANCE_FLOOR_REL * mean_var } else { VARIANCE_FLOOR_ABS };
    variances.iter().map(|&v| v.max(floor)).collect()
}

/// Conjugate update of `prior` with `stats`.
pub fn posterior_update(prior: &GiwHyperparams, stats: &SufficientStats) -> Result<GiwHyperparams> {
    let d = prior.dim();
    if stats.dim() != d || stats.scatter.nrows() != d || stats.scatter.ncols() != d {
        return Err(Error::InvalidInput(format!(
            "statistics have dimension {} but prior has {d}",
            stats.dim()
        )));
    }
    if stats.count == 0 {
        return Ok(prior.clone());
    }
    let n = stats.count as f64;
    let k_n = prior.k + n;
    let nu_n = prior.nu + n;
    let mu_n = (&prior.mu * prior.k + &stats.mean_hat * n) / k_n;
    let diff = &stats.mean_hat - &prior.mu;
    let shrink = n * prior.k / (n + prior.k);
    let lambda_n = &prior.lambda + &stats.scatter + (&diff * diff.transpose()) * shrink;
    Ok(GiwHyperparams { mu: mu_n, k: k_n, lambda: lambda_n, nu: nu_n })
}

/// Posterior mode: `μ* = μₙ`, `Σ* = Λₙ / (νₙ + d + 2)`.
pub fn map_estimate(post: &GiwHyperparams) -> Result<GaussianParams> {
    let d = post.dim() as f64;
    let denom = post.nu + d + 2.0;
    if !(denom > 0.0) {
        return Err(Error::InvalidInput(format!("nu_n + d + 2 must be positive, got {denom}")));
    }
    GaussianParams::new(post.mu.clone(), &post.lambda / denom)
}

/// ln Γ_d(a)
pub fn ln_multivariate_gamma(d: usize, a: f64) -> f64 {
    let p = d as f64;
    p * (p - 1.0) / 4.0 * std::f64::consts::PI.ln()
        + (1..=d).map(|j| ln_gamma(a + (1.0 - j as f64) / 2.0)).sum::<f64>()
}

/// Natural-log inverse-Wishart density of `sigma` with scale `lambda` and
/// `nu` degrees of freedom:
///
/// `|Λ|^{ν/2} / (2^{νd/2} Γ_d(ν/2)) · |Σ|^{-(ν+d+1)/2} · exp(-½ tr(Λ Σ⁻¹))`
pub fn iw_log_density(sigma: &DMatrix<f64>, lambda: &DMatrix<f64>, nu: f64) -> Result<f64> {
    let d = sigma.nrows();
    if sigma.ncols() != d || lambda.shape() != (d, d) {
        return Err(Error::InvalidInput("sigma and lambda must be square and the same size".into()));
    }
    if !(nu > d as f64 - 1.0) {
        return Err(Error::InvalidInput(format!("nu must exceed d - 1 = {}, got {nu}", d as f64 - 1.0)));
    }
    let sigma_chol = sigma
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { index: 0, pivot: f64::NAN })?;
    let lambda_chol = lambda
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { index: 0, pivot: f64::NAN })?;
    let ln_det = |l: &DMatrix<f64>| 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let ln_det_sigma = ln_det(&sigma_chol.l());
    let ln_det_lambda = ln_det(&lambda_chol.l());
    let trace = (lambda * sigma_chol.inverse()).trace();
    let p = d as f64;
    Ok(0.5 * nu * ln_det_lambda
        - 0.5 * nu * p * std::f64::consts::LN_2
        - ln_multivariate_gamma(d, nu / 2.0)
        - 0.5 * (nu + p + 1.0) * ln_det_sigma
        - 0.5 * trace)
}

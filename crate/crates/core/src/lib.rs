//! Intrinsic probing of embedding dimensions with a decomposable Gaussian probe.
//!
//! A [`probe::ProbeModel`] holds one MAP-regularized Gaussian per attribute
//! value. Because Gaussian marginals are sub-vectors and sub-matrices of the
//! full parameters, the probe fit once on all dimensions yields a probe for
//! every subset, which makes greedy dimension selection against held-out
//! log-likelihood ([`selection`]) cheap.

pub mod data;
pub mod error;
pub mod gaussian;
pub mod giw;
pub mod metrics;
pub mod probe;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};
pub use gaussian::{CholFactor, GaussianParams};
pub use giw::{GiwHyperparams, HyperPolicy, PriorScope, SufficientStats};
pub use metrics::MetricCurve;
pub use probe::{AttributeSchema, LabeledRows, ProbeModel, SubsetEvaluator};
pub use selection::{Criterion, SelectionTrace};

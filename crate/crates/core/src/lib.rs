//! Average-treatment-effect estimation with a known propensity score.
//!
//! * [`model`]: observations, samples, the propensity score, validation.
//! * [`estimators`]: IPW (known and fitted propensity), finite-support
//!   imputation, KPS, and the linearly modified (LM) estimator.
//! * [`asymptotics`]: population asymptotic variances, the semiparametric
//!   efficiency bound and covariate-set comparisons, integrated by seeded
//!   Monte Carlo against analytic population models.
//! * [`experiments`]: the logistic/linear simulation design, replication
//!   sweeps and variance-reduction curves.

pub mod asymptotics;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod rng;

pub use error::{AteError, Result};
pub use model::{
    validate_sample, weighted_group_means, CovariateRole, CovariateVector, EstimateResult,
    GroupMeans, PropensityFunction, Sample, Unit, ValidationReport, Violation,
};
pub use nalgebra;

//! ATE estimators and their nuisance fitters.

mod cells;
mod imputation;
mod ipw;
mod kps;
mod lm;
mod propensity;
mod regression;

use std::fmt;
use std::str::FromStr;

pub use cells::{group_cells, CellKey, CellStats};
pub use imputation::{imputation_finite_support, PropensityMode};
pub use ipw::{ipw_estimated, ipw_known, x_ipw};
pub use kps::kps;
pub use lm::{asycov_xb_hat, asycov_xx_hat, lm};
pub use propensity::{
    fit_logistic, fit_propensity, FittedPropensity, LogisticFit, PropensityFitKind,
    LOGISTIC_GRADIENT_TOLERANCE, LOGISTIC_MAX_ITERATIONS,
};
pub use regression::{
    fit_outcome_regression, OutcomeRegression, OutcomeRegressionKind, RIDGE_CONDITION_THRESHOLD,
    RIDGE_SCALE,
};

use crate::error::{AteError, Result};
use crate::model::{EstimateResult, PropensityFunction, Sample};

/// Estimators selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    IpwKnown,
    IpwEstimated,
    ImputationKnown,
    ImputationEstimated,
    Kps,
    Lm,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::IpwKnown,
        EstimatorKind::IpwEstimated,
        EstimatorKind::ImputationKnown,
        EstimatorKind::ImputationEstimated,
        EstimatorKind::Kps,
        EstimatorKind::Lm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::IpwKnown => "ipw_known",
            EstimatorKind::IpwEstimated => "ipw_estimated",
            EstimatorKind::ImputationKnown => "imputation_known",
            EstimatorKind::ImputationEstimated => "imputation_estimated",
            EstimatorKind::Kps => "kps",
            EstimatorKind::Lm => "lm",
        }
    }

    /// Whether the estimator consumes the known propensity score.
    pub fn needs_known_propensity(self) -> bool {
        !matches!(
            self,
            EstimatorKind::IpwEstimated | EstimatorKind::ImputationEstimated
        )
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = AteError;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                AteError::InvalidInput(format!(
                    "unknown estimator {s:?}; expected one of ipw_known, ipw_estimated, imputation_known, imputation_estimated, kps, lm"
                ))
            })
    }
}

/// Nuisance choices for [`run_estimator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorOptions {
    pub propensity_fit: PropensityFitKind,
    pub outcome_regression: OutcomeRegressionKind,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            propensity_fit: PropensityFitKind::LogisticMle,
            outcome_regression: OutcomeRegressionKind::LinearLeastSquares,
        }
    }
}

/// Runs one estimator by kind. `ps` is required for the known-propensity
/// estimators and ignored by the others.
pub fn run_estimator(
    kind: EstimatorKind,
    sample: &Sample,
    ps: Option<&PropensityFunction>,
    options: EstimatorOptions,
) -> Result<EstimateResult> {
    let known = || {
        ps.ok_or_else(|| AteError::InvalidInput(format!("{kind} needs a known propensity score")))
    };
    match kind {
        EstimatorKind::IpwKnown => ipw_known(sample, known()?),
        EstimatorKind::IpwEstimated => {
            let fit = fit_propensity(sample, options.propensity_fit)?;
            ipw_estimated(sample, &fit)
        }
        EstimatorKind::ImputationKnown => {
            imputation_finite_support(sample, &PropensityMode::Known(known()?.clone()))
        }
        EstimatorKind::ImputationEstimated => {
            imputation_finite_support(sample, &PropensityMode::Estimated)
        }
        EstimatorKind::Kps => {
            let reg = fit_outcome_regression(sample, options.outcome_regression)?;
            kps(sample, known()?, &reg)
        }
        EstimatorKind::Lm => lm(sample, known()?),
    }
}

//! Finite-sample replication sweeps.

use rayon::prelude::*;

use crate::asymptotics::{population_summary, MomentEstimate};
use crate::error::{AteError, Result};
use crate::estimators::{run_estimator, EstimatorKind, EstimatorOptions};
use crate::experiments::dgp::{generate_sample_on_stream, CovariateDistribution, DgpConfig};
use crate::rng::derive_seed;

/// A replication that produced no estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationFailure {
    pub replication: usize,
    pub message: String,
}

/// Estimates of one estimator across a sweep, in replication order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub estimator: EstimatorKind,
    pub n: usize,
    pub seed_base: u64,
    pub estimates: Vec<f64>,
    /// Replication index of each entry of `estimates`.
    pub replication_ids: Vec<usize>,
    pub failures: Vec<ReplicationFailure>,
}

impl ReplicationResult {
    pub fn estimator_name(&self) -> &'static str {
        self.estimator.name()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.estimates)
    }

    /// Unbiased variance of the estimates.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let k = self.estimates.len();
        if k < 2 {
            return f64::NAN;
        }
        self.estimates
            .iter()
            .map(|e| (e - m) * (e - m))
            .sum::<f64>()
            / (k - 1) as f64
    }

    /// `n` times the replication variance.
    pub fn scaled_variance(&self) -> f64 {
        self.n as f64 * self.variance()
    }

    /// Standard error of [`Self::mean`].
    pub fn standard_error(&self) -> f64 {
        (self.variance() / self.estimates.len() as f64).sqrt()
    }

    pub fn rmse(&self, truth: f64) -> f64 {
        (self
            .estimates
            .iter()
            .map(|e| (e - truth) * (e - truth))
            .sum::<f64>()
            / self.estimates.len() as f64)
            .sqrt()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Runs every estimator in `estimators` on `reps` independent samples.
///
/// Replication `i` draws its sample from stream `i` of `seed`; estimator
/// failures are recorded per replication and never stop the sweep.
pub fn run_replications(
    config: &DgpConfig,
    estimators: &[EstimatorKind],
    n: usize,
    reps: usize,
    seed: u64,
    options: EstimatorOptions,
) -> Result<Vec<ReplicationResult>> {
    if reps < 2 {
        return Err(AteError::InvalidInput(format!(
            "need at least 2 replications, got {reps}"
        )));
    }
    if n < 2 {
        return Err(AteError::InvalidInput(format!(
            "need at least 2 units, got {n}"
        )));
    }
    if estimators.is_empty() {
        return Err(AteError::InvalidInput("no estimators requested".into()));
    }
    config.validate()?;

    let outcomes: Vec<Vec<Result<f64, String>>> = (0..reps)
        .into_par_iter()
        .map(
            |i| match generate_sample_on_stream(config, n, seed, i as u64) {
                Ok((sample, ps)) => estimators
                    .iter()
                    .map(|&kind| {
                        run_estimator(kind, &sample, Some(&ps), options)
                            .map(|r| r.estimate)
                            .map_err(|e| e.to_string())
                    })
                    .collect(),
                Err(e) => vec![Err(e.to_string()); estimators.len()],
            },
        )
        .collect();

    Ok(estimators
        .iter()
        .enumerate()
        .map(|(k, &estimator)| {
            let mut result = ReplicationResult {
                estimator,
                n,
                seed_base: seed,
                estimates: Vec::with_capacity(reps),
                replication_ids: Vec::with_capacity(reps),
                failures: Vec::new(),
            };
            for (i, row) in outcomes.iter().enumerate() {
                match &row[k] {
                    Ok(v) => {
                        result.estimates.push(*v);
                        result.replication_ids.push(i);
                    }
                    Err(message) => result.failures.push(ReplicationFailure {
                        replication: i,
                        message: message.clone(),
                    }),
                }
            }
            result
        })
        .collect())
}

/// Replication variance set against its asymptotic counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceCheck {
    pub replications: ReplicationResult,
    /// `n` times the replication variance.
    pub scaled_variance: f64,
    pub asymptotic: MomentEstimate,
    pub ratio: f64,
}

/// Compares `n * Var(estimates)` over `reps` replications with the
/// asymptotic variance from `draws` population draws.
///
/// Supported estimators are `ipw_known`, `lm` and `imputation_known`; the
/// last one needs the ternary covariate distribution.
pub fn finite_sample_variance_check(
    config: &DgpConfig,
    estimator: EstimatorKind,
    n: usize,
    reps: usize,
    draws: usize,
    seed: u64,
) -> Result<VarianceCheck> {
    match estimator {
        EstimatorKind::IpwKnown | EstimatorKind::Lm => {}
        EstimatorKind::ImputationKnown => {
            if config.covariate_dist != CovariateDistribution::TernaryUniform {
                return Err(AteError::UnsupportedModel(
                    "imputation_known needs finite-support (ternary) covariates".into(),
                ));
            }
        }
        other => {
            return Err(AteError::UnsupportedModel(format!(
                "no asymptotic variance available for {other}"
            )))
        }
    }
    let model = config.population_model()?;
    let summary = population_summary(
        &model,
        draws,
        derive_seed(seed, 1),
        estimator == EstimatorKind::Lm,
    )?;
    let asymptotic = match estimator {
        EstimatorKind::IpwKnown => summary.asyvar_ipw_known,
        EstimatorKind::Lm => summary.asyvar_lm().expect("gain computed"),
        _ => summary.asyvar_imp_known,
    };
    let replications = run_replications(
        config,
        &[estimator],
        n,
        reps,
        seed,
        EstimatorOptions::default(),
    )?
    .pop()
    .expect("one estimator");
    if replications.estimates.len() < 2 {
        return Err(AteError::FitFailure(format!(
            "{} of {reps} replications failed",
            replications.failures.len()
        )));
    }
    let scaled_variance = replications.scaled_variance();
    Ok(VarianceCheck {
        ratio: scaled_variance / asymptotic.value,
        scaled_variance,
        asymptotic,
        replications,
    })
}

//! The reduction ratio `R(theta, t)` and its average over `theta`.
//!
//! `R(theta, t)` is the share of the gap between the known-propensity IPW
//! variance and the efficiency bound that the LM modification removes.

use std::f64::consts::TAU;

use crate::asymptotics::{population_summary, RatioEstimate};
use crate::error::{AteError, Result};
use crate::estimators::{EstimatorKind, EstimatorOptions};
use crate::experiments::dgp::DgpConfig;
use crate::experiments::replications::run_replications;
use crate::rng::derive_seed;

/// Default number of theta grid points.
pub const DEFAULT_THETA_GRID: usize = 64;
/// Default Monte Carlo draws per population moment.
pub const DEFAULT_DRAWS: usize = 1_000_000;
/// The `t` values tabulated for each covariate distribution.
pub const UNIFORM_T_GRID: [f64; 3] = [2.0, 1.0, 0.5];
pub const NORMAL_T_GRID: [f64; 3] = [1.0, 0.5, 0.25];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMethod {
    Asymptotic,
    FiniteSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RCurve {
    pub t: f64,
    pub thetas: Vec<f64>,
    /// `None` where the denominator was indistinguishable from zero.
    pub r_values: Vec<Option<RatioEstimate>>,
    /// Mean over the valid grid points.
    pub r_average: RatioEstimate,
    pub method: CurveMethod,
}

impl RCurve {
    pub fn excluded(&self) -> usize {
        self.r_values.iter().filter(|r| r.is_none()).count()
    }
}

/// `R(theta, t)` from the population formulas at `config.theta`, `config.t`.
pub fn r_theta_asymptotic(config: &DgpConfig, draws: usize, seed: u64) -> Result<RatioEstimate> {
    population_summary(&config.population_model()?, draws, seed, true)?.reduction_ratio()
}

/// `R(theta, t)` from replication variances of IPW and LM on shared samples.
///
/// The bound in the denominator comes from `draws` population draws. The
/// standard error treats numerator and denominator as independent.
pub fn r_theta_finite_sample(
    config: &DgpConfig,
    n: usize,
    reps: usize,
    draws: usize,
    seed: u64,
) -> Result<RatioEstimate> {
    let bound = population_summary(
        &config.population_model()?,
        draws,
        derive_seed(seed, 1),
        false,
    )?
    .efficiency_bound;
    let runs = run_replications(
        config,
        &[EstimatorKind::IpwKnown, EstimatorKind::Lm],
        n,
        reps,
        seed,
        EstimatorOptions::default(),
    )?;
    // Pair the two estimators on the replications where both succeeded.
    let (ipw, lm): (Vec<f64>, Vec<f64>) = runs[0]
        .replication_ids
        .iter()
        .zip(&runs[0].estimates)
        .filter_map(|(id, &a)| {
            runs[1]
                .replication_ids
                .binary_search(id)
                .ok()
                .map(|j| (a, runs[1].estimates[j]))
        })
        .unzip();
    let k = ipw.len();
    if k < 2 {
        return Err(AteError::FitFailure(format!(
            "only {k} usable replications"
        )));
    }
    let scale = n as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / k as f64;
    let (ma, mb) = (mean(&ipw), mean(&lm));
    let sq_a: Vec<f64> = ipw.iter().map(|a| scale * (a - ma) * (a - ma)).collect();
    let diff: Vec<f64> = ipw
        .iter()
        .zip(&lm)
        .map(|(a, b)| scale * ((a - ma) * (a - ma) - (b - mb) * (b - mb)))
        .collect();
    let se = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / ((k - 1) * k) as f64).sqrt()
    };
    let correction = k as f64 / (k - 1) as f64;
    let gain = mean(&diff) * correction;
    let excess = mean(&sq_a) * correction - bound.value;
    let excess_se = se(&sq_a).hypot(bound.std_error);
    if excess.is_nan() || excess <= 3.0 * excess_se {
        return Err(AteError::DegenerateDenominator {
            excess,
            std_error: excess_se,
            multiple: 3.0,
        });
    }
    let value = gain / excess;
    Ok(RatioEstimate {
        value,
        std_error: se(&diff).hypot(value * excess_se) / excess,
    })
}

fn theta_grid(grid: usize) -> Result<Vec<f64>> {
    if grid < 8 {
        return Err(AteError::InvalidInput(format!(
            "theta grid needs at least 8 points, got {grid}"
        )));
    }
    Ok((0..grid).map(|j| TAU * j as f64 / grid as f64).collect())
}

fn assemble(
    t: f64,
    thetas: Vec<f64>,
    points: Vec<Result<RatioEstimate>>,
    method: CurveMethod,
) -> Result<RCurve> {
    let mut r_values = Vec::with_capacity(points.len());
    for p in points {
        match p {
            Ok(r) => r_values.push(Some(r)),
            Err(AteError::DegenerateDenominator { .. }) => r_values.push(None),
            Err(e) => return Err(e),
        }
    }
    let valid: Vec<&RatioEstimate> = r_values.iter().flatten().collect();
    if valid.is_empty() {
        return Err(AteError::DegenerateDenominator {
            excess: 0.0,
            std_error: 0.0,
            multiple: 3.0,
        });
    }
    let g = valid.len() as f64;
    let r_average = RatioEstimate {
        value: valid.iter().map(|r| r.value).sum::<f64>() / g,
        std_error: valid
            .iter()
            .map(|r| r.std_error * r.std_error)
            .sum::<f64>()
            .sqrt()
            / g,
    };
    Ok(RCurve {
        t,
        thetas,
        r_values,
        r_average,
        method,
    })
}

/// `R(theta, t)` on a uniform periodic grid of `grid` angles and its mean
/// (the rectangle rule, exact for trigonometric polynomials of low degree).
///
/// `config.theta` is ignored. Grid point `j` uses seed
/// `derive_seed(seed, j)`. Points whose denominator is within three standard
/// errors of zero are left out of the mean.
pub fn r_average(
    config: &DgpConfig,
    t: f64,
    grid: usize,
    draws: usize,
    seed: u64,
) -> Result<RCurve> {
    let thetas = theta_grid(grid)?;
    let points = thetas
        .iter()
        .enumerate()
        .map(|(j, &theta)| {
            let c = DgpConfig {
                theta,
                t,
                ..config.clone()
            };
            r_theta_asymptotic(&c, draws, derive_seed(seed, j as u64))
        })
        .collect();
    assemble(t, thetas, points, CurveMethod::Asymptotic)
}

/// Finite-sample counterpart of [`r_average`].
pub fn r_average_finite_sample(
    config: &DgpConfig,
    t: f64,
    grid: usize,
    n: usize,
    reps: usize,
    draws: usize,
    seed: u64,
) -> Result<RCurve> {
    let thetas = theta_grid(grid)?;
    let points = thetas
        .iter()
        .enumerate()
        .map(|(j, &theta)| {
            let c = DgpConfig {
                theta,
                t,
                ..config.clone()
            };
            r_theta_finite_sample(&c, n, reps, draws, derive_seed(seed, j as u64))
        })
        .collect();
    assemble(t, thetas, points, CurveMethod::FiniteSample)
}

//! The three-covariate simulation design.
//!
//! Covariates `X = (I, U, C)` are iid. Treatment follows a logistic model in
//! `gamma^T X + logit_intercept` with `gamma = (t, t, 0)` by default, so `I`
//! is an instrument, `U` a confounder and `C` an outcome predictor.
//! Potential outcomes are linear: `Y^T = a1 + c1^T X + sigma_t e_T` and
//! `Y^C = a0 + c0^T X + sigma_c e_C` with `c0 = (0, sin theta, cos theta)`
//! and standard Gaussian noise.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::asymptotics::{CovariateLaw, MarginalLaw, PopulationModel};
use crate::error::{AteError, Result};
use crate::model::{logistic, CovariateRole, PropensityFunction, Sample, Unit};
use crate::rng::{stream_rng, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovariateDistribution {
    /// Uniform on `[-1, 1]`.
    UniformMinus1To1,
    StandardNormal,
    /// Uniform on `{-1, 0, 1}`; gives 27 covariate cells.
    TernaryUniform,
}

impl CovariateDistribution {
    pub fn name(self) -> &'static str {
        match self {
            CovariateDistribution::UniformMinus1To1 => "uniform",
            CovariateDistribution::StandardNormal => "normal",
            CovariateDistribution::TernaryUniform => "ternary",
        }
    }

    pub fn marginal(self) -> MarginalLaw {
        match self {
            CovariateDistribution::UniformMinus1To1 => MarginalLaw::Uniform { lo: -1.0, hi: 1.0 },
            CovariateDistribution::StandardNormal => MarginalLaw::Normal { mean: 0.0, sd: 1.0 },
            CovariateDistribution::TernaryUniform => MarginalLaw::Discrete(vec![-1.0, 0.0, 1.0]),
        }
    }

    fn draw(self, rng: &mut StreamRng) -> f64 {
        match self {
            CovariateDistribution::UniformMinus1To1 => rng.random_range(-1.0..1.0),
            CovariateDistribution::StandardNormal => rng.sample(StandardNormal),
            CovariateDistribution::TernaryUniform => rng.random_range(-1i32..=1) as f64,
        }
    }
}

impl fmt::Display for CovariateDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CovariateDistribution {
    type Err = AteError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" | "uniform-minus1-to1" => Ok(CovariateDistribution::UniformMinus1To1),
            "normal" | "standard-normal" | "gaussian" => Ok(CovariateDistribution::StandardNormal),
            "ternary" | "ternary-uniform" => Ok(CovariateDistribution::TernaryUniform),
            other => Err(AteError::InvalidInput(format!(
                "unknown covariate distribution {other:?} (expected uniform, normal or ternary)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    pub covariate_dist: CovariateDistribution,
    pub a0: f64,
    pub a1: f64,
    pub c1: [f64; 3],
    pub theta: f64,
    pub t: f64,
    pub logit_intercept: f64,
    pub sigma_t: f64,
    pub sigma_c: f64,
    /// Replaces `(t, t, 0)` when set.
    pub gamma: Option<[f64; 3]>,
    /// Replaces `(0, sin theta, cos theta)` when set.
    pub c0: Option<[f64; 3]>,
}

impl Default for DgpConfig {
    fn default() -> Self {
        DgpConfig {
            covariate_dist: CovariateDistribution::UniformMinus1To1,
            a0: 0.0,
            a1: 0.0,
            c1: [0.0, 0.0, 1.0],
            theta: 0.0,
            t: 1.0,
            logit_intercept: 1.0,
            sigma_t: 1.0,
            sigma_c: 1.0,
            gamma: None,
            c0: None,
        }
    }
}

fn dot(a: &[f64; 3], x: &[f64]) -> f64 {
    a[0] * x[0] + a[1] * x[1] + a[2] * x[2]
}

impl DgpConfig {
    pub fn gamma(&self) -> [f64; 3] {
        self.gamma.unwrap_or([self.t, self.t, 0.0])
    }

    pub fn c0(&self) -> [f64; 3] {
        self.c0.unwrap_or([0.0, self.theta.sin(), self.theta.cos()])
    }

    /// `a1 - a0`; every covariate law here has mean zero.
    pub fn true_ate(&self) -> f64 {
        self.a1 - self.a0
    }

    pub fn validate(&self) -> Result<()> {
        let mut values = vec![
            self.a0,
            self.a1,
            self.theta,
            self.t,
            self.logit_intercept,
            self.sigma_t,
            self.sigma_c,
        ];
        values.extend(self.c1);
        values.extend(self.gamma());
        values.extend(self.c0());
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AteError::InvalidInput(
                "simulation parameters must be finite".into(),
            ));
        }
        if self.sigma_t < 0.0 || self.sigma_c < 0.0 {
            return Err(AteError::InvalidInput(
                "noise standard deviations must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn propensity_function(&self) -> PropensityFunction {
        PropensityFunction::logistic(self.logit_intercept, self.gamma().to_vec())
    }

    /// Population model with exact means: `beta_T = a1`, `beta_C = a0`,
    /// `E X = 0`.
    pub fn population_model(&self) -> Result<PopulationModel> {
        self.validate()?;
        let (gamma, b0) = (self.gamma(), self.logit_intercept);
        let (a1, c1, a0, c0) = (self.a1, self.c1, self.a0, self.c0());
        let (vt, vc) = (self.sigma_t * self.sigma_t, self.sigma_c * self.sigma_c);
        PopulationModel::builder(CovariateLaw::Independent(vec![
            self.covariate_dist
                .marginal();
            3
        ]))
        .roles(vec![
            CovariateRole::Instrument,
            CovariateRole::Confounder,
            CovariateRole::OutcomePredictor,
        ])
        .propensity(move |x| logistic(b0 + dot(&gamma, x)))
        .outcome_means(move |x| a1 + dot(&c1, x), move |x| a0 + dot(&c0, x))
        .outcome_variances(move |_| vt, move |_| vc)
        .build_with_means(a1, a0, vec![0.0; 3])
    }
}

/// Draws `n` units on stream 0 of `seed`.
pub fn generate_sample(
    config: &DgpConfig,
    n: usize,
    seed: u64,
) -> Result<(Sample, PropensityFunction)> {
    generate_sample_on_stream(config, n, seed, 0)
}

/// Draws `n` units on stream `stream` of `seed`.
///
/// Per unit the draw order is `I, U, C`, the treatment uniform, then
/// `e_T` and `e_C` (both always drawn).
pub fn generate_sample_on_stream(
    config: &DgpConfig,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<(Sample, PropensityFunction)> {
    config.validate()?;
    let ps = config.propensity_function();
    let c0 = config.c0();
    let mut rng = stream_rng(seed, stream);
    let mut units = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..3)
            .map(|_| config.covariate_dist.draw(&mut rng))
            .collect();
        let treated = rng.random::<f64>() < ps.eval(&x);
        let e_t: f64 = rng.sample(StandardNormal);
        let e_c: f64 = rng.sample(StandardNormal);
        let y = if treated {
            config.a1 + dot(&config.c1, &x) + config.sigma_t * e_t
        } else {
            config.a0 + dot(&c0, &x) + config.sigma_c * e_c
        };
        units.push(Unit::from_values(u8::from(treated), y, x)?);
    }
    Ok((Sample::new(units)?, ps))
}

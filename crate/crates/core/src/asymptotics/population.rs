//! Analytic population models: covariate law plus conditional moments.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::asymptotics::integrate::{run_chunks, MomentEstimate, Welford};
use crate::error::{AteError, Result};
use crate::model::CovariateRole;
use crate::quadrature::QuadratureRule;
use crate::rng::{StreamRng, MEANS_STREAM_OFFSET};

/// Law of one covariate coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalLaw {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Uniform over a finite support.
    Discrete(Vec<f64>),
}

impl MarginalLaw {
    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match self {
            MarginalLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            MarginalLaw::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            MarginalLaw::Discrete(values) => values[rng.random_range(0..values.len())],
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            MarginalLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            MarginalLaw::Normal { mean, .. } => *mean,
            MarginalLaw::Discrete(values) => values.iter().sum::<f64>() / values.len() as f64,
        }
    }

    /// Expectation rule; `nodes` is ignored for discrete laws.
    pub fn quadrature(&self, nodes: usize) -> QuadratureRule {
        match self {
            MarginalLaw::Uniform { lo, hi } => QuadratureRule::uniform(nodes, *lo, *hi),
            MarginalLaw::Normal { mean, sd } => QuadratureRule::normal(nodes, *mean, *sd),
            MarginalLaw::Discrete(values) => QuadratureRule::discrete(values),
        }
    }
}

type Sampler = dyn Fn(&mut StreamRng, &mut [f64]) + Send + Sync;

#[derive(Clone)]
pub enum CovariateLaw {
    /// Independent coordinates with the given marginals.
    Independent(Vec<MarginalLaw>),
    /// Arbitrary joint law; cannot be marginalized.
    Custom { dim: usize, sampler: Arc<Sampler> },
}

impl fmt::Debug for CovariateLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovariateLaw::Independent(m) => f.debug_tuple("Independent").field(m).finish(),
            CovariateLaw::Custom { dim, .. } => f
                .debug_struct("Custom")
                .field("dim", dim)
                .finish_non_exhaustive(),
        }
    }
}

impl CovariateLaw {
    pub fn dim(&self) -> usize {
        match self {
            CovariateLaw::Independent(m) => m.len(),
            CovariateLaw::Custom { dim, .. } => *dim,
        }
    }

    pub fn sample_into(&self, rng: &mut StreamRng, x: &mut [f64]) {
        match self {
            CovariateLaw::Independent(marginals) => {
                for (xi, law) in x.iter_mut().zip(marginals) {
                    *xi = law.sample(rng);
                }
            }
            CovariateLaw::Custom { sampler, .. } => sampler(rng, x),
        }
    }
}

/// Conditional moments at one covariate value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMoments {
    /// `p(x)`
    pub propensity: f64,
    /// `E[Y^T | x]`
    pub mean_treated: f64,
    /// `E[Y^C | x]`
    pub mean_control: f64,
    /// `Var(Y^T | x)`
    pub var_treated: f64,
    /// `Var(Y^C | x)`
    pub var_control: f64,
}

pub(crate) type MomentMap = dyn Fn(&[f64]) -> ConditionalMoments + Send + Sync;
type ScalarMap = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Population means used to center the asymptotic-variance integrands.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationMeans {
    pub beta_treated: MomentEstimate,
    pub beta_control: MomentEstimate,
    /// Average treatment effect.
    pub beta: MomentEstimate,
    pub mean_x: Vec<MomentEstimate>,
}

/// A data-generating process known in closed form up to the covariate law.
#[derive(Clone)]
pub struct PopulationModel {
    law: CovariateLaw,
    roles: Option<Vec<CovariateRole>>,
    moments: Arc<MomentMap>,
    means: PopulationMeans,
}

impl fmt::Debug for PopulationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PopulationModel")
            .field("law", &self.law)
            .field("roles", &self.roles)
            .field("means", &self.means)
            .finish_non_exhaustive()
    }
}

impl PopulationModel {
    pub fn builder(law: CovariateLaw) -> PopulationModelBuilder {
        PopulationModelBuilder {
            law,
            roles: None,
            propensity: None,
            mean_treated: None,
            mean_control: None,
            var_treated: Arc::new(|_| 1.0),
            var_control: Arc::new(|_| 1.0),
        }
    }

    /// Model from a combined conditional-moment map and known means.
    pub(crate) fn from_parts(
        law: CovariateLaw,
        roles: Option<Vec<CovariateRole>>,
        moments: Arc<MomentMap>,
        means: PopulationMeans,
    ) -> Self {
        PopulationModel {
            law,
            roles,
            moments,
            means,
        }
    }

    pub fn dim(&self) -> usize {
        self.law.dim()
    }

    pub fn law(&self) -> &CovariateLaw {
        &self.law
    }

    pub fn roles(&self) -> Option<&[CovariateRole]> {
        self.roles.as_deref()
    }

    pub fn means(&self) -> &PopulationMeans {
        &self.means
    }

    pub fn conditional(&self, x: &[f64]) -> ConditionalMoments {
        (self.moments)(x)
    }

    pub(crate) fn moment_map(&self) -> Arc<MomentMap> {
        Arc::clone(&self.moments)
    }

    pub fn propensity(&self, x: &[f64]) -> f64 {
        self.conditional(x).propensity
    }

    pub fn sample_into(&self, rng: &mut StreamRng, x: &mut [f64]) {
        self.law.sample_into(rng, x)
    }
}

pub struct PopulationModelBuilder {
    law: CovariateLaw,
    roles: Option<Vec<CovariateRole>>,
    propensity: Option<Arc<ScalarMap>>,
    mean_treated: Option<Arc<ScalarMap>>,
    mean_control: Option<Arc<ScalarMap>>,
    var_treated: Arc<ScalarMap>,
    var_control: Arc<ScalarMap>,
}

impl PopulationModelBuilder {
    pub fn roles(mut self, roles: Vec<CovariateRole>) -> Self {
        self.roles = Some(roles);
        self
    }

    pub fn propensity(mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.propensity = Some(Arc::new(f));
        self
    }

    pub fn outcome_means(
        mut self,
        treated: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        control: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.mean_treated = Some(Arc::new(treated));
        self.mean_control = Some(Arc::new(control));
        self
    }

    /// Conditional variances; both default to 1.
    pub fn outcome_variances(
        mut self,
        treated: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        control: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.var_treated = Arc::new(treated);
        self.var_control = Arc::new(control);
        self
    }

    fn parts(self) -> Result<(CovariateLaw, Option<Vec<CovariateRole>>, Arc<MomentMap>)> {
        let missing = |what: &str| AteError::InvalidInput(format!("population model needs {what}"));
        let p = self.propensity.ok_or_else(|| missing("a propensity map"))?;
        let bt = self.mean_treated.ok_or_else(|| missing("outcome means"))?;
        let bc = self.mean_control.ok_or_else(|| missing("outcome means"))?;
        let (vt, vc) = (self.var_treated, self.var_control);
        if let Some(r) = &self.roles {
            if r.len() != self.law.dim() {
                return Err(AteError::InvalidInput(format!(
                    "{} roles for {} covariates",
                    r.len(),
                    self.law.dim()
                )));
            }
        }
        let moments: Arc<MomentMap> = Arc::new(move |x: &[f64]| ConditionalMoments {
            propensity: p(x),
            mean_treated: bt(x),
            mean_control: bc(x),
            var_treated: vt(x),
            var_control: vc(x),
        });
        Ok((self.law, self.roles, moments))
    }

    /// Caches the population means by Monte Carlo on a stream family
    /// disjoint from every integral's draws.
    pub fn build(self, mean_draws: usize, seed: u64) -> Result<PopulationModel> {
        if mean_draws < 2 {
            return Err(AteError::InvalidInput(
                "need at least 2 draws for the means".into(),
            ));
        }
        let (law, roles, moments) = self.parts()?;
        let dim = law.dim();
        let chunks = run_chunks(
            mean_draws,
            seed,
            MEANS_STREAM_OFFSET,
            dim,
            |rng, x| law.sample_into(rng, x),
            || vec![Welford::default(); dim + 3],
            |acc, x| {
                let c = moments(x);
                acc[0].push(c.mean_treated);
                acc[1].push(c.mean_control);
                acc[2].push(c.mean_treated - c.mean_control);
                for (j, v) in x.iter().enumerate() {
                    acc[3 + j].push(*v);
                }
            },
        );
        let mut total = vec![Welford::default(); dim + 3];
        for chunk in &chunks {
            for (t, c) in total.iter_mut().zip(chunk) {
                t.merge(c);
            }
        }
        let est: Vec<MomentEstimate> = total.iter().map(Welford::estimate).collect();
        let means = PopulationMeans {
            beta_treated: est[0],
            beta_control: est[1],
            beta: est[2],
            mean_x: est[3..].to_vec(),
        };
        Ok(PopulationModel::from_parts(law, roles, moments, means))
    }

    /// Uses means known in closed form (zero standard error).
    pub fn build_with_means(
        self,
        beta_treated: f64,
        beta_control: f64,
        mean_x: Vec<f64>,
    ) -> Result<PopulationModel> {
        let (law, roles, moments) = self.parts()?;
        if mean_x.len() != law.dim() {
            return Err(AteError::InvalidInput(format!(
                "{} covariate means for dimension {}",
                mean_x.len(),
                law.dim()
            )));
        }
        let means = PopulationMeans {
            beta_treated: MomentEstimate::exact(beta_treated),
            beta_control: MomentEstimate::exact(beta_control),
            beta: MomentEstimate::exact(beta_treated - beta_control),
            mean_x: mean_x.into_iter().map(MomentEstimate::exact).collect(),
        };
        Ok(PopulationModel::from_parts(law, roles, moments, means))
    }
}

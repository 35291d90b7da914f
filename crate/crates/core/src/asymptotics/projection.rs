//! Projected models over covariate subsets and the covariate-set comparison.

use std::sync::Arc;

use crate::asymptotics::integrate::MomentEstimate;
use crate::asymptotics::moments::population_summary;
use crate::asymptotics::population::{
    ConditionalMoments, CovariateLaw, MomentMap, PopulationMeans, PopulationModel,
};
use crate::error::{AteError, Result};
use crate::model::CovariateRole;
use crate::rng::derive_seed;

/// A model re-expressed over a subset of its covariates.
#[derive(Debug)]
pub struct CovariateProjection {
    /// Indices into the original covariate vector, ascending.
    pub kept_indices: Vec<usize>,
    pub model: PopulationModel,
}

/// Integrates the dropped coordinates out of `model`.
///
/// Dropped coordinates are integrated with a tensor-product expectation rule
/// of `nodes` points per coordinate (discrete coordinates use their support).
/// The projected propensity and outcome means are conditional expectations;
/// the projected variances add the conditional variance of the outcome mean.
/// Population means carry over unchanged.
pub fn marginalize(
    model: &PopulationModel,
    kept: &[usize],
    nodes: usize,
) -> Result<CovariateProjection> {
    let marginals = match model.law() {
        CovariateLaw::Independent(m) => m,
        CovariateLaw::Custom { .. } => {
            return Err(AteError::UnsupportedModel(
                "marginalization needs independent coordinates".into(),
            ))
        }
    };
    let k = marginals.len();
    if kept.windows(2).any(|w| w[0] >= w[1]) || kept.iter().any(|&i| i >= k) {
        return Err(AteError::InvalidInput(format!(
            "kept indices {kept:?} must be ascending and below {k}"
        )));
    }
    if nodes == 0 {
        return Err(AteError::InvalidInput(
            "need at least one quadrature node".into(),
        ));
    }
    let dropped: Vec<usize> = (0..k).filter(|i| !kept.contains(i)).collect();

    // Tensor grid over the dropped coordinates.
    let mut grid: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for &j in &dropped {
        let rule = marginals[j].quadrature(nodes);
        grid = grid
            .iter()
            .flat_map(|(vals, w)| {
                rule.nodes.iter().zip(&rule.weights).map(move |(&x, &v)| {
                    let mut next = vals.clone();
                    next.push(x);
                    (next, w * v)
                })
            })
            .collect();
    }

    let inner = model.moment_map();
    let kept_owned = kept.to_vec();
    let moments: Arc<MomentMap> = Arc::new(move |xk: &[f64]| {
        let mut full = vec![0.0; k];
        for (slot, &i) in kept_owned.iter().enumerate() {
            full[i] = xk[slot];
        }
        let (mut p, mut bt, mut bc, mut bt2, mut bc2, mut vt, mut vc) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (vals, w) in &grid {
            for (&j, &v) in dropped.iter().zip(vals) {
                full[j] = v;
            }
            let c = inner(&full);
            p += w * c.propensity;
            bt += w * c.mean_treated;
            bc += w * c.mean_control;
            bt2 += w * c.mean_treated * c.mean_treated;
            bc2 += w * c.mean_control * c.mean_control;
            vt += w * c.var_treated;
            vc += w * c.var_control;
        }
        ConditionalMoments {
            propensity: p,
            mean_treated: bt,
            mean_control: bc,
            var_treated: vt + (bt2 - bt * bt).max(0.0),
            var_control: vc + (bc2 - bc * bc).max(0.0),
        }
    });

    let law = CovariateLaw::Independent(kept.iter().map(|&i| marginals[i].clone()).collect());
    let roles = model.roles().map(|r| kept.iter().map(|&i| r[i]).collect());
    let old = model.means();
    let means = PopulationMeans {
        beta_treated: old.beta_treated,
        beta_control: old.beta_control,
        beta: old.beta,
        mean_x: kept.iter().map(|&i| old.mean_x[i]).collect(),
    };
    Ok(CovariateProjection {
        kept_indices: kept.to_vec(),
        model: PopulationModel::from_parts(law, roles, moments, means),
    })
}

/// Bound and known-propensity variances for one covariate set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetVariances {
    pub efficiency_bound: MomentEstimate,
    pub asyvar_imp_known: MomentEstimate,
    pub asyvar_ipw_known: MomentEstimate,
}

impl SetVariances {
    fn compute(model: &PopulationModel, draws: usize, seed: u64) -> Result<Self> {
        let s = population_summary(model, draws, seed, false)?;
        Ok(SetVariances {
            efficiency_bound: s.efficiency_bound,
            asyvar_imp_known: s.asyvar_imp_known,
            asyvar_ipw_known: s.asyvar_ipw_known,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `lhs >= rhs - 3 SE`
    AtLeast,
    /// `|lhs - rhs| <= 3 SE`
    Equal,
    /// `lhs <= rhs + 3 SE`
    AtMost,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtLeast => ">=",
            Relation::Equal => "==",
            Relation::AtMost => "<=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonFlag {
    pub name: &'static str,
    pub relation: Relation,
    pub lhs: MomentEstimate,
    pub rhs: MomentEstimate,
    /// Three combined standard errors.
    pub tolerance: f64,
    pub passed: bool,
}

impl ComparisonFlag {
    fn new(
        name: &'static str,
        relation: Relation,
        lhs: MomentEstimate,
        rhs: MomentEstimate,
    ) -> Self {
        let tolerance = 3.0 * lhs.combined_se(&rhs);
        let diff = lhs.value - rhs.value;
        let passed = match relation {
            Relation::AtLeast => diff >= -tolerance,
            Relation::Equal => diff.abs() <= tolerance,
            Relation::AtMost => diff <= tolerance,
        };
        ComparisonFlag {
            name,
            relation,
            lhs,
            rhs,
            tolerance,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateSetComparison {
    /// All covariates.
    pub full: SetVariances,
    /// Outcome predictors dropped.
    pub without_predictors: SetVariances,
    /// Instruments dropped.
    pub without_instruments: SetVariances,
    pub flags: Vec<ComparisonFlag>,
}

impl CovariateSetComparison {
    pub fn all_passed(&self) -> bool {
        self.flags.iter().all(|f| f.passed)
    }
}

/// Compares the full covariate set with the sets lacking outcome predictors
/// and lacking instruments.
///
/// Dropping outcome predictors cannot lower the bound and leaves both
/// known-propensity variances unchanged; dropping instruments cannot raise
/// any of the three. Each set is integrated on its own derived seed.
pub fn compare_covariate_sets(
    model: &PopulationModel,
    draws: usize,
    seed: u64,
    nodes: usize,
) -> Result<CovariateSetComparison> {
    let roles = model
        .roles()
        .ok_or_else(|| AteError::InvalidInput("covariate roles are required".into()))?;
    let keep = |drop: CovariateRole| -> Vec<usize> {
        (0..roles.len()).filter(|&i| roles[i] != drop).collect()
    };
    let x0 = marginalize(model, &keep(CovariateRole::OutcomePredictor), nodes)?;
    let x1 = marginalize(model, &keep(CovariateRole::Instrument), nodes)?;

    let full = SetVariances::compute(model, draws, derive_seed(seed, 0))?;
    let without_predictors = SetVariances::compute(&x0.model, draws, derive_seed(seed, 1))?;
    let without_instruments = SetVariances::compute(&x1.model, draws, derive_seed(seed, 2))?;

    use Relation::*;
    let flags = vec![
        ComparisonFlag::new(
            "bound_without_predictors_ge_full",
            AtLeast,
            without_predictors.efficiency_bound,
            full.efficiency_bound,
        ),
        ComparisonFlag::new(
            "imp_without_predictors_eq_full",
            Equal,
            without_predictors.asyvar_imp_known,
            full.asyvar_imp_known,
        ),
        ComparisonFlag::new(
            "ipw_without_predictors_eq_full",
            Equal,
            without_predictors.asyvar_ipw_known,
            full.asyvar_ipw_known,
        ),
        ComparisonFlag::new(
            "bound_without_instruments_le_full",
            AtMost,
            without_instruments.efficiency_bound,
            full.efficiency_bound,
        ),
        ComparisonFlag::new(
            "imp_without_instruments_le_full",
            AtMost,
            without_instruments.asyvar_imp_known,
            full.asyvar_imp_known,
        ),
        ComparisonFlag::new(
            "ipw_without_instruments_le_full",
            AtMost,
            without_instruments.asyvar_ipw_known,
            full.asyvar_ipw_known,
        ),
    ];
    Ok(CovariateSetComparison {
        full,
        without_predictors,
        without_instruments,
        flags,
    })
}

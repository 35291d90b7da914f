//! Population-level asymptotic variances by seeded Monte Carlo.

mod integrate;
mod moments;
mod population;
mod projection;

pub use integrate::MomentEstimate;
pub use moments::{
    asyvar_imp_known, asyvar_ipw_known, efficiency_bound, lm_gain, population_summary,
    PopulationSummary, RatioEstimate, RELATIVE_EXCESS_FLOOR,
};
pub use population::{
    ConditionalMoments, CovariateLaw, MarginalLaw, PopulationMeans, PopulationModel,
    PopulationModelBuilder,
};
pub use projection::{
    compare_covariate_sets, marginalize, ComparisonFlag, CovariateProjection,
    CovariateSetComparison, Relation, SetVariances,
};

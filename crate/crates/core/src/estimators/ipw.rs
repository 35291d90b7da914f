use crate::error::{AteError, Result};
use crate::estimators::propensity::FittedPropensity;
use crate::model::{normalized_means, EstimateResult, PropensityFunction, Sample};

fn check_arms(sample: &Sample) -> Result<()> {
    if sample.n_treated() == 0 || sample.n_control() == 0 {
        return Err(AteError::DegenerateDesign(format!(
            "{} treated and {} control units",
            sample.n_treated(),
            sample.n_control()
        )));
    }
    Ok(())
}

pub(crate) fn ipw_with_probs(name: &str, sample: &Sample, probs: &[f64]) -> Result<EstimateResult> {
    check_arms(sample)?;
    let units = sample.units();
    let g = normalized_means(sample, probs, 1, |i, _| units[i].y())?;
    Ok(
        EstimateResult::new(name, g.treated[0] - g.control[0], sample)?
            .with_diagnostic("treated_weight_sum", g.treated_weight_sum)
            .with_diagnostic("control_weight_sum", g.control_weight_sum),
    )
}

/// Normalized inverse-propensity weighting with the known propensity score.
pub fn ipw_known(sample: &Sample, ps: &PropensityFunction) -> Result<EstimateResult> {
    let probs = ps.evaluate_sample(sample)?;
    ipw_with_probs("ipw_known", sample, &probs)
}

/// The same contrast with fitted propensities substituted.
pub fn ipw_estimated(sample: &Sample, fit: &FittedPropensity) -> Result<EstimateResult> {
    fit.ensure_usable()?;
    let probs = sample
        .units()
        .iter()
        .map(|u| fit.eval(u.x()))
        .collect::<Result<Vec<_>>>()?;
    ipw_with_probs("ipw_estimated", sample, &probs)
}

/// Weighted covariate-mean contrast between arms, weights as in [`ipw_known`].
pub fn x_ipw(sample: &Sample, ps: &PropensityFunction) -> Result<Vec<f64>> {
    check_arms(sample)?;
    let probs = ps.evaluate_sample(sample)?;
    x_ipw_with_probs(sample, &probs)
}

pub(crate) fn x_ipw_with_probs(sample: &Sample, probs: &[f64]) -> Result<Vec<f64>> {
    let units = sample.units();
    Ok(normalized_means(sample, probs, sample.dim(), |i, j| units[i].x()[j])?.contrast())
}

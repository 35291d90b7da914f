use crate::error::{AteError, Result};
use crate::estimators::regression::OutcomeRegression;
use crate::model::{EstimateResult, PropensityFunction, Sample};

/// Known-propensity estimator with an outcome-regression correction:
/// the mean of `DY/p - (1-D)Y/(1-p) - (D - p)(bT(x)/p - bC(x)/(1-p))`.
pub fn kps(
    sample: &Sample,
    ps: &PropensityFunction,
    reg: &OutcomeRegression,
) -> Result<EstimateResult> {
    if sample.n_treated() == 0 || sample.n_control() == 0 {
        return Err(AteError::DegenerateDesign("kps needs both arms".into()));
    }
    let probs = ps.evaluate_sample(sample)?;
    let mut total = 0.0;
    let mut correction = 0.0;
    for (u, &p) in sample.units().iter().zip(&probs) {
        let (bt, bc) = reg.predict(u.x())?;
        let d = u.d();
        let c = (d - p) * (bt / p - bc / (1.0 - p));
        total += d * u.y() / p - (1.0 - d) * u.y() / (1.0 - p) - c;
        correction += c;
    }
    let n = sample.n() as f64;
    let mut result = EstimateResult::new("kps", total / n, sample)?
        .with_diagnostic("mean_correction", correction / n);
    match reg {
        OutcomeRegression::CellMeans { imputed_cells, .. } => {
            result = result.with_diagnostic("imputed_cells", *imputed_cells as f64)
        }
        OutcomeRegression::Linear { ridged_arms, .. } => {
            result = result.with_diagnostic("ridged_arms", *ridged_arms as f64)
        }
    }
    Ok(result)
}

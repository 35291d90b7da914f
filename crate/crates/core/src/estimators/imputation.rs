use crate::error::{AteError, Result};
use crate::estimators::cells::{group_cells, CellKey};
use crate::model::{EstimateResult, PropensityFunction, Sample};

/// Which propensity divides the cell moments.
#[derive(Debug, Clone)]
pub enum PropensityMode {
    Known(PropensityFunction),
    /// Within-cell treated fraction.
    Estimated,
}

/// Imputation estimator on finite-support covariates.
///
/// Each unit contributes `E[DY|x]/q(x) - E[(1-D)Y|x]/(1-q(x))`, where the
/// conditional moments are within-cell sample means and `q` is either the
/// known propensity or the cell's treated fraction.
pub fn imputation_finite_support(sample: &Sample, mode: &PropensityMode) -> Result<EstimateResult> {
    if sample.n_treated() == 0 || sample.n_control() == 0 {
        return Err(AteError::DegenerateDesign(
            "imputation needs both arms".into(),
        ));
    }
    let cells = group_cells(sample);
    let known = match mode {
        PropensityMode::Known(ps) => Some(ps.evaluate_sample(sample)?),
        PropensityMode::Estimated => None,
    };
    if known.is_none() {
        if let Some((key, c)) = cells.iter().find(|(_, c)| !c.has_both_arms()) {
            return Err(AteError::EmptyCellArm {
                cell: key.to_string(),
                arm: if c.treated == 0 { "treated" } else { "control" },
            });
        }
    }

    let mut total = 0.0;
    for (i, u) in sample.units().iter().enumerate() {
        let c = &cells[&CellKey::of(u.x())];
        let m = c.count as f64;
        let e_dy = c.sum_treated_y / m;
        let e_cy = c.sum_control_y / m;
        let q = match &known {
            Some(p) => p[i],
            None => c.treated as f64 / m,
        };
        total += e_dy / q - e_cy / (1.0 - q);
    }
    let name = match mode {
        PropensityMode::Known(_) => "imputation_known",
        PropensityMode::Estimated => "imputation_estimated",
    };
    Ok(
        EstimateResult::new(name, total / sample.n() as f64, sample)?
            .with_diagnostic("cells", cells.len() as f64),
    )
}

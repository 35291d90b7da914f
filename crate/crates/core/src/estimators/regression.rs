//! Outcome regressions `x -> E[Y^T | X = x]`, `x -> E[Y^C | X = x]` fitted per arm.

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{AteError, Result};
use crate::estimators::cells::{group_cells, CellKey};
use crate::linalg::symmetric_condition;
use crate::model::Sample;

/// Condition estimate above which the ridge term is added.
pub const RIDGE_CONDITION_THRESHOLD: f64 = 1e12;
/// Ridge strength relative to `trace / dim` of the moment matrix.
pub const RIDGE_SCALE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeRegressionKind {
    CellMeans,
    LinearLeastSquares,
}

impl FromStr for OutcomeRegressionKind {
    type Err = AteError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cell-means" | "cells" => Ok(Self::CellMeans),
            "linear" | "linear-least-squares" => Ok(Self::LinearLeastSquares),
            other => Err(AteError::InvalidInput(format!(
                "unknown outcome regression {other:?} (expected cell-means or linear)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeRegression {
    CellMeans {
        /// (treated mean, control mean) per cell.
        table: BTreeMap<CellKey, (f64, f64)>,
        /// Cells where an empty arm took the pooled cell mean.
        imputed_cells: usize,
    },
    Linear {
        /// Intercept then slopes, treated arm.
        treated: Vec<f64>,
        /// Intercept then slopes, control arm.
        control: Vec<f64>,
        /// Arms that needed the ridge fallback.
        ridged_arms: usize,
    },
}

impl OutcomeRegression {
    /// Constant predictions in dimension `dim`.
    pub fn constant(treated: f64, control: f64, dim: usize) -> Self {
        let coefs = |c: f64| {
            std::iter::once(c)
                .chain(std::iter::repeat_n(0.0, dim))
                .collect()
        };
        OutcomeRegression::Linear {
            treated: coefs(treated),
            control: coefs(control),
            ridged_arms: 0,
        }
    }

    pub fn kind(&self) -> OutcomeRegressionKind {
        match self {
            Self::CellMeans { .. } => OutcomeRegressionKind::CellMeans,
            Self::Linear { .. } => OutcomeRegressionKind::LinearLeastSquares,
        }
    }

    /// `(beta_T_hat(x), beta_C_hat(x))`
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        match self {
            Self::CellMeans { table, .. } => {
                let key = CellKey::of(x);
                table
                    .get(&key)
                    .copied()
                    .ok_or_else(|| AteError::EmptySupport(key.to_string()))
            }
            Self::Linear {
                treated, control, ..
            } => {
                if treated.len() != x.len() + 1 {
                    return Err(AteError::InvalidInput(format!(
                        "regression has {} slopes, covariate has {} values",
                        treated.len() - 1,
                        x.len()
                    )));
                }
                Ok((affine(treated, x), affine(control, x)))
            }
        }
    }
}

fn affine(coefs: &[f64], x: &[f64]) -> f64 {
    coefs[0] + coefs[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
}

pub fn fit_outcome_regression(
    sample: &Sample,
    kind: OutcomeRegressionKind,
) -> Result<OutcomeRegression> {
    if sample.n_treated() == 0 || sample.n_control() == 0 {
        return Err(AteError::DegenerateDesign(
            "outcome regression needs both arms".into(),
        ));
    }
    match kind {
        OutcomeRegressionKind::CellMeans => Ok(fit_cell_means(sample)),
        OutcomeRegressionKind::LinearLeastSquares => {
            let (treated, ridged_t) = fit_arm(sample, true)?;
            let (control, ridged_c) = fit_arm(sample, false)?;
            Ok(OutcomeRegression::Linear {
                treated,
                control,
                ridged_arms: ridged_t as usize + ridged_c as usize,
            })
        }
    }
}

fn fit_cell_means(sample: &Sample) -> OutcomeRegression {
    let mut imputed_cells = 0;
    let table = group_cells(sample)
        .into_iter()
        .map(|(key, c)| {
            let pooled = (c.sum_treated_y + c.sum_control_y) / c.count as f64;
            if !c.has_both_arms() {
                imputed_cells += 1;
            }
            let t = if c.treated > 0 {
                c.sum_treated_y / c.treated as f64
            } else {
                pooled
            };
            let k = if c.control() > 0 {
                c.sum_control_y / c.control() as f64
            } else {
                pooled
            };
            (key, (t, k))
        })
        .collect();
    OutcomeRegression::CellMeans {
        table,
        imputed_cells,
    }
}

/// Least squares with intercept on one arm; returns coefficients and whether
/// the ridge fallback was used.
fn fit_arm(sample: &Sample, treated: bool) -> Result<(Vec<f64>, bool)> {
    let k = sample.dim() + 1;
    let mut moments = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    let mut z = DVector::<f64>::zeros(k);
    for u in sample.units().iter().filter(|u| u.treated() == treated) {
        z[0] = 1.0;
        for (j, v) in u.x().iter().enumerate() {
            z[j + 1] = *v;
        }
        moments.ger(1.0, &z, &z, 1.0);
        rhs.axpy(u.y(), &z, 1.0);
    }
    let mut ridged = false;
    if symmetric_condition(&moments) > RIDGE_CONDITION_THRESHOLD {
        let lambda = RIDGE_SCALE * moments.trace() / k as f64;
        for j in 0..k {
            moments[(j, j)] += lambda;
        }
        ridged = true;
    }
    let arm = if treated { "treated" } else { "control" };
    let chol = moments
        .cholesky()
        .ok_or_else(|| AteError::SingularDesign(format!("{arm} moment matrix is singular")))?;
    let beta = chol.solve(&rhs);
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(AteError::SingularDesign(format!("{arm} fit is not finite")));
    }
    Ok((beta.iter().copied().collect(), ridged))
}

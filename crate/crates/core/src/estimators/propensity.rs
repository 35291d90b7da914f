//! Plug-in propensity fitters.

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{AteError, Result};
use crate::estimators::cells::{group_cells, CellKey};
use crate::model::{logistic, Sample, DEFAULT_OVERLAP_MARGIN};

pub const LOGISTIC_GRADIENT_TOLERANCE: f64 = 1e-10;
pub const LOGISTIC_MAX_ITERATIONS: usize = 100;
/// Fitted logits beyond this magnitude are treated as separation.
const MAX_ABS_LOGIT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropensityFitKind {
    CellFrequencies,
    LogisticMle,
}

impl FromStr for PropensityFitKind {
    type Err = AteError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cell-frequencies" | "cells" => Ok(Self::CellFrequencies),
            "logistic-mle" | "logistic" => Ok(Self::LogisticMle),
            other => Err(AteError::InvalidInput(format!(
                "unknown propensity fit {other:?} (expected cell-frequencies or logistic-mle)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    /// Intercept followed by one slope per covariate.
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedPropensity {
    CellFrequencies {
        /// Clipped treated fraction per cell.
        table: BTreeMap<CellKey, f64>,
        /// Cells in which one arm is empty.
        incomplete_cells: usize,
        epsilon: f64,
    },
    Logistic(LogisticFit),
}

impl FittedPropensity {
    pub fn kind(&self) -> PropensityFitKind {
        match self {
            Self::CellFrequencies { .. } => PropensityFitKind::CellFrequencies,
            Self::Logistic(_) => PropensityFitKind::LogisticMle,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Self::CellFrequencies { table, .. } => {
                let key = CellKey::of(x);
                table
                    .get(&key)
                    .copied()
                    .ok_or_else(|| AteError::EmptySupport(key.to_string()))
            }
            Self::Logistic(fit) => {
                let (b0, slopes) = fit.coefficients.split_first().expect("intercept present");
                if slopes.len() != x.len() {
                    return Err(AteError::InvalidInput(format!(
                        "logistic fit has {} slopes, covariate has {} values",
                        slopes.len(),
                        x.len()
                    )));
                }
                Ok(logistic(
                    b0 + slopes.iter().zip(x).map(|(b, v)| b * v).sum::<f64>(),
                ))
            }
        }
    }

    /// Rejects fits that must not be used for weighting.
    pub(crate) fn ensure_usable(&self) -> Result<()> {
        match self {
            Self::CellFrequencies {
                incomplete_cells, ..
            } if *incomplete_cells > 0 => Err(AteError::FitFailure(format!(
                "{incomplete_cells} cells lack a treated or a control unit"
            ))),
            Self::Logistic(fit) if !fit.converged => Err(AteError::FitFailure(format!(
                "logistic MLE did not converge in {} iterations",
                fit.iterations
            ))),
            _ => Ok(()),
        }
    }
}

pub fn fit_propensity(sample: &Sample, kind: PropensityFitKind) -> Result<FittedPropensity> {
    match kind {
        PropensityFitKind::CellFrequencies => {
            Ok(fit_cell_frequencies(sample, DEFAULT_OVERLAP_MARGIN))
        }
        PropensityFitKind::LogisticMle => fit_logistic(sample).map(FittedPropensity::Logistic),
    }
}

fn fit_cell_frequencies(sample: &Sample, epsilon: f64) -> FittedPropensity {
    let cells = group_cells(sample);
    let incomplete_cells = cells.values().filter(|c| !c.has_both_arms()).count();
    let table = cells
        .into_iter()
        .map(|(k, c)| {
            let p = c.treated as f64 / c.count as f64;
            (k, p.clamp(epsilon, 1.0 - epsilon))
        })
        .collect();
    FittedPropensity::CellFrequencies {
        table,
        incomplete_cells,
        epsilon,
    }
}

/// Newton-Raphson on the mean log-likelihood of a logistic model with
/// intercept. Step halving keeps every step non-decreasing.
pub fn fit_logistic(sample: &Sample) -> Result<LogisticFit> {
    let n = sample.n();
    let k = sample.dim() + 1;
    let design = DMatrix::from_fn(n, k, |i, j| {
        if j == 0 {
            1.0
        } else {
            sample.units()[i].x()[j - 1]
        }
    });
    let d = DVector::from_iterator(n, sample.units().iter().map(|u| u.d()));

    let log_lik = |beta: &DVector<f64>| -> f64 {
        let eta = &design * beta;
        eta.iter()
            .zip(d.iter())
            .map(|(&e, &di)| di * e - softplus(e))
            .sum::<f64>()
            / n as f64
    };

    let mut beta = DVector::zeros(k);
    let mut current = log_lik(&beta);
    for iteration in 0..=LOGISTIC_MAX_ITERATIONS {
        let eta = &design * &beta;
        if eta.amax() > MAX_ABS_LOGIT {
            return Err(AteError::FitFailure(
                "fitted probabilities reach 0 or 1 (separated data)".into(),
            ));
        }
        let p = eta.map(logistic);
        let gradient = design.transpose() * (&d - &p) / n as f64;
        if gradient.amax() < LOGISTIC_GRADIENT_TOLERANCE {
            return Ok(LogisticFit {
                coefficients: beta.iter().copied().collect(),
                converged: true,
                iterations: iteration,
            });
        }
        if iteration == LOGISTIC_MAX_ITERATIONS {
            break;
        }
        let w = p.map(|pi| pi * (1.0 - pi));
        let mut hessian = DMatrix::zeros(k, k);
        for (i, row) in design.row_iter().enumerate() {
            hessian += row.transpose() * row * w[i];
        }
        hessian /= n as f64;
        let step = hessian
            .cholesky()
            .ok_or_else(|| AteError::FitFailure("singular information matrix".into()))?
            .solve(&gradient);

        let mut scale = 1.0;
        loop {
            let candidate = &beta + &step * scale;
            let value = log_lik(&candidate);
            if value >= current - 1e-15 * current.abs() || scale < 1e-10 {
                beta = candidate;
                current = value;
                break;
            }
            scale *= 0.5;
        }
    }
    Err(AteError::FitFailure(format!(
        "logistic MLE did not converge in {LOGISTIC_MAX_ITERATIONS} iterations"
    )))
}

fn softplus(e: f64) -> f64 {
    if e > 0.0 {
        e + (-e).exp().ln_1p()
    } else {
        e.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Unit;

    fn sample(rows: &[(u8, f64)]) -> Sample {
        Sample::new(
            rows.iter()
                .map(|&(d, x)| Unit::from_values(d, 0.0, vec![x]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn balanced_cell_is_one_half() {
        let fit = fit_propensity(
            &sample(&[(1, 0.0), (0, 0.0)]),
            PropensityFitKind::CellFrequencies,
        )
        .unwrap();
        assert_eq!(fit.eval(&[0.0]).unwrap(), 0.5);
        assert!(matches!(fit.eval(&[1.0]), Err(AteError::EmptySupport(_))));
        fit.ensure_usable().unwrap();
    }

    #[test]
    fn single_arm_cell_is_clipped_and_flagged() {
        let fit = fit_propensity(
            &sample(&[(1, 0.0), (0, 0.0), (1, 1.0)]),
            PropensityFitKind::CellFrequencies,
        )
        .unwrap();
        assert_eq!(fit.eval(&[1.0]).unwrap(), 1.0 - DEFAULT_OVERLAP_MARGIN);
        assert!(matches!(fit.ensure_usable(), Err(AteError::FitFailure(_))));
    }

    const BASE: [(u8, f64); 8] = [
        (1, 0.3),
        (0, 0.7),
        (1, 1.2),
        (0, 0.1),
        (1, 2.0),
        (1, 0.9),
        (0, 1.5),
        (0, 0.4),
    ];

    #[test]
    fn mirrored_covariates_give_zero_slope() {
        let rows: Vec<_> = BASE.iter().flat_map(|&(d, x)| [(d, x), (d, -x)]).collect();
        let fit = fit_logistic(&sample(&rows)).unwrap();
        assert!(fit.converged);
        assert!(fit.coefficients[1].abs() < 1e-10);
    }

    #[test]
    fn mirrored_labels_give_zero_intercept() {
        let rows: Vec<_> = BASE
            .iter()
            .flat_map(|&(d, x)| [(d, x), (1 - d, -x)])
            .collect();
        let fit = fit_logistic(&sample(&rows)).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-10);
        assert!(fit.coefficients[1].abs() > 1e-3);
    }

    #[test]
    fn logistic_gradient_vanishes_at_fit() {
        let s = sample(&BASE);
        let fit = fit_logistic(&s).unwrap();
        let f = FittedPropensity::Logistic(fit);
        let (mut g0, mut g1) = (0.0, 0.0);
        for u in s.units() {
            let r = u.d() - f.eval(u.x()).unwrap();
            g0 += r;
            g1 += r * u.x()[0];
        }
        assert!(g0.abs() < 1e-9 && g1.abs() < 1e-9);
    }

    #[test]
    fn separated_data_fails() {
        let s = sample(&[
            (1, 0.5),
            (1, 1.0),
            (1, 2.0),
            (0, -0.5),
            (0, -1.0),
            (0, -3.0),
        ]);
        assert!(matches!(
            fit_propensity(&s, PropensityFitKind::LogisticMle),
            Err(AteError::FitFailure(_))
        ));
    }
}

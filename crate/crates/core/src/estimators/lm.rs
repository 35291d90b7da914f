//! The linearly modified estimator: known-propensity IPW minus a fitted
//! multiple of the weighted covariate contrast.

use nalgebra::{DMatrix, DVector};

use crate::error::{AteError, Result};
use crate::estimators::ipw::{ipw_with_probs, x_ipw_with_probs};
use crate::linalg::pseudo_solve;
use crate::model::{EstimateResult, PropensityFunction, Sample};

fn centered(sample: &Sample) -> Vec<DVector<f64>> {
    let k = sample.dim();
    let n = sample.n() as f64;
    let mut mean = DVector::zeros(k);
    for u in sample.units() {
        mean += DVector::from_column_slice(u.x());
    }
    mean /= n;
    sample
        .units()
        .iter()
        .map(|u| DVector::from_column_slice(u.x()) - &mean)
        .collect()
}

pub(crate) fn asycov_xx_with_probs(sample: &Sample, probs: &[f64]) -> DMatrix<f64> {
    let k = sample.dim();
    let mut acc = DMatrix::zeros(k, k);
    for (xc, &p) in centered(sample).iter().zip(probs) {
        acc.ger(1.0 / (p * (1.0 - p)), xc, xc, 1.0);
    }
    acc.fill_upper_triangle_with_lower_triangle();
    acc / sample.n() as f64
}

pub(crate) fn asycov_xb_with_probs(sample: &Sample, probs: &[f64]) -> DVector<f64> {
    let n = sample.n() as f64;
    let units = sample.units();
    let (mut m_t, mut m_c) = (0.0, 0.0);
    for (u, &p) in units.iter().zip(probs) {
        m_t += u.d() * u.y() / p;
        m_c += (1.0 - u.d()) * u.y() / (1.0 - p);
    }
    m_t /= n;
    m_c /= n;
    let mut acc = DVector::zeros(sample.dim());
    for ((u, xc), &p) in units.iter().zip(centered(sample)).zip(probs) {
        let d = u.d();
        let h = d / (p * p) * (u.y() - m_t) + (1.0 - d) / ((1.0 - p) * (1.0 - p)) * (u.y() - m_c);
        acc.axpy(h, &xc, 1.0);
    }
    acc / n
}

/// Sample estimate of the asymptotic covariance of the weighted covariate
/// contrast: `(1/n) sum (x - xbar)(x - xbar)^T / (p (1 - p))`.
pub fn asycov_xx_hat(sample: &Sample, ps: &PropensityFunction) -> Result<DMatrix<f64>> {
    let probs = ps.evaluate_sample(sample)?;
    Ok(asycov_xx_with_probs(sample, &probs))
}

/// Sample estimate of the asymptotic covariance between the weighted
/// covariate contrast and known-propensity IPW. Observed `Y` stands in for
/// `Y^T` and `Y^C` since each term is masked by `D` or `1 - D`.
pub fn asycov_xb_hat(sample: &Sample, ps: &PropensityFunction) -> Result<DVector<f64>> {
    let probs = ps.evaluate_sample(sample)?;
    Ok(asycov_xb_with_probs(sample, &probs))
}

pub fn lm(sample: &Sample, ps: &PropensityFunction) -> Result<EstimateResult> {
    if sample.n_treated() == 0 || sample.n_control() == 0 {
        return Err(AteError::DegenerateDesign("lm needs both arms".into()));
    }
    let probs = ps.evaluate_sample(sample)?;
    let ipw = ipw_with_probs("ipw_known", sample, &probs)?;
    let contrast = DVector::from_vec(x_ipw_with_probs(sample, &probs)?);
    let xx = asycov_xx_with_probs(sample, &probs);
    let xb = asycov_xb_with_probs(sample, &probs);
    let (alpha, rank) = pseudo_solve(&xx, &xb);

    let mut result = EstimateResult::new("lm", ipw.estimate - alpha.dot(&contrast), sample)?;
    result.diagnostics = ipw.diagnostics;
    result.diagnostics.insert("ipw_known".into(), ipw.estimate);
    result.diagnostics.insert("asycov_rank".into(), rank as f64);
    result.alpha_hat = Some(alpha.iter().copied().collect());
    Ok(result)
}

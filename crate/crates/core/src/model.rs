//! Observations, samples and the known propensity score.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{AteError, Result};

/// Default overlap margin: propensities must lie in `(eps, 1 - eps)`.
pub const DEFAULT_OVERLAP_MARGIN: f64 = 1e-6;

/// Causal role of a covariate coordinate. Metadata only; no estimator
/// branches on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovariateRole {
    Instrument,
    Confounder,
    OutcomePredictor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateVector {
    values: Vec<f64>,
    roles: Option<Vec<CovariateRole>>,
}

impl CovariateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(AteError::InvalidInput(format!(
                "covariate {} is not finite ({})",
                j + 1,
                values[j]
            )));
        }
        Ok(CovariateVector {
            values,
            roles: None,
        })
    }

    pub fn with_roles(values: Vec<f64>, roles: Vec<CovariateRole>) -> Result<Self> {
        if roles.len() != values.len() {
            return Err(AteError::InvalidInput(format!(
                "{} roles for {} covariates",
                roles.len(),
                values.len()
            )));
        }
        let mut x = Self::new(values)?;
        x.roles = Some(roles);
        Ok(x)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn roles(&self) -> Option<&[CovariateRole]> {
        self.roles.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// One observation `(D, Y, X)`. Potential outcomes are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    d: u8,
    y: f64,
    x: CovariateVector,
}

impl Unit {
    pub fn new(d: u8, y: f64, x: CovariateVector) -> Result<Self> {
        if d > 1 {
            return Err(AteError::InvalidInput(format!(
                "treatment indicator must be 0 or 1, got {d}"
            )));
        }
        if !y.is_finite() {
            return Err(AteError::InvalidInput(format!("outcome {y} is not finite")));
        }
        Ok(Unit { d, y, x })
    }

    /// Convenience constructor from raw covariate values.
    pub fn from_values(d: u8, y: f64, x: Vec<f64>) -> Result<Self> {
        Self::new(d, y, CovariateVector::new(x)?)
    }

    pub fn treated(&self) -> bool {
        self.d == 1
    }

    /// Treatment indicator as a real.
    pub fn d(&self) -> f64 {
        self.d as f64
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn x(&self) -> &[f64] {
        self.x.values()
    }

    pub fn covariates(&self) -> &CovariateVector {
        &self.x
    }
}

/// A collection of units sharing one covariate dimension.
///
/// Arm non-emptiness is not enforced here: [`validate_sample`] reports it
/// and the estimators reject it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    units: Vec<Unit>,
    dim: usize,
}

impl Sample {
    pub fn new(units: Vec<Unit>) -> Result<Self> {
        if units.len() < 2 {
            return Err(AteError::InvalidInput(format!(
                "a sample needs at least 2 units, got {}",
                units.len()
            )));
        }
        let dim = units[0].x.dim();
        if let Some(i) = units.iter().position(|u| u.x.dim() != dim) {
            return Err(AteError::InvalidInput(format!(
                "unit {i} has {} covariates, expected {dim}",
                units[i].x.dim()
            )));
        }
        Ok(Sample { units, dim })
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn n(&self) -> usize {
        self.units.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_treated(&self) -> usize {
        self.units.iter().filter(|u| u.treated()).count()
    }

    pub fn n_control(&self) -> usize {
        self.n() - self.n_treated()
    }

    /// New sample keeping only the given covariate columns.
    pub fn project(&self, kept: &[usize]) -> Result<Sample> {
        if let Some(&j) = kept.iter().find(|&&j| j >= self.dim) {
            return Err(AteError::InvalidInput(format!(
                "covariate index {j} out of range for dimension {}",
                self.dim
            )));
        }
        let units = self
            .units
            .iter()
            .map(|u| {
                let values = kept.iter().map(|&j| u.x.values[j]).collect();
                let x = match &u.x.roles {
                    Some(r) => {
                        CovariateVector::with_roles(values, kept.iter().map(|&j| r[j]).collect())?
                    }
                    None => CovariateVector::new(values)?,
                };
                Unit::new(u.d, u.y, x)
            })
            .collect::<Result<Vec<_>>>()?;
        Sample::new(units)
    }
}

type PropensityMap = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// The known propensity score `x -> P(D = 1 | X = x)`.
#[derive(Clone)]
pub struct PropensityFunction {
    map: Arc<PropensityMap>,
    epsilon: f64,
}

impl fmt::Debug for PropensityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PropensityFunction")
            .field("epsilon", &self.epsilon)
            .finish_non_exhaustive()
    }
}

impl PropensityFunction {
    pub fn from_fn<F>(map: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        PropensityFunction {
            map: Arc::new(map),
            epsilon: DEFAULT_OVERLAP_MARGIN,
        }
    }

    pub fn constant(p: f64) -> Self {
        Self::from_fn(move |_| p)
    }

    /// `p(x) = 1 / (1 + exp(-(intercept + slopes . x)))`.
    pub fn logistic(intercept: f64, slopes: Vec<f64>) -> Self {
        Self::from_fn(move |x| {
            let eta = intercept + slopes.iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
            logistic(eta)
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.map)(x)
    }

    pub fn within_overlap(&self, p: f64) -> bool {
        p.is_finite() && p > self.epsilon && p < 1.0 - self.epsilon
    }

    /// Propensity of every unit, failing on the first one outside the
    /// overlap band.
    pub fn evaluate_sample(&self, sample: &Sample) -> Result<Vec<f64>> {
        sample
            .units()
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let p = self.eval(u.x());
                if self.within_overlap(p) {
                    Ok(p)
                } else {
                    Err(AteError::OverlapViolation {
                        unit: i,
                        propensity: p,
                        epsilon: self.epsilon,
                    })
                }
            })
            .collect()
    }
}

/// Numerically stable logistic function.
pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Point estimate with metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub estimate: f64,
    pub estimator_name: String,
    pub n_treated: usize,
    pub n_control: usize,
    /// Modification vector; present only for the LM estimator.
    pub alpha_hat: Option<Vec<f64>>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl EstimateResult {
    pub(crate) fn new(name: &str, estimate: f64, sample: &Sample) -> Result<Self> {
        if !estimate.is_finite() {
            return Err(AteError::DegenerateDesign(format!(
                "{name} produced a non-finite estimate"
            )));
        }
        Ok(EstimateResult {
            estimate,
            estimator_name: name.to_string(),
            n_treated: sample.n_treated(),
            n_control: sample.n_control(),
            alpha_hat: None,
            diagnostics: BTreeMap::new(),
        })
    }

    pub(crate) fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Overlap { unit: usize, propensity: f64 },
    DegenerateDesign { n_treated: usize, n_control: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn overlap_violations(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| matches!(v, Violation::Overlap { .. }))
            .count()
    }

    pub fn is_degenerate(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::DegenerateDesign { .. }))
    }
}

/// Checks overlap and non-degeneracy. Unconfoundedness cannot be checked
/// from data and is not.
pub fn validate_sample(sample: &Sample, ps: &PropensityFunction) -> ValidationReport {
    let mut violations: Vec<Violation> = sample
        .units()
        .iter()
        .enumerate()
        .filter_map(|(i, u)| {
            let p = ps.eval(u.x());
            (!ps.within_overlap(p)).then_some(Violation::Overlap {
                unit: i,
                propensity: p,
            })
        })
        .collect();
    let (n_treated, n_control) = (sample.n_treated(), sample.n_control());
    if n_treated == 0 || n_control == 0 {
        violations.push(Violation::DegenerateDesign {
            n_treated,
            n_control,
        });
    }
    ValidationReport { violations }
}

/// Inverse-propensity weighted means of a vector-valued quantity per arm,
/// with weights normalized to one within each arm.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMeans {
    pub treated: Vec<f64>,
    pub control: Vec<f64>,
    pub treated_weight_sum: f64,
    pub control_weight_sum: f64,
}

impl GroupMeans {
    /// Treated mean minus control mean.
    pub fn contrast(&self) -> Vec<f64> {
        self.treated
            .iter()
            .zip(&self.control)
            .map(|(t, c)| t - c)
            .collect()
    }
}

/// Treated mean `sum D v / p / sum D / p` and control mean
/// `sum (1-D) v / (1-p) / sum (1-D) / (1-p)`, one entry of `values` per unit.
pub fn weighted_group_means(
    sample: &Sample,
    ps: &PropensityFunction,
    values: &[Vec<f64>],
) -> Result<GroupMeans> {
    if values.len() != sample.n() {
        return Err(AteError::InvalidInput(format!(
            "{} value vectors for {} units",
            values.len(),
            sample.n()
        )));
    }
    let m = values.first().map_or(0, Vec::len);
    if values.iter().any(|v| v.len() != m) {
        return Err(AteError::InvalidInput(
            "value vectors must share one dimension".into(),
        ));
    }
    let probs = ps.evaluate_sample(sample)?;
    normalized_means(sample, &probs, m, |i, j| values[i][j])
}

/// Kernel behind [`weighted_group_means`] for precomputed propensities and a
/// value accessor `value(unit, component)`.
pub(crate) fn normalized_means(
    sample: &Sample,
    probs: &[f64],
    m: usize,
    value: impl Fn(usize, usize) -> f64,
) -> Result<GroupMeans> {
    let mut treated = vec![0.0; m];
    let mut control = vec![0.0; m];
    let (mut wt, mut wc) = (0.0, 0.0);
    for (i, (u, &p)) in sample.units().iter().zip(probs).enumerate() {
        if u.treated() {
            let w = 1.0 / p;
            wt += w;
            for (j, acc) in treated.iter_mut().enumerate() {
                *acc += w * value(i, j);
            }
        } else {
            let w = 1.0 / (1.0 - p);
            wc += w;
            for (j, acc) in control.iter_mut().enumerate() {
                *acc += w * value(i, j);
            }
        }
    }
    if wt.is_nan() || wc.is_nan() || wt <= 0.0 || wc <= 0.0 {
        return Err(AteError::DegenerateDesign(format!(
            "arm weight sums treated={wt}, control={wc}"
        )));
    }
    treated.iter_mut().for_each(|v| *v /= wt);
    control.iter_mut().for_each(|v| *v /= wc);
    Ok(GroupMeans {
        treated,
        control,
        treated_weight_sum: wt,
        control_weight_sum: wc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: u8, y: f64, x: &[f64]) -> Unit {
        Unit::from_values(d, y, x.to_vec()).unwrap()
    }

    #[test]
    fn valid_two_unit_sample() {
        let s = Sample::new(vec![unit(1, 2.0, &[0.0]), unit(0, 1.0, &[0.0])]).unwrap();
        assert!(validate_sample(&s, &PropensityFunction::constant(0.5)).is_valid());
    }

    #[test]
    fn empty_control_arm_is_reported() {
        let s = Sample::new(vec![unit(1, 2.0, &[0.0]), unit(1, 1.0, &[0.0])]).unwrap();
        let report = validate_sample(&s, &PropensityFunction::constant(0.5));
        assert!(report.is_degenerate());
        assert_eq!(report.overlap_violations(), 0);
    }

    #[test]
    fn near_one_propensity_violates_band() {
        let s = Sample::new(vec![unit(1, 2.0, &[1.0]), unit(0, 1.0, &[0.0])]).unwrap();
        let ps = PropensityFunction::from_fn(|x| if x[0] > 0.5 { 1.0 - 1e-9 } else { 0.5 });
        let report = validate_sample(&s, &ps);
        assert_eq!(
            report.violations,
            vec![Violation::Overlap {
                unit: 0,
                propensity: 1.0 - 1e-9
            }]
        );
    }

    #[test]
    fn invalid_units_rejected() {
        assert!(Unit::from_values(2, 0.0, vec![]).is_err());
        assert!(Unit::from_values(1, f64::NAN, vec![]).is_err());
        assert!(CovariateVector::new(vec![f64::INFINITY]).is_err());
        assert!(CovariateVector::with_roles(vec![1.0], vec![]).is_err());
        assert!(Sample::new(vec![unit(1, 0.0, &[1.0])]).is_err());
        assert!(Sample::new(vec![unit(1, 0.0, &[1.0]), unit(0, 0.0, &[])]).is_err());
    }

    #[test]
    fn group_means_micro_samples() {
        let s = Sample::new(vec![unit(1, 0.0, &[]), unit(0, 0.0, &[])]).unwrap();
        let g = weighted_group_means(
            &s,
            &PropensityFunction::constant(0.5),
            &[vec![2.0], vec![1.0]],
        )
        .unwrap();
        assert_eq!((g.treated[0], g.control[0]), (2.0, 1.0));

        let s = Sample::new(vec![
            unit(1, 0.0, &[0.8]),
            unit(1, 0.0, &[0.2]),
            unit(0, 0.0, &[0.5]),
        ])
        .unwrap();
        let ps = PropensityFunction::from_fn(|x| x[0]);
        let g = weighted_group_means(&s, &ps, &[vec![4.0], vec![1.0], vec![0.0]]).unwrap();
        assert!((g.treated[0] - 1.6).abs() < 1e-15);
        assert_eq!(g.control[0], 0.0);
    }

    #[test]
    fn group_means_need_both_arms() {
        let s = Sample::new(vec![unit(1, 0.0, &[]), unit(1, 0.0, &[])]).unwrap();
        let err = weighted_group_means(
            &s,
            &PropensityFunction::constant(0.5),
            &[vec![1.0], vec![1.0]],
        );
        assert!(matches!(err, Err(AteError::DegenerateDesign(_))));
    }

    #[test]
    fn projection_keeps_columns_and_roles() {
        use CovariateRole::*;
        let x = CovariateVector::with_roles(
            vec![1.0, 2.0, 3.0],
            vec![Instrument, Confounder, OutcomePredictor],
        )
        .unwrap();
        let s = Sample::new(vec![
            Unit::new(1, 0.0, x.clone()).unwrap(),
            Unit::new(0, 0.0, x).unwrap(),
        ])
        .unwrap();
        let p = s.project(&[1, 2]).unwrap();
        assert_eq!(p.units()[0].x(), &[2.0, 3.0]);
        assert_eq!(
            p.units()[0].covariates().roles(),
            Some(&[Confounder, OutcomePredictor][..])
        );
        assert!(s.project(&[3]).is_err());
    }
}

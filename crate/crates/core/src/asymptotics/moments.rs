//! Asymptotic variances, the efficiency bound and the LM gain as population
//! expectations.

use nalgebra::{DMatrix, DVector};

use crate::asymptotics::integrate::{run_chunks, CompensatedSum, MomentEstimate, Welford};
use crate::asymptotics::population::PopulationModel;
use crate::error::{AteError, Result};
use crate::linalg::pseudo_solve;
use crate::rng::StreamRng;

/// Excesses below this fraction of the IPW variance are rounding noise.
pub const RELATIVE_EXCESS_FLOOR: f64 = 1e-12;

/// Every population quantity of interest from one set of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSummary {
    /// `E[vT/p + vC/(1-p) + (beta(X) - beta)^2]`
    pub efficiency_bound: MomentEstimate,
    /// Known-propensity imputation on finite support.
    pub asyvar_imp_known: MomentEstimate,
    /// Known-propensity normalized IPW.
    pub asyvar_ipw_known: MomentEstimate,
    /// `asyvar_imp_known - efficiency_bound`, integrated directly as a square.
    pub imp_excess: MomentEstimate,
    /// `asyvar_ipw_known - efficiency_bound`, integrated directly as a square.
    pub ipw_excess: MomentEstimate,
    /// Variance removed by the optimal linear modification; `None` when the
    /// summary was computed without the second pass.
    pub lm_gain: Option<MomentEstimate>,
    /// Population covariance of the weighted covariate contrast.
    pub asycov_xx: DMatrix<f64>,
    /// Population covariance between the covariate contrast and IPW.
    pub asycov_xb: DVector<f64>,
    /// Optimal modification vector.
    pub alpha: DVector<f64>,
}

impl PopulationSummary {
    /// `asyvar_ipw_known - lm_gain`, the LM estimator's asymptotic variance.
    pub fn asyvar_lm(&self) -> Option<MomentEstimate> {
        self.lm_gain.map(|g| MomentEstimate {
            value: self.asyvar_ipw_known.value - g.value,
            std_error: self.asyvar_ipw_known.combined_se(&g),
            draws: g.draws,
        })
    }

    /// Share of the IPW excess over the bound removed by the LM modification.
    ///
    /// The standard error combines the two relative errors as if numerator
    /// and denominator were independent. Fails with `DegenerateDenominator`
    /// when the excess is within `3 SE` of zero or below
    /// [`RELATIVE_EXCESS_FLOOR`] times the IPW variance.
    pub fn reduction_ratio(&self) -> Result<RatioEstimate> {
        let gain = self
            .lm_gain
            .ok_or_else(|| AteError::InvalidInput("summary computed without the LM gain".into()))?;
        let excess = self.ipw_excess;
        let floor = RELATIVE_EXCESS_FLOOR * self.asyvar_ipw_known.value;
        if !(excess.value > 3.0 * excess.std_error && excess.value > floor) {
            return Err(AteError::DegenerateDenominator {
                excess: excess.value,
                std_error: excess.std_error,
                multiple: 3.0,
            });
        }
        let ratio = gain.value / excess.value;
        Ok(RatioEstimate {
            value: ratio,
            std_error: gain.std_error.hypot(ratio * excess.std_error) / excess.value,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioEstimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone)]
struct PassOne {
    bound: Welford,
    imp: Welford,
    ipw: Welford,
    imp_excess: Welford,
    ipw_excess: Welford,
    z: Vec<f64>,
    w: Vec<f64>,
}

/// Per-draw integrand values shared by both passes.
struct Draw {
    bound: f64,
    imp: f64,
    ipw: f64,
    imp_excess: f64,
    ipw_excess: f64,
    /// `(beta_T(x) - beta_T)/p + (beta_C(x) - beta_C)/(1 - p)`
    h: f64,
    /// `1 / (p (1 - p))`
    w: f64,
}

fn evaluate(model: &PopulationModel, x: &[f64]) -> Draw {
    let m = model.means();
    let c = model.conditional(x);
    let p = c.propensity;
    let q = 1.0 - p;
    let beta = m.beta.value;
    let dt = c.mean_treated - m.beta_treated.value;
    let dc = c.mean_control - m.beta_control.value;
    let effect = c.mean_treated - c.mean_control - beta;
    let imp_root = (q / p).sqrt() * c.mean_treated + (p / q).sqrt() * c.mean_control;
    let h = dt / p + dc / q;
    Draw {
        bound: c.var_treated / p + c.var_control / q + effect * effect,
        imp: (c.var_treated + c.mean_treated * c.mean_treated) / p
            + (c.var_control + c.mean_control * c.mean_control) / q
            - beta * beta,
        ipw: (c.var_treated + dt * dt) / p + (c.var_control + dc * dc) / q,
        imp_excess: imp_root * imp_root,
        ipw_excess: p * q * h * h,
        h,
        w: 1.0 / (p * q),
    }
}

fn check_draws(draws: usize) -> Result<()> {
    if draws == 0 {
        return Err(AteError::InvalidInput("need at least one draw".into()));
    }
    Ok(())
}

/// One or two passes over `draws` covariate draws from stream family `seed`.
///
/// The second pass (only with `with_gain`) evaluates the delta-method
/// influence of the quadratic form `b^T A^+ b` on the same draws to get its
/// standard error.
pub fn population_summary(
    model: &PopulationModel,
    draws: usize,
    seed: u64,
    with_gain: bool,
) -> Result<PopulationSummary> {
    check_draws(draws)?;
    let k = model.dim();
    let mean_x: Vec<f64> = model.means().mean_x.iter().map(|e| e.value).collect();
    let sample = |rng: &mut StreamRng, x: &mut [f64]| model.sample_into(rng, x);

    let chunks = run_chunks(
        draws,
        seed,
        0,
        k,
        sample,
        || PassOne {
            bound: Welford::default(),
            imp: Welford::default(),
            ipw: Welford::default(),
            imp_excess: Welford::default(),
            ipw_excess: Welford::default(),
            z: vec![0.0; k],
            w: vec![0.0; k * k],
        },
        |acc, x| {
            let d = evaluate(model, x);
            acc.bound.push(d.bound);
            acc.imp.push(d.imp);
            acc.ipw.push(d.ipw);
            acc.imp_excess.push(d.imp_excess);
            acc.ipw_excess.push(d.ipw_excess);
            for a in 0..k {
                let xa = x[a] - mean_x[a];
                acc.z[a] += xa * d.h;
                for b in 0..=a {
                    acc.w[a * k + b] += xa * (x[b] - mean_x[b]) * d.w;
                }
            }
        },
    );

    let mut total = PassOne {
        bound: Welford::default(),
        imp: Welford::default(),
        ipw: Welford::default(),
        imp_excess: Welford::default(),
        ipw_excess: Welford::default(),
        z: Vec::new(),
        w: Vec::new(),
    };
    let mut z_sum = vec![CompensatedSum::default(); k];
    let mut w_sum = vec![CompensatedSum::default(); k * k];
    for c in &chunks {
        total.bound.merge(&c.bound);
        total.imp.merge(&c.imp);
        total.ipw.merge(&c.ipw);
        total.imp_excess.merge(&c.imp_excess);
        total.ipw_excess.merge(&c.ipw_excess);
        z_sum.iter_mut().zip(&c.z).for_each(|(s, v)| s.add(*v));
        w_sum.iter_mut().zip(&c.w).for_each(|(s, v)| s.add(*v));
    }
    let n = draws as f64;
    let asycov_xb = DVector::from_iterator(k, z_sum.iter().map(|s| s.total() / n));
    let asycov_xx = DMatrix::from_fn(k, k, |a, b| {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        w_sum[hi * k + lo].total() / n
    });
    let (alpha, _) = pseudo_solve(&asycov_xx, &asycov_xb);

    let lm_gain = if with_gain {
        let alpha_ref = &alpha;
        let chunks = run_chunks(draws, seed, 0, k, sample, Welford::default, |acc, x| {
            let d = evaluate(model, x);
            let mut az = 0.0;
            for a in 0..k {
                az += alpha_ref[a] * (x[a] - mean_x[a]);
            }
            acc.push(2.0 * az * d.h - d.w * az * az);
        });
        let mut influence = Welford::default();
        chunks.iter().for_each(|c| influence.merge(c));
        let est = influence.estimate();
        Some(MomentEstimate {
            value: asycov_xb.dot(&alpha),
            std_error: est.std_error,
            draws,
        })
    } else {
        None
    };

    Ok(PopulationSummary {
        efficiency_bound: total.bound.estimate(),
        asyvar_imp_known: total.imp.estimate(),
        asyvar_ipw_known: total.ipw.estimate(),
        imp_excess: total.imp_excess.estimate(),
        ipw_excess: total.ipw_excess.estimate(),
        lm_gain,
        asycov_xx,
        asycov_xb,
        alpha,
    })
}

/// Semiparametric efficiency bound.
pub fn efficiency_bound(
    model: &PopulationModel,
    draws: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    Ok(population_summary(model, draws, seed, false)?.efficiency_bound)
}

/// Asymptotic variance of finite-support imputation with the known
/// propensity: `E[(vT + bT^2)/p + (vC + bC^2)/(1-p)] - beta^2`.
pub fn asyvar_imp_known(
    model: &PopulationModel,
    draws: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    Ok(population_summary(model, draws, seed, false)?.asyvar_imp_known)
}

/// Asymptotic variance of normalized IPW with the known propensity:
/// `E[(vT + (bT(X) - bT)^2)/p + (vC + (bC(X) - bC)^2)/(1-p)]`.
pub fn asyvar_ipw_known(
    model: &PopulationModel,
    draws: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    Ok(population_summary(model, draws, seed, false)?.asyvar_ipw_known)
}

/// Variance reduction of LM over IPW: `b^T A^+ b` with `A` the covariance
/// of the weighted covariate contrast and `b` its covariance with IPW.
pub fn lm_gain(model: &PopulationModel, draws: usize, seed: u64) -> Result<MomentEstimate> {
    Ok(population_summary(model, draws, seed, true)?
        .lm_gain
        .expect("gain requested"))
}

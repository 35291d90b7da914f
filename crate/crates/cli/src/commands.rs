//! One function per subcommand. Each returns the files it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use ate_lab::asymptotics::{compare_covariate_sets, population_summary, MomentEstimate};
use ate_lab::estimators::{
    run_estimator, EstimatorKind, EstimatorOptions, OutcomeRegressionKind, PropensityFitKind,
};
use ate_lab::experiments::{
    r_average, run_replications, CovariateDistribution, DgpConfig, RCurve, NORMAL_T_GRID,
    UNIFORM_T_GRID,
};
use ate_lab::io::read_sample_csv;
use ate_lab::model::PropensityFunction;
use ate_lab::rng::derive_seed;
use ate_lab::AteError;

use crate::args::{EstimateArgs, Settings};
use crate::config::parse_list;
use crate::error::{CliError, Result};
use crate::render::{curve_svg, num, Table};

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

/// Prints the estimate row; returns the CSV text.
pub fn estimate(args: &EstimateArgs) -> Result<String> {
    let kind: EstimatorKind = args.estimator.parse()?;
    let sample = read_sample_csv(&args.input)?;
    let outcome_regression: OutcomeRegressionKind = args.outcome_regression.parse()?;
    let mut options = EstimatorOptions {
        outcome_regression,
        ..EstimatorOptions::default()
    };
    let mut known = None;
    if let Some(spec) = args.propensity.as_deref() {
        if let Ok(coefficients) = parse_list(spec) {
            if coefficients.len() != sample.dim() + 1 {
                return Err(usage(format!(
                    "--propensity has {} coefficients; the sample needs {} (intercept and one per covariate)",
                    coefficients.len(),
                    sample.dim() + 1
                )));
            }
            known = Some(PropensityFunction::logistic(
                coefficients[0],
                coefficients[1..].to_vec(),
            ));
        } else {
            options.propensity_fit = spec.parse::<PropensityFitKind>()?;
        }
    }
    if kind.needs_known_propensity() && known.is_none() {
        return Err(usage(format!(
            "{kind} needs --propensity with logistic coefficients b0,b1,..,bK"
        )));
    }
    let r = run_estimator(kind, &sample, known.as_ref(), options)?;

    let mut header = vec![
        "estimator".to_string(),
        "estimate".into(),
        "n".into(),
        "n_treated".into(),
        "n_control".into(),
    ];
    let mut row = vec![
        r.estimator_name.clone(),
        num(r.estimate),
        sample.n().to_string(),
        r.n_treated.to_string(),
        r.n_control.to_string(),
    ];
    if let Some(alpha) = &r.alpha_hat {
        for (j, a) in alpha.iter().enumerate() {
            header.push(format!("alpha_{}", j + 1));
            row.push(num(*a));
        }
    }
    let mut t = Table::default();
    t.row(header);
    t.row(row);
    Ok(t.into_string())
}

fn estimate_fields(e: &MomentEstimate) -> [String; 2] {
    [num(e.value), num(e.std_error)]
}

pub fn asymptotics(s: &Settings) -> Result<Vec<PathBuf>> {
    let summary = population_summary(&s.dgp.population_model()?, s.draws, s.seed, true)?;
    let mut t = Table::new(&["quantity", "value", "std_error"]);
    let gain = summary.lm_gain.expect("gain requested");
    let lm = summary.asyvar_lm().expect("gain requested");
    for (name, e) in [
        ("efficiency_bound", summary.efficiency_bound),
        ("asyvar_imp_known", summary.asyvar_imp_known),
        ("asyvar_ipw_known", summary.asyvar_ipw_known),
        ("imp_excess", summary.imp_excess),
        ("ipw_excess", summary.ipw_excess),
        ("lm_gain", gain),
        ("asyvar_lm", lm),
    ] {
        let [v, se] = estimate_fields(&e);
        t.row([name.to_string(), v, se]);
    }
    match summary.reduction_ratio() {
        Ok(r) => t.row(["r_theta".to_string(), num(r.value), num(r.std_error)]),
        Err(AteError::DegenerateDenominator { .. }) => {
            t.row(["r_theta".to_string(), String::new(), String::new()])
        }
        Err(e) => return Err(e.into()),
    }
    for (j, a) in summary.alpha.iter().enumerate() {
        t.row([format!("alpha_{}", j + 1), num(*a), String::new()]);
    }
    Ok(vec![write(
        &s.output_dir,
        "asymptotics.csv",
        &t.into_string(),
    )?])
}

fn dist_index(d: CovariateDistribution) -> u64 {
    match d {
        CovariateDistribution::UniformMinus1To1 => 0,
        CovariateDistribution::StandardNormal => 1,
        CovariateDistribution::TernaryUniform => 2,
    }
}

/// Seed of the curve for `(dist, t)`; shared by tables and curves so both
/// report the same numbers.
pub fn curve_seed(seed: u64, dist: CovariateDistribution, t: f64) -> u64 {
    derive_seed(derive_seed(seed, dist_index(dist)), t.to_bits())
}

fn t_grid(dist: CovariateDistribution) -> &'static [f64] {
    match dist {
        CovariateDistribution::StandardNormal => &NORMAL_T_GRID,
        _ => &UNIFORM_T_GRID,
    }
}

fn curve(s: &Settings, dist: CovariateDistribution, t: f64) -> Result<RCurve> {
    let config = DgpConfig {
        covariate_dist: dist,
        ..s.dgp.clone()
    };
    Ok(r_average(
        &config,
        t,
        s.grid,
        s.draws,
        curve_seed(s.seed, dist, t),
    )?)
}

pub fn reproduce_tables(s: &Settings) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for dist in [
        CovariateDistribution::UniformMinus1To1,
        CovariateDistribution::StandardNormal,
    ] {
        let mut t = Table::new(&["t", "r_avg", "mc_se_estimate"]);
        for &tv in t_grid(dist) {
            let c = curve(s, dist, tv)?;
            t.row([num(tv), num(c.r_average.value), num(c.r_average.std_error)]);
        }
        files.push(write(
            &s.output_dir,
            &format!("table_{}.csv", dist.name()),
            &t.into_string(),
        )?);
    }
    Ok(files)
}

pub fn reproduce_curves(s: &Settings) -> Result<Vec<PathBuf>> {
    let dists = match s.dist {
        Some(d) => vec![d],
        None => vec![
            CovariateDistribution::UniformMinus1To1,
            CovariateDistribution::StandardNormal,
        ],
    };
    let mut files = Vec::new();
    for dist in dists {
        let ts = match s.t {
            Some(t) => vec![t],
            None => t_grid(dist).to_vec(),
        };
        for tv in ts {
            let c = curve(s, dist, tv)?;
            let stem = format!("curve_{}_t{}", dist.name(), tv);
            let mut t = Table::new(&["theta", "r_theta", "mc_se"]);
            for (theta, r) in c.thetas.iter().zip(&c.r_values) {
                match r {
                    Some(r) => t.row([num(*theta), num(r.value), num(r.std_error)]),
                    None => t.row([num(*theta), String::new(), String::new()]),
                }
            }
            if c.excluded() > 0 {
                t.footer(&format!("degenerate points: {}", c.excluded()));
            }
            files.push(write(
                &s.output_dir,
                &format!("{stem}.csv"),
                &t.into_string(),
            )?);
            if s.svg {
                let title = format!("R(θ, t), {} covariates, t = {}", dist.name(), tv);
                files.push(write(
                    &s.output_dir,
                    &format!("{stem}.svg"),
                    &curve_svg(&c, &title),
                )?);
            }
        }
    }
    Ok(files)
}

/// Writes the report, then fails with `ChecksFailed` if any check failed.
pub fn covariate_effects(s: &Settings) -> Result<Vec<PathBuf>> {
    let r = compare_covariate_sets(&s.dgp.population_model()?, s.draws, s.seed, s.nodes)?;
    let mut t = Table::new(&[
        "check",
        "quantity",
        "lhs_set",
        "relation",
        "rhs_set",
        "lhs_value",
        "lhs_se",
        "rhs_value",
        "rhs_se",
        "tolerance",
        "passed",
    ]);
    for f in &r.flags {
        let quantity = if f.name.starts_with("bound") {
            "efficiency_bound"
        } else if f.name.starts_with("imp") {
            "asyvar_imp_known"
        } else {
            "asyvar_ipw_known"
        };
        let lhs_set = if f.name.contains("predictors") {
            "no_predictors"
        } else {
            "no_instruments"
        };
        t.row([
            f.name.to_string(),
            quantity.to_string(),
            lhs_set.to_string(),
            f.relation.symbol().to_string(),
            "all".to_string(),
            num(f.lhs.value),
            num(f.lhs.std_error),
            num(f.rhs.value),
            num(f.rhs.std_error),
            num(f.tolerance),
            f.passed.to_string(),
        ]);
    }
    let path = write(&s.output_dir, "covariate_effects.csv", &t.into_string())?;
    let failed = r.flags.iter().filter(|f| !f.passed).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed {
            failed,
            total: r.flags.len(),
        });
    }
    Ok(vec![path])
}

pub fn replications(s: &Settings) -> Result<Vec<PathBuf>> {
    let results = run_replications(
        &s.dgp,
        &s.estimators,
        s.n,
        s.reps,
        s.seed,
        EstimatorOptions::default(),
    )?;
    let mut all = Table::new(&["estimator", "replication", "estimate"]);
    let mut summary = Table::new(&[
        "estimator",
        "n",
        "completed",
        "failed",
        "mean",
        "std_error",
        "scaled_variance",
        "rmse",
    ]);
    let truth = s.dgp.true_ate();
    for r in &results {
        for (id, e) in r.replication_ids.iter().zip(&r.estimates) {
            all.row([r.estimator_name().to_string(), id.to_string(), num(*e)]);
        }
        let stats = if r.estimates.len() >= 2 {
            [
                num(r.mean()),
                num(r.standard_error()),
                num(r.scaled_variance()),
                num(r.rmse(truth)),
            ]
        } else {
            Default::default()
        };
        let [mean, se, var, rmse] = stats;
        summary.row([
            r.estimator_name().to_string(),
            r.n.to_string(),
            r.estimates.len().to_string(),
            r.failures.len().to_string(),
            mean,
            se,
            var,
            rmse,
        ]);
    }
    Ok(vec![
        write(&s.output_dir, "replications.csv", &all.into_string())?,
        write(
            &s.output_dir,
            "replications_summary.csv",
            &summary.into_string(),
        )?,
    ])
}

//! Command-line flags and their resolution against the config file,
//! `ATE_LAB_SEED` and the built-in defaults.

use std::path::PathBuf;

use ate_lab::estimators::EstimatorKind;
use ate_lab::experiments::{CovariateDistribution, DgpConfig, DEFAULT_DRAWS, DEFAULT_THETA_GRID};
use ate_lab::quadrature::DEFAULT_NODES;
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_angle, parse_bool, parse_triple, ConfigFile};
use crate::error::{CliError, Result};

/// Seed used when neither a flag, the config file nor `ATE_LAB_SEED` sets one.
pub const DEFAULT_SEED: u64 = 20_230_817;
pub const DEFAULT_REPS: usize = 2000;
pub const DEFAULT_N: usize = 4000;

#[derive(Debug, Parser)]
#[command(
    name = "ate-lab",
    version,
    about = "ATE estimators with known propensity scores, and the simulation study around them"
)]
pub struct Cli {
    /// Configuration file of `key = value` lines; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Base seed [default: ATE_LAB_SEED, else 20230817].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for output files [default: .].
    #[arg(long, short = 'o', global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one estimator on a sample CSV and print the result as CSV.
    Estimate(EstimateArgs),
    /// Population variances, LM gain and R(theta, t) for one design.
    Asymptotics(RunArgs),
    /// Average reduction ratio R(t) for both covariate distributions.
    ReproduceTables(RunArgs),
    /// R(theta, t) over the theta grid, with optional SVG plots.
    ReproduceCurves(RunArgs),
    /// Compare variances across covariate sets; exits 2 if a check fails.
    CovariateEffects(RunArgs),
    /// Finite-sample replication sweep.
    Replications(RunArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Sample CSV with header d,y,x1..xK.
    #[arg(long, short = 'i', value_name = "CSV")]
    pub input: PathBuf,
    /// One of ipw_known, ipw_estimated, imputation_known, imputation_estimated, kps, lm.
    #[arg(long, short = 'e')]
    pub estimator: String,
    /// Logistic coefficients `b0,b1,..,bK` of a known propensity score, or a
    /// fit strategy (`logistic-mle`, `cell-frequencies`).
    #[arg(long, short = 'p', allow_hyphen_values = true)]
    pub propensity: Option<String>,
    /// Outcome regression for kps: `linear` or `cell-means`.
    #[arg(long, default_value = "linear")]
    pub outcome_regression: String,
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Monte Carlo draws per population moment [default: 1000000].
    #[arg(long)]
    pub draws: Option<usize>,
    /// Number of theta grid points [default: 64].
    #[arg(long)]
    pub grid: Option<usize>,
    /// Replications [default: 2000].
    #[arg(long)]
    pub reps: Option<usize>,
    /// Sample size per replication [default: 4000].
    #[arg(long)]
    pub n: Option<usize>,
    /// Quadrature nodes per integrated-out covariate [default: 64].
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Also write an SVG plot per curve.
    #[arg(long)]
    pub svg: bool,
    /// Covariate distribution: uniform, normal or ternary.
    #[arg(long)]
    pub dist: Option<String>,
    /// Propensity strength.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Angle of the control slope, e.g. `1.2` or `pi/2`.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub a0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a1: Option<f64>,
    /// Treated slope `c1` as three comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    pub c1: Option<String>,
    /// Control slope, overriding the theta parametrization.
    #[arg(long, allow_hyphen_values = true)]
    pub c0: Option<String>,
    /// Propensity slopes, overriding `(t, t, 0)`.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub logit_intercept: Option<f64>,
    #[arg(long)]
    pub sigma_t: Option<f64>,
    #[arg(long)]
    pub sigma_c: Option<f64>,
    /// Comma-separated estimators for `replications` [default: ipw_known,lm].
    #[arg(long)]
    pub estimators: Option<String>,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub draws: usize,
    pub grid: usize,
    pub reps: usize,
    pub n: usize,
    pub nodes: usize,
    pub svg: bool,
    pub dgp: DgpConfig,
    /// Set when the distribution was chosen explicitly.
    pub dist: Option<CovariateDistribution>,
    /// Set when `t` was chosen explicitly.
    pub t: Option<f64>,
    pub estimators: Vec<EstimatorKind>,
}

fn value_error(key: &str, value: &str, message: impl ToString) -> CliError {
    CliError::Value {
        key: key.to_string(),
        value: value.to_string(),
        message: message.to_string(),
    }
}

fn flag_with<T>(
    key: &str,
    flag: &Option<String>,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<T>> {
    flag.as_deref()
        .map(|v| parse(v).map_err(|m| value_error(&format!("--{key}"), v, m)))
        .transpose()
}

fn parse_estimators(s: &str) -> Result<Vec<EstimatorKind>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<EstimatorKind>().map_err(|e| e.to_string()))
        .collect()
}

fn parse_dist(s: &str) -> Result<CovariateDistribution, String> {
    s.parse().map_err(|e: ate_lab::AteError| e.to_string())
}

impl Settings {
    pub fn resolve(
        seed_flag: Option<u64>,
        output_dir: Option<PathBuf>,
        args: &RunArgs,
        file: &ConfigFile,
        env_seed: Option<&str>,
    ) -> Result<Self> {
        let env_seed = env_seed
            .map(|v| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|e| value_error("ATE_LAB_SEED", v, e))
            })
            .transpose()?;
        let seed = seed_flag
            .or(file.get("seed")?)
            .or(env_seed)
            .unwrap_or(DEFAULT_SEED);

        macro_rules! pick {
            ($flag:expr, $key:literal) => {
                match $flag {
                    Some(v) => Some(v),
                    None => file.get($key)?,
                }
            };
            ($flag:expr, $key:literal, $parse:expr) => {
                match flag_with($key, $flag, $parse)? {
                    Some(v) => Some(v),
                    None => file.get_with($key, $parse)?,
                }
            };
        }

        let defaults = DgpConfig::default();
        let dist = pick!(&args.dist, "dist", parse_dist);
        let t = pick!(args.t, "t");
        let dgp = DgpConfig {
            covariate_dist: dist.unwrap_or(defaults.covariate_dist),
            a0: pick!(args.a0, "a0").unwrap_or(defaults.a0),
            a1: pick!(args.a1, "a1").unwrap_or(defaults.a1),
            c1: pick!(&args.c1, "c1", parse_triple).unwrap_or(defaults.c1),
            theta: pick!(&args.theta, "theta", parse_angle).unwrap_or(defaults.theta),
            t: t.unwrap_or(defaults.t),
            logit_intercept: pick!(args.logit_intercept, "logit-intercept")
                .unwrap_or(defaults.logit_intercept),
            sigma_t: pick!(args.sigma_t, "sigma-t").unwrap_or(defaults.sigma_t),
            sigma_c: pick!(args.sigma_c, "sigma-c").unwrap_or(defaults.sigma_c),
            gamma: pick!(&args.gamma, "gamma", parse_triple),
            c0: pick!(&args.c0, "c0", parse_triple),
        };
        dgp.validate()?;

        let settings = Settings {
            seed,
            output_dir: match output_dir {
                Some(d) => d,
                None => file
                    .get::<PathBuf>("output-dir")?
                    .unwrap_or_else(|| PathBuf::from(".")),
            },
            draws: pick!(args.draws, "draws").unwrap_or(DEFAULT_DRAWS),
            grid: pick!(args.grid, "grid").unwrap_or(DEFAULT_THETA_GRID),
            reps: pick!(args.reps, "reps").unwrap_or(DEFAULT_REPS),
            n: pick!(args.n, "n").unwrap_or(DEFAULT_N),
            nodes: pick!(args.nodes, "nodes").unwrap_or(DEFAULT_NODES),
            svg: args.svg || file.get_with("svg", parse_bool)?.unwrap_or(false),
            dgp,
            dist,
            t,
            estimators: pick!(&args.estimators, "estimators", parse_estimators)
                .unwrap_or_else(|| vec![EstimatorKind::IpwKnown, EstimatorKind::Lm]),
        };
        for (name, v) in [
            ("draws", settings.draws),
            ("grid", settings.grid),
            ("reps", settings.reps),
            ("n", settings.n),
            ("nodes", settings.nodes),
        ] {
            if v == 0 {
                return Err(value_error(name, "0", "must be positive"));
            }
        }
        Ok(settings)
    }
}

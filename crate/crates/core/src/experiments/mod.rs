//! The simulation study: data generation, replication sweeps and the
//! reduction-ratio curves.

mod curves;
mod dgp;
mod replications;

pub use curves::{
    r_average, r_average_finite_sample, r_theta_asymptotic, r_theta_finite_sample, CurveMethod,
    RCurve, DEFAULT_DRAWS, DEFAULT_THETA_GRID, NORMAL_T_GRID, UNIFORM_T_GRID,
};
pub use dgp::{generate_sample, generate_sample_on_stream, CovariateDistribution, DgpConfig};
pub use replications::{
    finite_sample_variance_check, run_replications, ReplicationFailure, ReplicationResult,
    VarianceCheck,
};

use std::f64::consts::FRAC_PI_2;

use ate_lab::estimators::{EstimatorKind, EstimatorOptions};
use ate_lab::experiments::*;
use ate_lab::AteError;

fn uniform(t: f64, theta: f64) -> DgpConfig {
    DgpConfig {
        t,
        theta,
        ..DgpConfig::default()
    }
}

#[test]
fn samples_are_reproducible() {
    let c = uniform(1.0, 1.0);
    let (a, _) = generate_sample(&c, 500, 3).unwrap();
    let (b, _) = generate_sample(&c, 500, 3).unwrap();
    let (d, _) = generate_sample(&c, 500, 4).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, d);
}

#[test]
fn symmetric_logit_treats_half() {
    let c = DgpConfig {
        logit_intercept: 0.0,
        ..uniform(0.0, 0.0)
    };
    let n = 200_000;
    let (s, ps) = generate_sample(&c, n, 1).unwrap();
    assert_eq!(ps.eval(&[0.3, -0.2, 0.9]), 0.5);
    let frac = s.n_treated() as f64 / n as f64;
    assert!(
        (frac - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(),
        "{frac}"
    );
}

#[test]
fn noiseless_outcomes_are_affine() {
    let c = DgpConfig {
        a0: -1.0,
        a1: 2.0,
        sigma_t: 0.0,
        sigma_c: 0.0,
        ..uniform(1.0, 0.0)
    };
    let (s, _) = generate_sample(&c, 1000, 9).unwrap();
    for u in s.units() {
        let expected = c.a0 + (c.a1 - c.a0) * u.d() + u.x()[2];
        assert!((u.y() - expected).abs() < 1e-14);
    }
}

#[test]
fn ternary_covariates_stay_on_support() {
    let c = DgpConfig {
        covariate_dist: CovariateDistribution::TernaryUniform,
        ..uniform(1.0, 0.0)
    };
    let (s, _) = generate_sample(&c, 2000, 2).unwrap();
    let mut seen = [0usize; 3];
    for u in s.units() {
        for &v in u.x() {
            assert!(v == -1.0 || v == 0.0 || v == 1.0);
            seen[(v + 1.0) as usize] += 1;
        }
    }
    assert!(seen.iter().all(|&k| k > 1800));
}

#[test]
fn distribution_names_round_trip() {
    for d in [
        CovariateDistribution::UniformMinus1To1,
        CovariateDistribution::StandardNormal,
        CovariateDistribution::TernaryUniform,
    ] {
        assert_eq!(d.name().parse::<CovariateDistribution>().unwrap(), d);
    }
    assert!("cauchy".parse::<CovariateDistribution>().is_err());
}

#[test]
fn equal_slopes_give_ratio_one() {
    for dist in [
        CovariateDistribution::UniformMinus1To1,
        CovariateDistribution::StandardNormal,
    ] {
        let c = DgpConfig {
            covariate_dist: dist,
            ..uniform(1.0, 0.0)
        };
        let r = r_theta_asymptotic(&c, 200_000, 5).unwrap();
        assert!((r.value - 1.0).abs() <= 3.0 * r.std_error + 1e-12, "{r:?}");
    }
}

#[test]
fn ratio_is_interior_and_seed_stable() {
    let c = uniform(2.0, FRAC_PI_2);
    let a = r_theta_asymptotic(&c, 400_000, 1).unwrap();
    let b = r_theta_asymptotic(&c, 400_000, 2).unwrap();
    assert!(a.value > 0.0 && a.value < 1.0);
    assert!((a.value - b.value).abs() <= 3.0 * a.std_error.hypot(b.std_error));
}

#[test]
fn ratio_ignores_noise_level() {
    let quiet = uniform(1.0, FRAC_PI_2);
    let loud = DgpConfig {
        sigma_t: 2.0,
        sigma_c: 2.0,
        ..quiet.clone()
    };
    let a = r_theta_asymptotic(&quiet, 400_000, 1).unwrap();
    let b = r_theta_asymptotic(&loud, 400_000, 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn curve_needs_eight_points_and_stays_in_band() {
    let c = uniform(1.0, 0.0);
    assert!(matches!(
        r_average(&c, 1.0, 7, 1000, 1),
        Err(AteError::InvalidInput(_))
    ));
    let curve = r_average(&c, 1.0, 8, 100_000, 1).unwrap();
    assert_eq!(curve.thetas.len(), 8);
    assert_eq!(curve.excluded(), 0);
    assert_eq!(curve.method, CurveMethod::Asymptotic);
    for r in curve.r_values.iter().flatten() {
        assert!((-0.1..=1.1).contains(&r.value), "{r:?}");
    }
    let first = curve.r_values[0].unwrap();
    assert!((first.value - 1.0).abs() < 1e-9);
}

#[test]
fn flat_outcomes_exclude_every_point() {
    let c = DgpConfig {
        c1: [0.0; 3],
        c0: Some([0.0; 3]),
        ..uniform(1.0, 0.0)
    };
    assert!(matches!(
        r_average(&c, 1.0, 8, 1000, 1),
        Err(AteError::DegenerateDenominator { .. })
    ));
}

#[test]
fn replications_are_reproducible_and_centered() {
    let c = DgpConfig {
        a1: 1.5,
        a0: 0.5,
        ..uniform(1.0, FRAC_PI_2)
    };
    let kinds = [EstimatorKind::IpwKnown, EstimatorKind::Lm];
    let a = run_replications(&c, &kinds, 500, 400, 21, EstimatorOptions::default()).unwrap();
    let b = run_replications(&c, &kinds, 500, 400, 21, EstimatorOptions::default()).unwrap();
    assert_eq!(a, b);
    for r in &a {
        assert_eq!(r.estimates.len() + r.failures.len(), 400);
        assert!(
            (r.mean() - c.true_ate()).abs() <= 3.0 * r.standard_error(),
            "{}",
            r.estimator_name()
        );
    }
}

#[test]
fn replication_failures_are_recorded() {
    let c = DgpConfig {
        covariate_dist: CovariateDistribution::TernaryUniform,
        ..uniform(1.0, 0.0)
    };
    let r = run_replications(
        &c,
        &[EstimatorKind::ImputationEstimated],
        30,
        50,
        1,
        EstimatorOptions::default(),
    )
    .unwrap()
    .pop()
    .unwrap();
    assert!(!r.failures.is_empty());
    assert_eq!(r.estimates.len() + r.failures.len(), 50);
    assert!(r.failures.iter().all(|f| f.message.contains("cell")));
    assert!(run_replications(
        &c,
        &[EstimatorKind::Lm],
        30,
        1,
        1,
        EstimatorOptions::default()
    )
    .is_err());
}

#[test]
fn imputation_variance_check_needs_finite_support() {
    let err = finite_sample_variance_check(
        &uniform(1.0, 0.0),
        EstimatorKind::ImputationKnown,
        100,
        10,
        100,
        1,
    );
    assert!(matches!(err, Err(AteError::UnsupportedModel(_))));
    let err = finite_sample_variance_check(&uniform(1.0, 0.0), EstimatorKind::Kps, 100, 10, 100, 1);
    assert!(matches!(err, Err(AteError::UnsupportedModel(_))));
}

#[test]
fn imputation_variance_matches_formula_on_ternary_design() {
    let c = DgpConfig {
        covariate_dist: CovariateDistribution::TernaryUniform,
        ..uniform(0.5, 1.0)
    };
    let check =
        finite_sample_variance_check(&c, EstimatorKind::ImputationKnown, 2000, 1000, 200_000, 4)
            .unwrap();
    assert!((0.85..=1.15).contains(&check.ratio), "{check:?}");
}

#[test]
fn lm_variance_vanishes_on_noiseless_equal_slopes() {
    // What remains is (c - alpha_hat)^T x_ipw, of order 1/n.
    let c = DgpConfig {
        sigma_t: 0.0,
        sigma_c: 0.0,
        ..uniform(1.0, 0.0)
    };
    let kinds = [EstimatorKind::IpwKnown, EstimatorKind::Lm];
    let small = run_replications(&c, &kinds, 500, 200, 3, EstimatorOptions::default()).unwrap();
    let large = run_replications(&c, &kinds, 2000, 200, 3, EstimatorOptions::default()).unwrap();
    assert!(large[1].variance() < 1e-4);
    assert!(large[1].scaled_variance() < 0.05 * large[0].scaled_variance());
    assert!(large[1].scaled_variance() < 0.5 * small[1].scaled_variance());
}

#[test]
fn finite_sample_ratio_agrees_with_asymptotic_one() {
    let c = uniform(1.0, 2.0);
    let fs = r_theta_finite_sample(&c, 2000, 1000, 200_000, 6).unwrap();
    let asy = r_theta_asymptotic(&c, 200_000, 6).unwrap();
    assert!(
        (fs.value - asy.value).abs() <= 3.0 * fs.std_error.hypot(asy.std_error),
        "{fs:?} vs {asy:?}"
    );
}

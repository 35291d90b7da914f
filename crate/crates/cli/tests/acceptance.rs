//! One line per acceptance criterion; exits non-zero if any fails.
//!
//! Tolerances: table values within 0.02 of the published numbers; every
//! Monte Carlo comparison at three (combined) standard errors; micro-scale
//! estimator checks at 1e-10 relative error; variance ratios in [0.9, 1.1];
//! RMSE ratios in [0.4, 0.6].

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use ate_lab::asymptotics::population_summary;
use ate_lab::estimators::*;
use ate_lab::experiments::*;
use ate_lab::model::{PropensityFunction, Sample, Unit};
use ate_lab::rng::splitmix64;

const BIN: &str = env!("CARGO_BIN_EXE_ate-lab");
const SEED: &str = "20230817";

fn cli(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("ATE_LAB_SEED")
        .output()
        .expect("binary runs")
}

fn read_table(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            l.split(',')
                .map(|v| v.parse().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn check_table(dir: &Path, file: &str, expected: [(f64, f64); 3]) -> Outcome {
    let rows = read_table(&dir.join(file));
    let mut passed = rows.len() == 3;
    let mut parts = Vec::new();
    for (row, (t, paper)) in rows.iter().zip(expected) {
        let diff = (row[1] - paper).abs();
        let ok = row[0] == t && diff <= 0.02;
        passed &= ok;
        parts.push(format!(
            "t={t}: {:.4} vs {paper} (se {:.1e})",
            row[1], row[2]
        ));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn criteria_1_2(dir: &Path) -> (Outcome, Outcome) {
    let d = dir.to_str().unwrap();
    let out = cli(&["reproduce-tables", "-o", d, "--seed", SEED]);
    if !out.status.success() {
        let msg = String::from_utf8_lossy(&out.stderr).into_owned();
        let fail = || Outcome {
            passed: false,
            detail: msg.clone(),
        };
        return (fail(), fail());
    }
    (
        check_table(
            dir,
            "table_uniform.csv",
            [(2.0, 0.8302), (1.0, 0.9022), (0.5, 0.9652)],
        ),
        check_table(
            dir,
            "table_normal.csv",
            [(1.0, 0.8445), (0.5, 0.9141), (0.25, 0.9708)],
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for (dist, ts) in [
        (CovariateDistribution::UniformMinus1To1, UNIFORM_T_GRID),
        (CovariateDistribution::StandardNormal, NORMAL_T_GRID),
    ] {
        for (k, t) in ts.into_iter().enumerate() {
            let c = DgpConfig {
                covariate_dist: dist,
                t,
                theta: 0.0,
                ..DgpConfig::default()
            };
            match r_theta_asymptotic(&c, DEFAULT_DRAWS, 31 + k as u64) {
                Ok(r) => {
                    let z = (r.value - 1.0).abs() / r.std_error;
                    worst = worst.max(z);
                    passed &= (r.value - 1.0).abs() <= 3.0 * r.std_error;
                }
                Err(_) => passed = false,
            }
        }
    }
    Outcome {
        passed,
        detail: format!("6 (dist, t) pairs at theta=0, max |R-1|/SE = {worst:.2e}"),
    }
}

fn unit_interval(i: u64) -> f64 {
    (splitmix64(i) >> 11) as f64 / (1u64 << 53) as f64
}

fn criterion_4() -> Outcome {
    let mut failures = Vec::new();
    for i in 0..100u64 {
        let dist = if i % 2 == 0 {
            CovariateDistribution::UniformMinus1To1
        } else {
            CovariateDistribution::StandardNormal
        };
        let c = DgpConfig {
            covariate_dist: dist,
            t: 0.1 + 1.9 * unit_interval(2 * i),
            theta: TAU * unit_interval(2 * i + 1),
            ..DgpConfig::default()
        };
        let s =
            population_summary(&c.population_model().unwrap(), 100_000, 1000 + i, true).unwrap();
        let g = s.lm_gain.unwrap();
        let (ipw_x, imp_x) = (s.ipw_excess, s.imp_excess);
        let imp_gap = s.asyvar_imp_known.value - s.efficiency_bound.value;
        let imp_gap_se = s.asyvar_imp_known.combined_se(&s.efficiency_bound);
        let ok = ipw_x.value >= -3.0 * ipw_x.std_error
            && imp_gap >= -3.0 * imp_gap_se
            && imp_x.value >= -3.0 * imp_x.std_error
            && g.value >= -3.0 * g.std_error
            && g.value <= ipw_x.value + 3.0 * g.combined_se(&ipw_x);
        if !ok {
            failures.push(format!("{dist} t={:.3} theta={:.3}", c.t, c.theta));
        }
    }
    Outcome {
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "100 random designs: bound <= ipw, bound <= imp, 0 <= gain <= ipw - bound".into()
        } else {
            format!("violations: {}", failures.join(", "))
        },
    }
}

fn criterion_5(dir: &Path) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (dist, t, theta) in [("uniform", "1", "pi/2"), ("normal", "0.5", "pi/4")] {
        let d = dir.join(format!("effects_{dist}"));
        let out = cli(&[
            "covariate-effects",
            "-o",
            d.to_str().unwrap(),
            "--seed",
            SEED,
            "--dist",
            dist,
            "--t",
            t,
            "--theta",
            theta,
        ]);
        let text = fs::read_to_string(d.join("covariate_effects.csv")).unwrap_or_default();
        let passes = text
            .lines()
            .skip(1)
            .filter(|l| l.ends_with(",true"))
            .count();
        passed &= out.status.success() && passes == 6;
        parts.push(format!(
            "{dist} t={t} theta={theta}: {passes}/6 checks, exit {:?}",
            out.status.code()
        ));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

/// Direct evaluation of the defining sums on every small binary-covariate
/// sample.
fn criterion_6() -> Outcome {
    let p_of = |x: f64| 0.3 + 0.4 * x;
    let ps = PropensityFunction::from_fn(move |x: &[f64]| p_of(x[0]));
    let ys = [2.5, -1.0, 4.0, 0.5, 3.0, -2.0];
    let mut worst: f64 = 0.0;
    let mut mismatched = 0;
    let mut compared = 0;
    let mut record = |got: f64, want: f64| {
        let rel = (got - want).abs() / want.abs().max(1.0);
        worst = worst.max(rel);
        compared += 1;
        if rel > 1e-10 {
            mismatched += 1;
        }
    };
    for n in 4..=6usize {
        for dmask in 1..(1u32 << n) - 1 {
            for xmask in 0..(1u32 << n) {
                let d: Vec<f64> = (0..n).map(|i| ((dmask >> i) & 1) as f64).collect();
                let x: Vec<f64> = (0..n).map(|i| ((xmask >> i) & 1) as f64).collect();
                let y = &ys[..n];
                let p: Vec<f64> = x.iter().map(|&v| p_of(v)).collect();
                let sample = Sample::new(
                    (0..n)
                        .map(|i| Unit::from_values(d[i] as u8, y[i], vec![x[i]]).unwrap())
                        .collect(),
                )
                .unwrap();
                let nf = n as f64;
                let xr = &x;
                let cell = |i: usize| (0..n).filter(move |&j| xr[j] == xr[i]);

                let weighted = |v: &[f64]| {
                    let (mut a, mut b, mut c, mut e) = (0.0, 0.0, 0.0, 0.0);
                    for i in 0..n {
                        a += d[i] * v[i] / p[i];
                        b += d[i] / p[i];
                        c += (1.0 - d[i]) * v[i] / (1.0 - p[i]);
                        e += (1.0 - d[i]) / (1.0 - p[i]);
                    }
                    a / b - c / e
                };
                let ipw = weighted(y);
                record(ipw_known(&sample, &ps).unwrap().estimate, ipw);

                let imputation = |estimated: bool| -> Option<f64> {
                    let mut total = 0.0;
                    for (i, &pi) in p.iter().enumerate() {
                        let m = cell(i).count() as f64;
                        let dy = cell(i).map(|j| d[j] * y[j]).sum::<f64>() / m;
                        let cy = cell(i).map(|j| (1.0 - d[j]) * y[j]).sum::<f64>() / m;
                        let q = if estimated {
                            cell(i).map(|j| d[j]).sum::<f64>() / m
                        } else {
                            pi
                        };
                        if q == 0.0 || q == 1.0 {
                            return None;
                        }
                        total += dy / q - cy / (1.0 - q);
                    }
                    Some(total / nf)
                };
                record(
                    imputation_finite_support(&sample, &PropensityMode::Known(ps.clone()))
                        .unwrap()
                        .estimate,
                    imputation(false).unwrap(),
                );
                match (
                    imputation_finite_support(&sample, &PropensityMode::Estimated),
                    imputation(true),
                ) {
                    (Ok(r), Some(v)) => record(r.estimate, v),
                    (Err(_), None) => {}
                    _ => record(1.0, 0.0),
                }

                let kps_sum = |bt: &dyn Fn(usize) -> f64, bc: &dyn Fn(usize) -> f64| {
                    (0..n)
                        .map(|i| {
                            d[i] * y[i] / p[i]
                                - (1.0 - d[i]) * y[i] / (1.0 - p[i])
                                - (d[i] - p[i]) * (bt(i) / p[i] - bc(i) / (1.0 - p[i]))
                        })
                        .sum::<f64>()
                        / nf
                };
                record(
                    kps(&sample, &ps, &OutcomeRegression::constant(0.0, 0.0, 1))
                        .unwrap()
                        .estimate,
                    kps_sum(&|_| 0.0, &|_| 0.0),
                );
                let cell_mean = |i: usize, arm: f64| {
                    let members: Vec<usize> = cell(i).filter(|&j| d[j] == arm).collect();
                    if members.is_empty() {
                        cell(i).map(|j| y[j]).sum::<f64>() / cell(i).count() as f64
                    } else {
                        members.iter().map(|&j| y[j]).sum::<f64>() / members.len() as f64
                    }
                };
                let reg =
                    fit_outcome_regression(&sample, OutcomeRegressionKind::CellMeans).unwrap();
                record(
                    kps(&sample, &ps, &reg).unwrap().estimate,
                    kps_sum(&|i| cell_mean(i, 1.0), &|i| cell_mean(i, 0.0)),
                );

                let xbar = x.iter().sum::<f64>() / nf;
                let m_t = (0..n).map(|i| d[i] * y[i] / p[i]).sum::<f64>() / nf;
                let m_c = (0..n)
                    .map(|i| (1.0 - d[i]) * y[i] / (1.0 - p[i]))
                    .sum::<f64>()
                    / nf;
                let (mut a, mut b) = (0.0, 0.0);
                for i in 0..n {
                    let xc = x[i] - xbar;
                    a += xc * xc / (p[i] * (1.0 - p[i])) / nf;
                    let h = d[i] / (p[i] * p[i]) * (y[i] - m_t)
                        + (1.0 - d[i]) / ((1.0 - p[i]) * (1.0 - p[i])) * (y[i] - m_c);
                    b += h * xc / nf;
                }
                let alpha = if a > 0.0 { b / a } else { 0.0 };
                record(
                    lm(&sample, &ps).unwrap().estimate,
                    ipw - alpha * weighted(&x),
                );
            }
        }
    }
    Outcome {
        passed: mismatched == 0,
        detail: format!("{compared} comparisons over n=4..6 samples, max relative error {worst:.1e}, {mismatched} mismatches"),
    }
}

fn design_7() -> DgpConfig {
    DgpConfig {
        t: 1.0,
        theta: FRAC_PI_2,
        ..DgpConfig::default()
    }
}

fn criterion_7() -> Outcome {
    let c = design_7();
    let ipw =
        finite_sample_variance_check(&c, EstimatorKind::IpwKnown, 4000, 2000, DEFAULT_DRAWS, 7)
            .unwrap();
    let lm =
        finite_sample_variance_check(&c, EstimatorKind::Lm, 4000, 2000, DEFAULT_DRAWS, 7).unwrap();
    let in_band = |r: f64| (0.9..=1.1).contains(&r);
    Outcome {
        passed: in_band(ipw.ratio) && in_band(lm.ratio) && lm.scaled_variance < ipw.scaled_variance,
        detail: format!(
            "ipw n*var {:.4} / asy {:.4} = {:.4}; lm n*var {:.4} / asy {:.4} = {:.4}",
            ipw.scaled_variance,
            ipw.asymptotic.value,
            ipw.ratio,
            lm.scaled_variance,
            lm.asymptotic.value,
            lm.ratio
        ),
    }
}

fn criterion_8() -> Outcome {
    let c = design_7();
    let kinds = [EstimatorKind::IpwKnown, EstimatorKind::Lm];
    let small = run_replications(&c, &kinds, 1000, 2000, 81, EstimatorOptions::default()).unwrap();
    let large = run_replications(&c, &kinds, 4000, 2000, 82, EstimatorOptions::default()).unwrap();
    let truth = c.true_ate();
    let mut passed = true;
    let mut parts = Vec::new();
    for (s, l) in small.iter().zip(&large) {
        let ratio = l.rmse(truth) / s.rmse(truth);
        passed &= (0.4..=0.6).contains(&ratio) && s.failures.is_empty() && l.failures.is_empty();
        parts.push(format!("{} {ratio:.4}", s.estimator_name()));
    }
    Outcome {
        passed,
        detail: format!("RMSE(n=4000)/RMSE(n=1000): {}", parts.join(", ")),
    }
}

fn criterion_9() -> Outcome {
    let quiet = design_7();
    let loud = DgpConfig {
        sigma_t: 2.0,
        sigma_c: 2.0,
        ..quiet.clone()
    };
    let a = r_theta_asymptotic(&quiet, DEFAULT_DRAWS, 91).unwrap();
    let b = r_theta_asymptotic(&loud, DEFAULT_DRAWS, 92).unwrap();
    let same_seed = r_theta_asymptotic(&loud, DEFAULT_DRAWS, 91).unwrap();
    let tol = 3.0 * a.std_error.hypot(b.std_error);
    Outcome {
        passed: (a.value - b.value).abs() <= tol && same_seed == a,
        detail: format!(
            "R at sigma (1,1) {:.5}, at (2,2) {:.5} (independent draws, tol {tol:.1e}); identical on shared draws: {}",
            a.value,
            b.value,
            same_seed == a
        ),
    }
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn criterion_10(dir: &Path) -> Outcome {
    let sample = dir.join("sample.csv");
    let (s, _) = generate_sample(&design_7(), 300, 5).unwrap();
    ate_lab::io::write_sample_csv(&s, fs::File::create(&sample).unwrap()).unwrap();
    let sample = sample.to_str().unwrap().to_string();
    let small = [
        "--draws", "20000", "--grid", "16", "--reps", "40", "--n", "400",
    ];
    let commands: Vec<Vec<&str>> = vec![
        vec!["asymptotics", "--theta", "pi/2"],
        vec!["reproduce-tables"],
        vec!["reproduce-curves", "--svg"],
        vec!["covariate-effects", "--theta", "pi/2", "--draws", "200000"],
        vec![
            "replications",
            "--estimators",
            "ipw_known,ipw_estimated,kps,lm",
        ],
    ];
    let mut passed = true;
    let mut compared = 0;
    for (k, cmd) in commands.iter().enumerate() {
        let mut runs = Vec::new();
        for rep in 0..2 {
            let out_dir = dir.join(format!("det_{k}_{rep}"));
            let mut args = cmd.clone();
            args.extend_from_slice(&small);
            if cmd[0] == "covariate-effects" {
                args.truncate(args.len() - small.len());
            }
            args.extend_from_slice(&["--seed", SEED, "-o", out_dir.to_str().unwrap()]);
            let out = cli(&args);
            passed &= out.status.success();
            runs.push(snapshot(&out_dir));
        }
        compared += runs[0].len();
        passed &= !runs[0].is_empty() && runs[0] == runs[1];
    }
    let mut estimates = Vec::new();
    for _ in 0..2 {
        let out = cli(&["estimate", "-i", &sample, "-e", "lm", "-p", "1,1,1,0"]);
        passed &= out.status.success();
        estimates.push(out.stdout);
    }
    passed &= estimates[0] == estimates[1];
    Outcome {
        passed,
        detail: format!("6 subcommands run twice with seed {SEED}; {compared} output files plus estimate stdout byte-identical"),
    }
}

fn main() {
    let dir = tempfile::TempDir::new().unwrap();
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut timed = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {name}: {} ({secs:.1}s) {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((name, o, secs));
    };

    let tables = std::cell::RefCell::new(None);
    timed("1 (table 1, uniform R(t) within 0.02)", &mut || {
        let (a, b) = criteria_1_2(dir.path());
        *tables.borrow_mut() = Some(b);
        a
    });
    timed("2 (table 2, normal R(t) within 0.02)", &mut || {
        tables.borrow_mut().take().unwrap()
    });
    timed("3 (R = 1 at theta = 0 within 3 SE)", &mut criterion_3);
    timed(
        "4 (efficiency ordering on 100 random designs)",
        &mut criterion_4,
    );
    timed("5 (covariate-set checks pass)", &mut || {
        criterion_5(dir.path())
    });
    timed(
        "6 (micro-scale oracle equivalence, 1e-10)",
        &mut criterion_6,
    );
    timed(
        "7 (finite-sample variance ratios in [0.9, 1.1], LM < IPW)",
        &mut criterion_7,
    );
    timed("8 (root-n RMSE ratio in [0.4, 0.6])", &mut criterion_8);
    timed(
        "9 (R invariant to noise level within 3 SE)",
        &mut criterion_9,
    );
    timed(
        "10 (byte-identical outputs under a fixed seed)",
        &mut || criterion_10(dir.path()),
    );

    let failed = results.iter().filter(|r| !r.1.passed).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

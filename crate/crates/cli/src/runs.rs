//! `simulate` and `benchmark` commands.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use nlpid_core::sim::{simulate_with_law, ControlLaw, SimError};
use nlpid_core::{compute_metrics, ActuatorSpec, ControllerParams, ConvergenceMetrics, Polynomial, SimConfig, Trajectory};
use rayon::prelude::*;
use serde::Serialize;

use crate::{CliError, Context, Outcome, Sweep};

/// One simulation to run: output file stem, controller and law.
struct Job {
    name: String,
    controller: ControllerParams,
    law: ControlLaw,
}

#[derive(Serialize)]
struct RunReport {
    name: String,
    controller: ControllerParams,
    file: String,
    metrics: ConvergenceMetrics,
    /// Thresholds at which this run settles strictly earlier than the
    /// baseline (never-settling counts as infinitely late).
    #[serde(skip_serializing_if = "Option::is_none")]
    wins_over_baseline: Option<Vec<f64>>,
}

fn run_one(base: &SimConfig, job: &Job) -> Result<Trajectory, SimError> {
    let cfg = SimConfig {
        controller: job.controller,
        ..*base
    };
    simulate_with_law(&cfg, job.law)
}

/// Runs jobs on the pool (results kept in job order), writes one CSV per job
/// and fails with exit 3 on the first diverged run after writing its partial
/// trajectory.
fn run_jobs(
    ctx: &Context,
    outcome: &mut Outcome,
    base: &SimConfig,
    jobs: &[Job],
    thresholds: &[f64],
) -> Result<Vec<(String, ConvergenceMetrics)>, CliError> {
    let results: Vec<Result<Trajectory, SimError>> =
        ctx.pool.install(|| jobs.par_iter().map(|j| run_one(base, j)).collect());
    let mut out = Vec::with_capacity(jobs.len());
    for (job, res) in jobs.iter().zip(results) {
        let file = format!("{}.csv", job.name);
        match res {
            Ok(traj) => {
                ctx.write(outcome, &file, &traj.to_csv())?;
                out.push((file, compute_metrics(&traj, base.reference, thresholds)));
            }
            Err(SimError::Diverged { t, partial }) => {
                ctx.write(outcome, &file, &partial.to_csv())?;
                return Err(CliError::Diverged(format!(
                    "{} diverged at t={t}; partial trajectory in {}",
                    job.name,
                    ctx.out.join(&file).display()
                )));
            }
            Err(e) => return Err(CliError::Config(e.to_string())),
        }
    }
    Ok(out)
}

fn settles_before(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

fn winning_thresholds(candidate: &ConvergenceMetrics, baseline: &ConvergenceMetrics) -> Vec<f64> {
    candidate
        .settling_times
        .iter()
        .filter(|(eps, t0)| settles_before(*t0, baseline.settling_time(*eps)))
        .map(|(eps, _)| *eps)
        .collect()
}

fn cmp_settling(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(a), Some(b)) => a.total_cmp(&b),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

fn sweep_jobs(p: ControllerParams, sweep: Sweep) -> Result<Vec<Job>, CliError> {
    let mk = |d: f64, e: f64| -> Result<Job, CliError> {
        let controller =
            ControllerParams::new(p.a, p.b, p.c, d, e).map_err(|err| CliError::Config(err.to_string()))?;
        let name = if d == 0.0 { "sim_pid".to_owned() } else { format!("sim_d{d}_e{e}") };
        Ok(Job {
            name,
            controller,
            law: ControlLaw::NonlinearPid,
        })
    };
    match sweep {
        Sweep::D => [0.0, 1.0, 2.0, 3.0].iter().map(|&d| mk(d, -10.0)).collect(),
        Sweep::E => std::iter::once(mk(0.0, 0.0))
            .chain([-10.0, -100.0, -1000.0].iter().map(|&e| mk(2.0, e)))
            .collect(),
    }
}

pub(crate) fn simulate(ctx: &Context, sweep: Option<Sweep>) -> Result<Outcome, CliError> {
    let cfg = ctx.config()?;
    let base = cfg.sim_config();
    let thresholds = &cfg.analysis.thresholds;
    let mut outcome = Outcome::default();
    let Some(sweep) = sweep else {
        let job = Job {
            name: "trajectory".into(),
            controller: base.controller,
            law: ControlLaw::NonlinearPid,
        };
        let (_, metrics) = run_jobs(ctx, &mut outcome, &base, std::slice::from_ref(&job), thresholds)?
            .pop()
            .expect("one job");
        outcome.stdout = ctx.write_json(&mut outcome, "metrics.json", &metrics)?;
        return Ok(outcome);
    };
    if base.controller.c <= 0.0 {
        return Err(CliError::Config("sweeps need an integral gain c > 0".into()));
    }
    let jobs = sweep_jobs(base.controller, sweep)?;
    let results = run_jobs(ctx, &mut outcome, &base, &jobs, thresholds)?;
    let baseline = results[0].1.clone();
    let reports: Vec<RunReport> = jobs
        .iter()
        .zip(results)
        .enumerate()
        .map(|(i, (job, (file, metrics)))| RunReport {
            name: job.name.clone(),
            controller: job.controller,
            file,
            wins_over_baseline: (i > 0).then(|| winning_thresholds(&metrics, &baseline)),
            metrics,
        })
        .collect();
    let name = match sweep {
        Sweep::D => "sweep_d_metrics.json",
        Sweep::E => "sweep_e_metrics.json",
    };
    ctx.write_json(&mut outcome, name, &reports)?;
    outcome.stdout = reports
        .iter()
        .map(|r| match &r.wins_over_baseline {
            None => format!("{}: baseline\n", r.name),
            Some(w) => format!("{}: beats baseline at {} of {} thresholds\n", r.name, w.len(), thresholds.len()),
        })
        .collect();
    Ok(outcome)
}

/// Closed-loop characteristic polynomial of the linearized loop with the
/// first-order actuator, integral gain `ki` (zero for PD).
fn actuated_characteristic(p: &ControllerParams, ki: f64, act: &ActuatorSpec) -> Result<Polynomial, CliError> {
    let (k, mu) = (act.kappa, act.mu);
    let coeffs = if ki == 0.0 {
        vec![mu, 1.0, k * p.a, k * p.b]
    } else {
        vec![mu, 1.0, k * p.a, k * p.b, k * ki]
    };
    Polynomial::new(coeffs).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Serialize)]
struct BenchEntry {
    name: &'static str,
    controller: ControllerParams,
    file: String,
    /// Hurwitz test of the loop linearized at zero error
    /// (integral gain `c` for PID, `c(1 + d)` for nl-PID).
    linearized_hurwitz: bool,
    metrics: ConvergenceMetrics,
}

#[derive(Serialize)]
struct BenchReport {
    actuator: ActuatorSpec,
    controllers: Vec<BenchEntry>,
    rank_by_final_error: Vec<&'static str>,
    rank_by_settling: BTreeMap<String, Vec<&'static str>>,
    nlpid_beats_pid: bool,
    nlpid_winning_thresholds: Vec<f64>,
}

pub(crate) fn benchmark(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.config()?;
    let actuator = cfg.actuator_spec();
    if !actuator.present || cfg.actuator.is_none() {
        return Err(CliError::Config("benchmark needs an actuator block".into()));
    }
    let base = cfg.sim_config();
    let p = base.controller;
    let err = |e: nlpid_core::control::ParamsError| CliError::Config(e.to_string());
    let jobs = [
        Job {
            name: "bench_pd".into(),
            controller: ControllerParams::pd(p.a, p.b).map_err(err)?,
            law: ControlLaw::LinearPid,
        },
        Job {
            name: "bench_pid".into(),
            controller: ControllerParams::pid(p.a, p.b, p.c).map_err(err)?,
            law: ControlLaw::LinearPid,
        },
        Job {
            name: "bench_nlpid".into(),
            controller: p,
            law: ControlLaw::NonlinearPid,
        },
    ];
    let names = ["PD", "PID", "nl-PID"];
    let integral_gains = [0.0, p.c, p.c * (1.0 + p.d)];
    let thresholds = &cfg.analysis.thresholds;
    let mut outcome = Outcome::default();
    let results = run_jobs(ctx, &mut outcome, &base, &jobs, thresholds)?;

    let mut controllers = Vec::new();
    for (((job, (file, metrics)), name), ki) in jobs.iter().zip(results).zip(names).zip(integral_gains) {
        let poly = actuated_characteristic(&job.controller, ki, &actuator)?;
        controllers.push(BenchEntry {
            name,
            controller: job.controller,
            file,
            linearized_hurwitz: poly.is_hurwitz().unwrap_or(false),
            metrics,
        });
    }

    let mut rank_by_final_error: Vec<&BenchEntry> = controllers.iter().collect();
    rank_by_final_error.sort_by(|x, y| x.metrics.final_abs_error.total_cmp(&y.metrics.final_abs_error));
    let rank_by_settling = thresholds
        .iter()
        .map(|&eps| {
            let mut order: Vec<&BenchEntry> = controllers.iter().collect();
            order.sort_by(|x, y| cmp_settling(x.metrics.settling_time(eps), y.metrics.settling_time(eps)));
            (format!("{eps:e}"), order.iter().map(|e| e.name).collect())
        })
        .collect();
    let wins = winning_thresholds(&controllers[2].metrics, &controllers[1].metrics);
    let report = BenchReport {
        actuator,
        rank_by_final_error: rank_by_final_error.iter().map(|e| e.name).collect(),
        rank_by_settling,
        nlpid_beats_pid: !wins.is_empty(),
        nlpid_winning_thresholds: wins,
        controllers,
    };
    ctx.write_json(&mut outcome, "benchmark.json", &report)?;
    outcome.stdout = format!(
        "final-error ranking: {}\nnl-PID beats PID at {} of {} thresholds\n",
        report.rank_by_final_error.join(" < "),
        report.nlpid_winning_thresholds.len(),
        thresholds.len()
    );
    Ok(outcome)
}

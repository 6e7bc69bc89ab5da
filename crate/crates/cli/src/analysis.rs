//! `stability`, `freq` and `step` commands.

use nlpid_core::freq::{peak_sensitivity, sensitivity_response, step_series};
use nlpid_core::io::write_csv;
use nlpid_core::stability::{circle_exact, circle_extended, default_circle_grid, routh_hurwitz_3rd, StabilityVerdict};
use nlpid_core::ControllerParams;
use serde::Serialize;

use crate::{CliError, Context, Outcome};

#[derive(Serialize)]
#[serde(untagged)]
enum VerdictOrError {
    Verdict(StabilityVerdict),
    Error { error: String },
}

impl<E: std::fmt::Display> From<Result<StabilityVerdict, E>> for VerdictOrError {
    fn from(r: Result<StabilityVerdict, E>) -> Self {
        match r {
            Ok(v) => VerdictOrError::Verdict(v),
            Err(e) => VerdictOrError::Error { error: e.to_string() },
        }
    }
}

#[derive(Serialize)]
struct StabilityReport {
    controller: ControllerParams,
    routh_hurwitz: StabilityVerdict,
    circle_exact: VerdictOrError,
    #[serde(skip_serializing_if = "Option::is_none")]
    circle_extended: Option<VerdictOrError>,
}

pub(crate) fn stability(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = ctx.config()?;
    let p = cfg.controller;
    let actuator = cfg.actuator_spec();
    let report = StabilityReport {
        controller: p,
        routh_hurwitz: routh_hurwitz_3rd(p.a, p.b, p.c),
        circle_exact: circle_exact(p.a, p.b, p.c, p.d).into(),
        circle_extended: actuator
            .present
            .then(|| circle_extended(p.a, p.b, p.c, p.d, &actuator, &default_circle_grid()).into()),
    };
    let mut outcome = Outcome::default();
    outcome.stdout = ctx.write_json(&mut outcome, "stability.json", &report)?;
    Ok(outcome)
}

#[derive(Serialize)]
struct FreqPeak {
    multiple: f64,
    #[serde(rename = "Omega")]
    omega_gain: f64,
    omega_peak: Option<f64>,
    peak: Option<f64>,
    magnitude_at_omega_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub(crate) const FREQ_MULTIPLES: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

pub(crate) fn freq(ctx: &Context, wide: bool) -> Result<Outcome, CliError> {
    let cfg = ctx.config()?;
    let p = cfg.controller;
    if p.c <= 0.0 {
        return Err(CliError::Config("freq needs an integral gain c > 0".into()));
    }
    let grid = cfg.analysis.omega_grid();
    let mut outcome = Outcome::default();
    let mut responses = Vec::new();
    let mut peaks = Vec::new();
    for m in FREQ_MULTIPLES {
        let omega_gain = m * p.c;
        let resp = sensitivity_response(p.a, p.b, omega_gain, &grid).map_err(|e| CliError::Config(e.to_string()))?;
        let peak = peak_sensitivity(p.a, p.b, omega_gain);
        peaks.push(FreqPeak {
            multiple: m,
            omega_gain,
            omega_peak: peak.as_ref().ok().map(|x| x.0),
            peak: peak.as_ref().ok().map(|x| x.1),
            magnitude_at_omega_min: resp.magnitudes[0],
            error: peak.err().map(|e| e.to_string()),
        });
        if !wide {
            ctx.write(&mut outcome, &format!("freq_{m}c.csv"), &resp.to_csv())?;
        }
        responses.push(resp);
    }
    if wide {
        let header: Vec<String> = std::iter::once("omega".to_owned())
            .chain(FREQ_MULTIPLES.iter().map(|m| format!("magnitude_{m}c")))
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut cols: Vec<&[f64]> = vec![&grid];
        cols.extend(responses.iter().map(|r| r.magnitudes.as_slice()));
        ctx.write(&mut outcome, "freq_wide.csv", &write_csv(&header, &cols))?;
    }
    ctx.write_json(&mut outcome, "freq_peaks.json", &peaks)?;
    outcome.stdout = peaks
        .iter()
        .map(|pk| match (pk.omega_peak, pk.peak) {
            (Some(w), Some(v)) => format!("Omega={} omega_peak={w} peak={v}\n", pk.omega_gain),
            _ => format!("Omega={} no peak: {}\n", pk.omega_gain, pk.error.as_deref().unwrap_or("")),
        })
        .collect();
    Ok(outcome)
}

#[derive(Serialize)]
struct StepPeak {
    #[serde(rename = "Omega")]
    omega_gain: f64,
    lambda1: f64,
    lambda2: f64,
    t_peak: f64,
    peak: f64,
    final_value: f64,
    file: String,
}

pub(crate) const STEP_MULTIPLES: [f64; 3] = [0.5, 1.0, 2.0];

pub(crate) fn step(ctx: &Context, lambda1: f64, omegas: &[f64], dt: f64) -> Result<Outcome, CliError> {
    if !(lambda1.is_finite() && lambda1 > 0.0) {
        return Err(CliError::Config("--lambda1 must be > 0".into()));
    }
    let omegas: Vec<f64> = if omegas.is_empty() {
        let c = ctx
            .config()
            .map_err(|_| CliError::Config("step needs --omegas or a --config supplying c".into()))?
            .controller
            .c;
        STEP_MULTIPLES.iter().map(|m| m * c).collect()
    } else {
        omegas.to_vec()
    };
    let mut outcome = Outcome::default();
    let mut peaks = Vec::new();
    for omega_gain in omegas {
        let series = step_series(lambda1, omega_gain, dt)
            .map_err(|e| CliError::Config(format!("Omega = {omega_gain}: {e}")))?;
        let file = format!("step_omega_{omega_gain}.csv");
        ctx.write(&mut outcome, &file, &series.to_csv())?;
        let (t_peak, peak) = series.peak();
        peaks.push(StepPeak {
            omega_gain,
            lambda1,
            lambda2: omega_gain / (lambda1 * lambda1),
            t_peak,
            peak,
            final_value: *series.y.last().unwrap_or(&0.0),
            file,
        });
    }
    ctx.write_json(&mut outcome, "step_peaks.json", &peaks)?;
    outcome.stdout = peaks
        .iter()
        .map(|p| format!("Omega={} peak={} at t={}\n", p.omega_gain, p.peak, p.t_peak))
        .collect();
    Ok(outcome)
}

//! Fixed-step RK4 simulation of the closed loop
//! `ÿ = v + σ(t)`, `v = u` or `μ v̇ = κ u − v`, with `u` from the (nl-)PID
//! law acting on the (optionally noise-corrupted) control error.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::control::{ControllerParams, ControllerState, ParamsError};
use crate::lti::{ActuatorSpec, LtiError};

pub const DEFAULT_DT: f64 = 1e-4;
/// `|y|` beyond this aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

/// Matched disturbance `σ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DisturbanceSpec {
    Constant { amplitude: f64 },
    Step { amplitude: f64, start_time: f64 },
    Sinusoid { amplitude: f64, frequency: f64 },
    Ramp { slope: f64 },
}

impl Default for DisturbanceSpec {
    fn default() -> Self {
        DisturbanceSpec::Constant { amplitude: 0.0 }
    }
}

impl DisturbanceSpec {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            DisturbanceSpec::Constant { amplitude } => amplitude,
            DisturbanceSpec::Step { amplitude, start_time } => {
                if t >= start_time {
                    amplitude
                } else {
                    0.0
                }
            }
            DisturbanceSpec::Sinusoid { amplitude, frequency } => amplitude * (frequency * t).sin(),
            DisturbanceSpec::Ramp { slope } => slope * t,
        }
    }

    /// Lipschitz bound `Σ ≥ |σ̇|` away from step instants.
    pub fn lipschitz_bound(&self) -> f64 {
        match *self {
            DisturbanceSpec::Constant { .. } | DisturbanceSpec::Step { .. } => 0.0,
            DisturbanceSpec::Sinusoid { amplitude, frequency } => (amplitude * frequency).abs(),
            DisturbanceSpec::Ramp { slope } => slope.abs(),
        }
    }

    fn fields(&self) -> Vec<f64> {
        match *self {
            DisturbanceSpec::Constant { amplitude } => vec![amplitude],
            DisturbanceSpec::Step { amplitude, start_time } => vec![amplitude, start_time],
            DisturbanceSpec::Sinusoid { amplitude, frequency } => vec![amplitude, frequency],
            DisturbanceSpec::Ramp { slope } => vec![slope],
        }
    }

    /// Moves a step onset to the nearest sample instant.
    fn aligned(&self, dt: f64) -> Self {
        match *self {
            DisturbanceSpec::Step { amplitude, start_time } => DisturbanceSpec::Step {
                amplitude,
                start_time: (start_time / dt).round() * dt,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub controller: ControllerParams,
    #[serde(default)]
    pub actuator: ActuatorSpec,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
    #[serde(default)]
    pub reference: f64,
    #[serde(default)]
    pub y0: f64,
    #[serde(default)]
    pub ydot0: f64,
    #[serde(default)]
    pub integral0: f64,
    pub dt: f64,
    pub duration: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Actuator(#[from] LtiError),
    #[error("trajectory diverged at t={t}")]
    Diverged { t: f64, partial: Box<Trajectory> },
}

impl SimConfig {
    /// Regulation run of the paper-style loop with default step size.
    pub fn new(controller: ControllerParams, disturbance: DisturbanceSpec, duration: f64) -> Self {
        Self {
            controller,
            actuator: ActuatorSpec::none(),
            disturbance,
            reference: 0.0,
            y0: 0.0,
            ydot0: 0.0,
            integral0: 0.0,
            dt: DEFAULT_DT,
            duration,
            noise_std: 0.0,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.controller.validate()?;
        self.actuator.validate()?;
        let scalars = [
            ("reference", self.reference),
            ("y0", self.y0),
            ("ydot0", self.ydot0),
            ("integral0", self.integral0),
            ("dt", self.dt),
            ("duration", self.duration),
            ("noise_std", self.noise_std),
        ];
        if let Some((name, _)) = scalars.iter().find(|(_, v)| !v.is_finite()) {
            return Err(SimError::InvalidConfig(format!("{name} must be finite")));
        }
        if self.disturbance.fields().iter().any(|v| !v.is_finite()) {
            return Err(SimError::InvalidConfig("disturbance fields must be finite".into()));
        }
        if self.dt <= 0.0 {
            return Err(SimError::InvalidConfig("dt must be > 0".into()));
        }
        if self.duration < self.dt {
            return Err(SimError::InvalidConfig("duration must be >= dt".into()));
        }
        if self.noise_std < 0.0 {
            return Err(SimError::InvalidConfig("noise_std must be >= 0".into()));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize + 1
    }
}

/// Uniformly sampled closed-loop signals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub reference: f64,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub ydot: Vec<f64>,
    /// `∫ε dt`.
    pub integral: Vec<f64>,
    pub u: Vec<f64>,
    /// Effective control after the actuator (equals `u` without one).
    pub v: Vec<f64>,
    pub omega_gain: Vec<f64>,
}

pub const TRAJECTORY_HEADER: [&str; 7] = ["t", "y", "ydot", "integral", "u", "v", "omega"];

impl Trajectory {
    fn with_capacity(n: usize, reference: f64) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            reference,
            t: v(),
            y: v(),
            ydot: v(),
            integral: v(),
            u: v(),
            v: v(),
            omega_gain: v(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `|r − y|` per sample.
    pub fn abs_error(&self) -> impl Iterator<Item = f64> + '_ {
        self.y.iter().map(move |y| (self.reference - y).abs())
    }

    /// CSV with header `t,y,ydot,integral,u,v,omega`.
    pub fn to_csv(&self) -> String {
        crate::io::write_csv(
            &TRAJECTORY_HEADER,
            &[&self.t, &self.y, &self.ydot, &self.integral, &self.u, &self.v, &self.omega_gain],
        )
    }

    pub fn from_csv(text: &str, reference: f64) -> Result<Self, crate::io::CsvError> {
        let mut cols = crate::io::read_csv(text, &TRAJECTORY_HEADER)?.into_iter();
        let mut next = || cols.next().unwrap_or_default();
        Ok(Self {
            reference,
            t: next(),
            y: next(),
            ydot: next(),
            integral: next(),
            u: next(),
            v: next(),
            omega_gain: next(),
        })
    }
}

/// Control law used by the simulation loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlLaw {
    /// `Ω(ε) ∫ε` integral term.
    NonlinearPid,
    /// `c ∫ε` integral term regardless of `d`, `e`.
    LinearPid,
}

/// Runs the closed loop with the nonlinear-integral law.
pub fn simulate(cfg: &SimConfig) -> Result<Trajectory, SimError> {
    simulate_with_law(cfg, ControlLaw::NonlinearPid)
}

#[derive(Clone, Copy)]
struct State {
    integral: f64,
    y: f64,
    ydot: f64,
    v: f64,
}

impl State {
    fn axpy(&self, h: f64, k: &State) -> State {
        State {
            integral: self.integral + h * k.integral,
            y: self.y + h * k.y,
            ydot: self.ydot + h * k.ydot,
            v: self.v + h * k.v,
        }
    }

    fn is_finite(&self) -> bool {
        self.integral.is_finite() && self.y.is_finite() && self.ydot.is_finite() && self.v.is_finite()
    }
}

struct Loop<'a> {
    cfg: &'a SimConfig,
    law: ControlLaw,
    disturbance: DisturbanceSpec,
}

impl Loop<'_> {
    /// `(u, Ω)` at a state with the held measurement noise.
    fn control(&self, x: &State, noise: f64) -> (f64, f64) {
        let p = &self.cfg.controller;
        let eps = self.cfg.reference - (x.y + noise);
        let eps_dot = -x.ydot;
        let state = ControllerState { integral: x.integral };
        match self.law {
            ControlLaw::NonlinearPid => (p.control_output(eps, eps_dot, &state), p.omega_gain(eps)),
            ControlLaw::LinearPid => (p.pid_output(eps, eps_dot, &state), p.c),
        }
    }

    fn rhs(&self, t: f64, x: &State, noise: f64) -> State {
        let (u, _) = self.control(x, noise);
        let sigma = self.disturbance.value(t);
        let act = &self.cfg.actuator;
        let (effective, vdot) = if act.present {
            (x.v, (act.kappa * u - x.v) / act.mu)
        } else {
            (u, 0.0)
        };
        State {
            integral: self.cfg.reference - (x.y + noise),
            y: x.ydot,
            ydot: effective + sigma,
            v: vdot,
        }
    }
}

/// Runs the closed loop with an explicit control law. Both laws share the
/// integrator, so `d = 0` under either law gives identical samples.
pub fn simulate_with_law(cfg: &SimConfig, law: ControlLaw) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let dt = cfg.dt;
    let n = cfg.sample_count();
    let sys = Loop {
        cfg,
        law,
        disturbance: cfg.disturbance.aligned(dt),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let normal = Normal::new(0.0, cfg.noise_std.max(f64::MIN_POSITIVE))
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let mut draw = || if cfg.noise_std > 0.0 { normal.sample(&mut rng) } else { 0.0 };

    let mut x = State {
        integral: cfg.integral0,
        y: cfg.y0,
        ydot: cfg.ydot0,
        v: 0.0,
    };
    let mut traj = Trajectory::with_capacity(n, cfg.reference);
    for k in 0..n {
        let t = k as f64 * dt;
        let noise = draw();
        let (u, omega) = sys.control(&x, noise);
        traj.t.push(t);
        traj.y.push(x.y);
        traj.ydot.push(x.ydot);
        traj.integral.push(x.integral);
        traj.u.push(u);
        traj.v.push(if cfg.actuator.present { x.v } else { u });
        traj.omega_gain.push(omega);
        if !x.is_finite() || x.y.abs() > DIVERGENCE_LIMIT || !u.is_finite() {
            return Err(SimError::Diverged {
                t,
                partial: Box::new(traj),
            });
        }
        if k + 1 == n {
            break;
        }
        let k1 = sys.rhs(t, &x, noise);
        let k2 = sys.rhs(t + 0.5 * dt, &x.axpy(0.5 * dt, &k1), noise);
        let k3 = sys.rhs(t + 0.5 * dt, &x.axpy(0.5 * dt, &k2), noise);
        let k4 = sys.rhs(t + dt, &x.axpy(dt, &k3), noise);
        x = State {
            integral: x.integral + dt / 6.0 * (k1.integral + 2.0 * k2.integral + 2.0 * k3.integral + k4.integral),
            y: x.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
            ydot: x.ydot + dt / 6.0 * (k1.ydot + 2.0 * k2.ydot + 2.0 * k3.ydot + k4.ydot),
            v: x.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
        };
    }
    Ok(traj)
}

/// Settling summary of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceMetrics {
    /// Threshold ε → settling time `t₀` (None when never settled).
    #[serde(serialize_with = "serialize_settling")]
    pub settling_times: Vec<(f64, Option<f64>)>,
    pub peak_abs_error: f64,
    pub final_abs_error: f64,
}

fn serialize_settling<S: Serializer>(v: &[(f64, Option<f64>)], s: S) -> Result<S::Ok, S::Error> {
    let map: BTreeMap<String, Option<f64>> = v.iter().map(|(eps, t0)| (format!("{eps:e}"), *t0)).collect();
    map.serialize(s)
}

impl ConvergenceMetrics {
    pub fn settling_time(&self, threshold: f64) -> Option<f64> {
        self.settling_times
            .iter()
            .find(|(eps, _)| *eps == threshold)
            .and_then(|(_, t0)| *t0)
    }
}

/// For each ε, the first sample time after which `|r − y| < ε` holds for
/// every remaining sample.
pub fn compute_metrics(traj: &Trajectory, reference: f64, thresholds: &[f64]) -> ConvergenceMetrics {
    let err: Vec<f64> = traj.y.iter().map(|y| (reference - y).abs()).collect();
    let settling_times = thresholds
        .iter()
        .map(|&eps| {
            let last_bad = err.iter().rposition(|&e| !(e < eps));
            let t0 = match last_bad {
                None => traj.t.first().copied(),
                Some(i) => traj.t.get(i + 1).copied(),
            };
            (eps, t0)
        })
        .collect();
    ConvergenceMetrics {
        settling_times,
        peak_abs_error: err.iter().copied().fold(0.0, f64::max),
        final_abs_error: err.last().copied().unwrap_or(0.0),
    }
}

/// Largest `|r − y|` over the trailing `window` seconds.
pub fn steady_state_amplitude(traj: &Trajectory, window: f64) -> f64 {
    let Some(&end) = traj.t.last() else {
        return 0.0;
    };
    traj.t
        .iter()
        .zip(traj.abs_error())
        .filter(|(&t, _)| t >= end - window - 1e-12)
        .map(|(_, e)| e)
        .fold(0.0, f64::max)
}

//! Analysis and simulation toolkit for PID control with a nonlinear
//! integral gain.
//!
//! The controller `u = a ε̇ + b ε + c (1 + d exp(e |ε|)) ∫ε dt` acts on the
//! second-order plant `ÿ = u + σ(t)`, optionally through a first-order
//! actuator lag. The crate provides
//!
//! - [`lti`]: polynomials, transfer functions and root finding,
//! - [`control`]: the PD / PID / nl-PID laws,
//! - [`stability`]: Routh–Hurwitz and circle-criterion certificates,
//! - [`freq`]: sensitivity magnitude, its peak and closed-form step responses,
//! - [`sim`]: fixed-step RK4 closed-loop simulation and settling metrics,
//! - [`io`]: JSON run configurations and CSV series.

pub mod control;
pub mod freq;
pub mod grid;
pub mod io;
pub mod lti;
pub mod sim;
pub mod stability;

pub use control::{ControllerParams, ControllerState};
pub use freq::{peak_sensitivity, sensitivity_magnitude, step_response_closed_form, step_response_omega_form, FrequencyResponse};
pub use io::RunConfigFile;
pub use lti::{build_loop_tf, build_sensitivity_tf, ActuatorSpec, Polynomial, RationalTF};
pub use sim::{compute_metrics, simulate, steady_state_amplitude, ConvergenceMetrics, DisturbanceSpec, SimConfig, Trajectory};
pub use stability::{circle_exact, circle_extended, circle_sweep, pole_placement_gains, routh_hurwitz_3rd, StabilityVerdict};

//! PD, PID and nonlinear-integral PID control laws in error form.
//!
//! All laws consume the control error `ε = r − y` and its derivative. With
//! `r = 0` this is the regulation form `u = −a ẏ − b y − Ω ∫y dt`.
//!
//! The nonlinear law scales the accumulated integral by
//! `Ω(ε) = c (1 + d exp(e |ε|))`, which grows from `c` (large error) to
//! `c (1 + d)` (zero error). Setting `d = 0` recovers the linear PID exactly
//! and `c = 0` gives a PD controller.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("controller gain `{0}` must be finite")]
    NonFinite(&'static str),
    #[error("derivative gain a must be > 0 (got {0})")]
    DerivativeGain(f64),
    #[error("proportional gain b must be > 0 (got {0})")]
    ProportionalGain(f64),
    #[error("integral gain c must be >= 0 (got {0})")]
    IntegralGain(f64),
    #[error("nonlinear gain ratio d must be >= 0 (got {0})")]
    NonlinearRatio(f64),
    #[error("error-sensitivity exponent e must be <= 0 (got {0})")]
    Exponent(f64),
    #[error("e = 0 is only allowed together with d = 0")]
    ZeroExponentWithNonlinearity,
}

/// The five gains of the nl-PID law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerParams {
    /// Derivative gain (1/s).
    pub a: f64,
    /// Proportional gain (1/s²).
    pub b: f64,
    /// Integral gain (1/s³); zero encodes PD.
    pub c: f64,
    /// Nonlinear gain ratio; zero encodes linear PID.
    pub d: f64,
    /// Error-sensitivity exponent (inverse output units), non-positive.
    pub e: f64,
}

impl ControllerParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64) -> Result<Self, ParamsError> {
        let p = Self { a, b, c, d, e };
        p.validate()?;
        Ok(p)
    }

    pub fn pid(a: f64, b: f64, c: f64) -> Result<Self, ParamsError> {
        Self::new(a, b, c, 0.0, 0.0)
    }

    pub fn pd(a: f64, b: f64) -> Result<Self, ParamsError> {
        Self::new(a, b, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d), ("e", self.e)] {
            if !v.is_finite() {
                return Err(ParamsError::NonFinite(name));
            }
        }
        if self.a <= 0.0 {
            return Err(ParamsError::DerivativeGain(self.a));
        }
        if self.b <= 0.0 {
            return Err(ParamsError::ProportionalGain(self.b));
        }
        if self.c < 0.0 {
            return Err(ParamsError::IntegralGain(self.c));
        }
        if self.d < 0.0 {
            return Err(ParamsError::NonlinearRatio(self.d));
        }
        if self.e > 0.0 {
            return Err(ParamsError::Exponent(self.e));
        }
        if self.e == 0.0 && self.d != 0.0 {
            return Err(ParamsError::ZeroExponentWithNonlinearity);
        }
        Ok(())
    }

    /// The same gains with the nonlinear part removed.
    pub fn linear_part(&self) -> Self {
        Self {
            d: 0.0,
            e: 0.0,
            ..*self
        }
    }

    pub fn is_linear(&self) -> bool {
        self.d == 0.0
    }

    /// Effective integral gain `Ω = c (1 + d exp(e |err|))`.
    pub fn omega_gain(&self, err: f64) -> f64 {
        self.c * (1.0 + self.d * (self.e * err.abs()).exp())
    }

    /// Control signal `a ε̇ + b ε + Ω(ε) ∫ε`.
    pub fn control_output(&self, eps: f64, eps_dot: f64, state: &ControllerState) -> f64 {
        self.a * eps_dot + self.b * eps + self.omega_gain(eps) * state.integral
    }

    /// Linear PID output `a ε̇ + b ε + c ∫ε`, ignoring `d` and `e`.
    pub fn pid_output(&self, eps: f64, eps_dot: f64, state: &ControllerState) -> f64 {
        self.a * eps_dot + self.b * eps + self.c * state.integral
    }

    /// Feedback nonlinearity `φ(z) = c d exp(e |x₂|) z` acting on the
    /// integral state; lies in the sector `[0, c d]`.
    pub fn phi_nonlinearity(&self, x2: f64, z: f64) -> f64 {
        self.c * self.d * (self.e * x2.abs()).exp() * z
    }

    /// Upper edge `k = c d` of the sector containing φ.
    pub fn sector_bound(&self) -> f64 {
        self.c * self.d
    }
}

/// Integral state owned by a simulation loop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    /// Accumulated `∫ε dt` (m·s).
    pub integral: f64,
}

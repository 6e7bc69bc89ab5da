//! Disturbance-rejection analysis of the frozen-Ω loop.
//!
//! With the integral gain frozen at `Ω`, the disturbance-to-output transfer
//! function is `S(s) = s / (s³ + a s² + b s + Ω)`. This module tabulates its
//! magnitude, locates the resonance peak and evaluates the closed-form
//! unit-step-disturbance responses for the real double-pole configuration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{golden_min_tol, log_grid};
use crate::stability::routh_hurwitz_3rd;

pub const PEAK_GRID_POINTS: usize = 2000;
pub const PEAK_OMEGA_MIN: f64 = 1e-2;
pub const PEAK_REL_TOL: f64 = 1e-10;
/// Relative tolerance under which two decay rates count as equal.
pub const DEGENERATE_REL_TOL: f64 = 1e-9;
/// Time step of transient-peak scans.
pub const TRANSIENT_DT: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FreqError {
    #[error("gains (a = {a}, b = {b}, Omega = {omega}) are not Hurwitz")]
    NotHurwitz { a: f64, b: f64, omega: f64 },
    #[error("degenerate pole configuration")]
    Degenerate,
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

/// Tabulated `|S(jω)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    pub omegas: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

impl FrequencyResponse {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// CSV with header `omega,magnitude`.
    pub fn to_csv(&self) -> String {
        crate::io::write_csv(&["omega", "magnitude"], &[&self.omegas, &self.magnitudes])
    }
}

/// `|S(jω)| = ω / sqrt((bω − ω³)² + (Ω − aω²)²)`.
pub fn sensitivity_magnitude(a: f64, b: f64, omega_gain: f64, omega: f64) -> f64 {
    let re = omega_gain - a * omega * omega;
    let im = b * omega - omega * omega * omega;
    omega.abs() / re.hypot(im)
}

/// Magnitude of `S` on a strictly increasing positive grid.
pub fn sensitivity_response(a: f64, b: f64, omega_gain: f64, omegas: &[f64]) -> Result<FrequencyResponse, FreqError> {
    if omegas.windows(2).any(|w| w[1] <= w[0]) || omegas.iter().any(|w| !(*w > 0.0)) {
        return Err(FreqError::InvalidInput("grid must be positive and strictly increasing"));
    }
    Ok(FrequencyResponse {
        omegas: omegas.to_vec(),
        magnitudes: omegas
            .iter()
            .map(|&w| sensitivity_magnitude(a, b, omega_gain, w))
            .collect(),
    })
}

/// Peak of `|S(jω)|` over `ω > 0`: log-grid scan on `[1e-2, 10√b]` followed
/// by golden-section refinement in `ln ω`. Returns `(ω_peak, |S|_peak)`.
pub fn peak_sensitivity(a: f64, b: f64, omega_gain: f64) -> Result<(f64, f64), FreqError> {
    if !routh_hurwitz_3rd(a, b, omega_gain).stable {
        return Err(FreqError::NotHurwitz { a, b, omega: omega_gain });
    }
    let hi = 10.0 * b.sqrt();
    let grid = log_grid(PEAK_OMEGA_MIN.min(hi / 10.0), hi, PEAK_GRID_POINTS);
    let mags: Vec<f64> = grid
        .iter()
        .map(|&w| sensitivity_magnitude(a, b, omega_gain, w))
        .collect();
    let i = mags
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let lo = grid[i.saturating_sub(1)].ln();
    let up = grid[(i + 1).min(grid.len() - 1)].ln();
    // tolerance is on ω; in log space that is an absolute bracket width
    let (lw, neg) = golden_min_tol(
        |lw| -sensitivity_magnitude(a, b, omega_gain, lw.exp()),
        lo,
        up,
        PEAK_REL_TOL / lo.abs().max(up.abs()).max(1.0),
    );
    Ok((lw.exp(), -neg))
}

fn check_rate(v: f64) -> Result<(), FreqError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(FreqError::InvalidInput("decay rates and gains must be finite and > 0"))
    }
}

/// Unit-step-disturbance output for poles `{−λ₁ (double), −λ₂}`:
/// `Γ (e^{−λ₂t} − (1 − (λ₂ − λ₁)t) e^{−λ₁t})`, `Γ = (λ₁ − λ₂)⁻²`.
pub fn step_response_closed_form(lambda1: f64, lambda2: f64, t: f64) -> Result<f64, FreqError> {
    check_rate(lambda1)?;
    check_rate(lambda2)?;
    if !(t >= 0.0) {
        return Err(FreqError::InvalidInput("t must be >= 0"));
    }
    if (lambda1 - lambda2).abs() <= DEGENERATE_REL_TOL * lambda1.max(lambda2) {
        return Err(FreqError::Degenerate);
    }
    let gamma = (lambda1 - lambda2).powi(-2);
    Ok(gamma * ((-lambda2 * t).exp() - (1.0 - (lambda2 - lambda1) * t) * (-lambda1 * t).exp()))
}

/// The same response parametrized by the frozen integral gain,
/// `λ₂ = Ω/λ₁²`, `Γ̂ = λ₁⁴ / (λ₁³ − Ω)²`.
pub fn step_response_omega_form(lambda1: f64, omega_gain: f64, t: f64) -> Result<f64, FreqError> {
    check_rate(lambda1)?;
    check_rate(omega_gain)?;
    if !(t >= 0.0) {
        return Err(FreqError::InvalidInput("t must be >= 0"));
    }
    let l1sq = lambda1 * lambda1;
    let cube = l1sq * lambda1;
    if (cube - omega_gain).abs() <= DEGENERATE_REL_TOL * cube.max(omega_gain) {
        return Err(FreqError::Degenerate);
    }
    let gamma_hat = l1sq * l1sq / (cube - omega_gain).powi(2);
    Ok(gamma_hat
        * ((-(omega_gain / l1sq) * t).exp()
            - (1.0 - (omega_gain - cube) / l1sq * t) * (-lambda1 * t).exp()))
}

/// Transient of the Ω-form response on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSeries {
    pub lambda1: f64,
    pub omega_gain: f64,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

impl StepSeries {
    /// `max_t |y(t)|` and the time where it occurs.
    pub fn peak(&self) -> (f64, f64) {
        self.t
            .iter()
            .zip(&self.y)
            .fold((0.0, 0.0), |best, (&t, &y)| if y.abs() > best.1 { (t, y.abs()) } else { best })
    }

    pub fn to_csv(&self) -> String {
        crate::io::write_csv(&["t", "y"], &[&self.t, &self.y])
    }
}

/// Samples the Ω-form response with step `dt` over `[0, 20 / min(λ₁, λ₂)]`.
pub fn step_series(lambda1: f64, omega_gain: f64, dt: f64) -> Result<StepSeries, FreqError> {
    check_rate(lambda1)?;
    check_rate(omega_gain)?;
    check_rate(dt)?;
    let lambda2 = omega_gain / (lambda1 * lambda1);
    let horizon = 20.0 / lambda1.min(lambda2);
    let n = (horizon / dt + 1e-9).floor() as usize + 1;
    let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let y = t
        .iter()
        .map(|&t| step_response_omega_form(lambda1, omega_gain, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StepSeries {
        lambda1,
        omega_gain,
        t,
        y,
    })
}

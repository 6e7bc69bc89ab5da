//! Stability certificates for the (nl-)PID loop.
//!
//! * Routh–Hurwitz for the linear third-order loop `s³ + a s² + b s + c`.
//! * Exact circle criterion for the nonlinear integral sector `[0, c d]`,
//!   obtained by clearing denominators of `Re[1 + k H(jω)] > 0` into the
//!   cubic `P(x) = x³ + (a² − 2b) x² + (b² − 2ac − acd) x + c²(1 + d)` in
//!   `x = ω²` and checking positivity on `x ≥ 0`.
//! * A frequency-sweep circle criterion for arbitrary proper loop transfer
//!   functions, used for the actuator-extended loop and as an independent
//!   check of the exact test.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{golden_min, log_grid};
use crate::lti::{build_loop_tf, ActuatorSpec, LtiError, Polynomial, RationalTF};

/// Margins within this band of zero are reported as marginal (not stable).
pub const MARGINAL_TOL: f64 = 1e-9;

pub const SWEEP_OMEGA_MIN: f64 = 1e-3;
pub const SWEEP_OMEGA_MAX: f64 = 1e6;
pub const SWEEP_POINTS: usize = 4000;
pub const SWEEP_REFINE_ITERATIONS: usize = 40;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("linear loop not Hurwitz (a = {a}, b = {b}, c = {c})")]
    NotHurwitz { a: f64, b: f64, c: f64 },
    #[error("assumption (ii) violated: loop transfer function denominator is not Hurwitz")]
    AssumptionViolated,
    #[error("empty frequency grid")]
    EmptyGrid,
    #[error("invalid sector bound k = {0}")]
    InvalidSector(f64),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("actuator block required")]
    ActuatorAbsent,
    #[error(transparent)]
    Lti(#[from] LtiError),
}

/// Outcome of a stability test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// Worst-case left side of the tested inequality minus its bound.
    pub margin: f64,
    /// Frequency (rad/s) where the margin is attained.
    pub witness_omega: Option<f64>,
    pub marginal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl StabilityVerdict {
    fn from_margin(margin: f64, witness_omega: Option<f64>, marginal_band: f64) -> Self {
        let marginal = margin.abs() <= marginal_band;
        Self {
            stable: margin > 0.0 && !marginal,
            margin,
            witness_omega,
            marginal,
            note: marginal.then(|| "marginal".to_owned()),
        }
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(match self.note.take() {
            Some(prev) => format!("{prev}; {note}"),
            None => note.to_owned(),
        });
        self
    }
}

/// Routh–Hurwitz test for `s³ + a s² + b s + c`.
///
/// The margin is `ab − c` when all coefficients are positive and the
/// smallest coefficient otherwise. The marginal band is relative to `ab`.
pub fn routh_hurwitz_3rd(a: f64, b: f64, c: f64) -> StabilityVerdict {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        StabilityVerdict::from_margin(a * b - c, None, MARGINAL_TOL * a * b)
    } else {
        let margin = a.min(b).min(c);
        let v = StabilityVerdict::from_margin(margin, None, 0.0);
        v.with_note("non-positive coefficient")
    }
}

/// Coefficients of `P(x)`, highest first.
pub fn circle_polynomial(a: f64, b: f64, c: f64, d: f64) -> [f64; 4] {
    [
        1.0,
        a * a - 2.0 * b,
        b * b - 2.0 * a * c - a * c * d,
        c * c * (1.0 + d),
    ]
}

/// Exact circle criterion for the nl-PID loop with sector `[0, c d]`.
///
/// The margin is `min_{x ≥ 0} P(x) / (c² (1 + d))`; the minimum is taken
/// over `x = 0` and the stationary points of `P` on `x > 0`.
pub fn circle_exact(a: f64, b: f64, c: f64, d: f64) -> Result<StabilityVerdict, StabilityError> {
    if ![a, b, c, d].iter().all(|v| v.is_finite()) || d < 0.0 {
        return Err(StabilityError::InvalidInput("gains must be finite and d >= 0"));
    }
    if !routh_hurwitz_3rd(a, b, c).stable {
        return Err(StabilityError::NotHurwitz { a, b, c });
    }
    let coeffs = circle_polynomial(a, b, c, d);
    let p = Polynomial::new(coeffs.to_vec())?;
    let scale = coeffs[3];

    // P'(x) = 3x² + 2 B x + C
    let (qb, qc) = (coeffs[1], coeffs[2]);
    let disc = qb * qb - 3.0 * qc;
    let mut best = (0.0, p.eval_real(0.0));
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // numerically stable pair of roots of 3x² + 2Bx + C
        let q = -(qb + qb.signum() * sq);
        let roots = if q != 0.0 {
            [q / 3.0, qc / q]
        } else {
            [0.0, 0.0]
        };
        for x in roots {
            if x > 0.0 && x.is_finite() {
                let v = p.eval_real(x);
                if v < best.1 {
                    best = (x, v);
                }
            }
        }
    }
    let verdict = StabilityVerdict::from_margin(best.1 / scale, Some(best.0.sqrt()), MARGINAL_TOL);
    Ok(if d == 0.0 {
        verdict.with_note("sector vanishes")
    } else {
        verdict
    })
}

/// Default sweep grid: 4000 log-spaced points over `[1e-3, 1e6]` rad/s.
pub fn default_circle_grid() -> Vec<f64> {
    log_grid(SWEEP_OMEGA_MIN, SWEEP_OMEGA_MAX, SWEEP_POINTS)
}

/// Circle criterion `Re[1 + k H(jω)] > 0` checked on a frequency grid with
/// golden-section refinement around every discrete local minimum.
pub fn circle_sweep(h: &RationalTF, k: f64, omega_grid: &[f64]) -> Result<StabilityVerdict, StabilityError> {
    if !k.is_finite() || k < 0.0 {
        return Err(StabilityError::InvalidSector(k));
    }
    if omega_grid.is_empty() {
        return Err(StabilityError::EmptyGrid);
    }
    if omega_grid.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(StabilityError::InvalidInput("grid frequencies must be finite and >= 0"));
    }
    if !h.den().is_hurwitz()? {
        return Err(StabilityError::AssumptionViolated);
    }
    let mut grid = omega_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let g = |w: f64| -> f64 {
        match h.eval(w) {
            Ok(v) => 1.0 + k * v.re,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let values: Vec<f64> = grid.iter().map(|&w| g(w)).collect();

    let (mut best_w, mut best) = (grid[0], values[0]);
    for i in 0..grid.len() {
        let left = if i > 0 { values[i - 1] } else { f64::INFINITY };
        let right = values.get(i + 1).copied().unwrap_or(f64::INFINITY);
        if values[i] > left || values[i] > right {
            continue;
        }
        if values[i] < best {
            best = values[i];
            best_w = grid[i];
        }
        if grid.len() < 3 {
            continue;
        }
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(grid.len() - 1)];
        let (w, v) = if lo > 0.0 {
            let (lw, v) = golden_min(|lw| g(lw.exp()), lo.ln(), hi.ln(), SWEEP_REFINE_ITERATIONS);
            (lw.exp(), v)
        } else {
            golden_min(g, lo, hi, SWEEP_REFINE_ITERATIONS)
        };
        if v < best {
            best = v;
            best_w = w;
        }
    }
    let verdict = StabilityVerdict::from_margin(best, Some(best_w), MARGINAL_TOL);
    Ok(if k == 0.0 {
        verdict.with_note("sector vanishes")
    } else {
        verdict
    })
}

/// Circle criterion for the loop extended by a first-order actuator,
/// `H(s) = κ / ((μ s + 1)(s³ + a s² + b s + c))`, sector `[0, c d]`.
pub fn circle_extended(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    actuator: &ActuatorSpec,
    omega_grid: &[f64],
) -> Result<StabilityVerdict, StabilityError> {
    if !actuator.present {
        return Err(StabilityError::ActuatorAbsent);
    }
    if !d.is_finite() || d < 0.0 {
        return Err(StabilityError::InvalidInput("d must be finite and >= 0"));
    }
    let h = build_loop_tf(a, b, c, actuator)?;
    circle_sweep(&h, c * d, omega_grid)
}

/// Gains placing a double pole at `−λ₁` and a single pole at `−λ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleGains {
    pub a: f64,
    pub b: f64,
    pub omega: f64,
}

/// `a = 2λ₁ + λ₂`, `b = λ₁² + 2λ₁λ₂`, `Ω = λ₁²λ₂`, so that
/// `s³ + a s² + b s + Ω = (s + λ₁)²(s + λ₂)`. Rates are positive decay
/// rates.
pub fn pole_placement_gains(lambda1: f64, lambda2: f64) -> Result<PoleGains, StabilityError> {
    if !(lambda1.is_finite() && lambda2.is_finite() && lambda1 > 0.0 && lambda2 > 0.0) {
        return Err(StabilityError::InvalidInput("decay rates must be finite and > 0"));
    }
    Ok(PoleGains {
        a: 2.0 * lambda1 + lambda2,
        b: lambda1 * lambda1 + 2.0 * lambda1 * lambda2,
        omega: lambda1 * lambda1 * lambda2,
    })
}

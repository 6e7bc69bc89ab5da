//! Polynomial and rational transfer-function arithmetic.
//!
//! Polynomials are stored dense, highest degree first, and are kept in
//! normalized form (no leading zeros unless the polynomial is identically
//! zero). Everything here is a plain value type; evaluation is Horner's
//! scheme on complex arguments and root finding is Aberth–Ehrlich
//! simultaneous iteration followed by one Newton polish per root.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Highest polynomial degree accepted anywhere in the toolkit.
pub const MAX_DEGREE: usize = 16;

/// Acceptance bound on the normalized root residual
/// `|p(r)| / (|lead| * max(1, |r|)^deg)`.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-8;

/// Alternative acceptance for ill-conditioned or badly scaled polynomials,
/// where the normalized residual cannot reach [`ROOT_RESIDUAL_TOL`] in
/// double precision.
pub const BACKWARD_RESIDUAL_TOL: f64 = 1e-12;

/// `|den(jω)|` below this is treated as evaluation at a pole.
pub const POLE_EVAL_TOL: f64 = 1e-12;

const ABERTH_MAX_ITER: usize = 2000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LtiError {
    #[error("non-finite polynomial coefficient at index {0}")]
    NonFinite(usize),
    #[error("polynomial degree {0} exceeds the supported maximum of {MAX_DEGREE}")]
    DegreeTooHigh(usize),
    #[error("no roots: polynomial has degree 0")]
    NoRoots,
    #[error("denominator is identically zero")]
    ZeroDenominator,
    #[error("improper transfer function: numerator degree {num} > denominator degree {den}")]
    Improper { num: usize, den: usize },
    #[error("evaluation at pole (omega = {0})")]
    EvaluationAtPole(f64),
    #[error("invalid actuator: {0}")]
    InvalidActuator(&'static str),
    #[error("invalid gain: {0}")]
    InvalidGain(&'static str),
    #[error("root finder did not converge (worst normalized residual {0:e})")]
    RootsNotConverged(f64),
}

/// Dense real polynomial, coefficients highest degree first.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a normalized polynomial. Leading zeros are stripped; an empty
    /// or all-zero input yields the zero polynomial.
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Result<Self, LtiError> {
        let coeffs: Vec<f64> = coeffs.into();
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(LtiError::NonFinite(i));
        }
        let first = coeffs.iter().position(|&c| c != 0.0);
        let coeffs = match first {
            Some(i) => coeffs[i..].to_vec(),
            None => vec![0.0],
        };
        if coeffs.len() - 1 > MAX_DEGREE {
            return Err(LtiError::DegreeTooHigh(coeffs.len() - 1));
        }
        Ok(Self { coeffs })
    }

    pub fn constant(value: f64) -> Result<Self, LtiError> {
        Self::new(vec![value])
    }

    /// Monic polynomial with the given roots (real coefficients assumed, so
    /// complex roots must come in conjugate pairs).
    pub fn from_real_roots(roots: &[f64]) -> Result<Self, LtiError> {
        roots.iter().try_fold(Self::constant(1.0)?, |acc, &r| {
            acc.mul(&Self::new(vec![1.0, -r])?)
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[0]
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        let n = self.degree();
        if n == 0 {
            return Polynomial { coeffs: vec![0.0] };
        }
        let coeffs = self.coeffs[..n]
            .iter()
            .enumerate()
            .map(|(i, &c)| c * (n - i) as f64)
            .collect();
        Polynomial { coeffs }
    }

    /// Polynomial product (coefficient convolution).
    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, LtiError> {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, LtiError> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let pad = |c: &[f64]| {
            let mut v = vec![0.0; n - c.len()];
            v.extend_from_slice(c);
            v
        };
        let (a, b) = (pad(&self.coeffs), pad(&other.coeffs));
        Polynomial::new(a.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<_>>())
    }

    /// Residual `|p(r)| / (|lead| · max(1, |r|)^deg)`.
    pub fn normalized_residual(&self, r: Complex64) -> f64 {
        let scale = self.leading().abs() * r.norm().max(1.0).powi(self.degree() as i32);
        self.eval(r).norm() / scale
    }

    /// Backward residual `|p(r)| / Σ |cᵢ| |r|^i`, the scale of the rounding
    /// error of evaluating `p` at `r`.
    pub fn backward_residual(&self, r: Complex64) -> f64 {
        let m = r.norm();
        let scale = self.coeffs.iter().fold(0.0, |acc, c| acc * m + c.abs());
        self.eval(r).norm() / scale
    }

    fn root_accepted(&self, r: Complex64) -> bool {
        self.normalized_residual(r) < ROOT_RESIDUAL_TOL || self.backward_residual(r) < BACKWARD_RESIDUAL_TOL
    }

    /// All complex roots with multiplicity, sorted by real part then
    /// imaginary part.
    pub fn roots(&self) -> Result<Vec<Complex64>, LtiError> {
        let n = self.degree();
        if n == 0 {
            return Err(LtiError::NoRoots);
        }
        let lead = self.leading();
        let monic: Vec<f64> = self.coeffs.iter().map(|c| c / lead).collect();
        let p = Polynomial { coeffs: monic };
        let dp = p.derivative();

        let mut z = initial_guesses(&p.coeffs);
        for _ in 0..ABERTH_MAX_ITER {
            let mut worst = 0.0_f64;
            for k in 0..n {
                let pz = p.eval(z[k]);
                if pz.norm() == 0.0 {
                    continue;
                }
                let ratio = pz / dp.eval(z[k]);
                let repulsion: Complex64 = (0..n)
                    .filter(|&j| j != k)
                    .map(|j| (z[k] - z[j]).inv())
                    .sum();
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                if step.is_finite() {
                    z[k] -= step;
                    worst = worst.max(step.norm() / z[k].norm().max(1.0));
                }
            }
            if worst < 1e-15 {
                break;
            }
        }

        for r in z.iter_mut() {
            let d = dp.eval(*r);
            if d.norm() > 0.0 {
                let polished = *r - p.eval(*r) / d;
                if polished.is_finite() && p.eval(polished).norm() <= p.eval(*r).norm() {
                    *r = polished;
                }
            }
            // real coefficients: a root whose imaginary part is pure noise is real
            if r.im.abs() <= 1e-14 * r.norm().max(1.0) {
                r.im = 0.0;
            }
        }

        if let Some(&bad) = z.iter().find(|&&r| !self.root_accepted(r)) {
            return Err(LtiError::RootsNotConverged(self.normalized_residual(bad)));
        }
        z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(z)
    }

    /// True when every root lies strictly in the open left half plane.
    pub fn is_hurwitz(&self) -> Result<bool, LtiError> {
        Ok(self.roots()?.iter().all(|r| r.re < 0.0))
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let coeffs = Vec::<f64>::deserialize(deserializer)?;
        Polynomial::new(coeffs).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.degree();
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0 || n == 0)
            .map(|(i, c)| match n - i {
                0 => format!("{c}"),
                1 => format!("{c}*s"),
                k => format!("{c}*s^{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Starting points on a circle around the root centroid, radius from the
/// Fujiwara bound, with an angular offset that keeps them off the real axis.
fn initial_guesses(monic: &[f64]) -> Vec<Complex64> {
    let n = monic.len() - 1;
    let center = -monic[1] / n as f64;
    let radius = monic[1..]
        .iter()
        .enumerate()
        .map(|(k, c)| c.abs().powf(1.0 / (k + 1) as f64))
        .fold(0.0, f64::max)
        .max(1e-3)
        * 2.0;
    (0..n)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex64::new(center, 0.0) + Complex64::from_polar(radius, angle)
        })
        .collect()
}

/// Ratio of two polynomials. Every transfer function built by this crate is
/// proper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTF {
    num: Polynomial,
    den: Polynomial,
}

impl RationalTF {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, LtiError> {
        if den.is_zero() {
            return Err(LtiError::ZeroDenominator);
        }
        if !num.is_zero() && num.degree() > den.degree() {
            return Err(LtiError::Improper {
                num: num.degree(),
                den: den.degree(),
            });
        }
        Ok(Self { num, den })
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() < self.den.degree()
    }

    /// Evaluates at an arbitrary complex point.
    pub fn eval_at(&self, s: Complex64) -> Result<Complex64, LtiError> {
        let d = self.den.eval(s);
        if d.norm() <= POLE_EVAL_TOL {
            return Err(LtiError::EvaluationAtPole(s.im));
        }
        Ok(self.num.eval(s) / d)
    }

    /// Frequency response `H(jω)`.
    pub fn eval(&self, omega: f64) -> Result<Complex64, LtiError> {
        self.eval_at(Complex64::new(0.0, omega))
    }
}

/// First-order actuator lag `κ / (μ s + 1)` between commanded and effective
/// control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorSpec {
    pub kappa: f64,
    /// Time constant in seconds.
    pub mu: f64,
    #[serde(default = "default_present")]
    pub present: bool,
}

fn default_present() -> bool {
    true
}

impl Default for ActuatorSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl ActuatorSpec {
    pub fn none() -> Self {
        Self {
            kappa: 1.0,
            mu: 0.0,
            present: false,
        }
    }

    pub fn first_order(kappa: f64, mu: f64) -> Result<Self, LtiError> {
        let spec = Self {
            kappa,
            mu,
            present: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), LtiError> {
        if !self.present {
            return Ok(());
        }
        if !self.kappa.is_finite() || self.kappa == 0.0 {
            return Err(LtiError::InvalidActuator("kappa must be finite and nonzero"));
        }
        if !self.mu.is_finite() || self.mu <= 0.0 {
            return Err(LtiError::InvalidActuator("mu must be finite and > 0"));
        }
        Ok(())
    }

    /// `F(s)` as a transfer function; unity when absent.
    pub fn transfer_function(&self) -> Result<RationalTF, LtiError> {
        self.validate()?;
        if self.present {
            RationalTF::new(
                Polynomial::constant(self.kappa)?,
                Polynomial::new(vec![self.mu, 1.0])?,
            )
        } else {
            RationalTF::new(Polynomial::constant(1.0)?, Polynomial::constant(1.0)?)
        }
    }
}

fn check_gains(gains: &[f64]) -> Result<(), LtiError> {
    if gains.iter().all(|g| g.is_finite() && *g > 0.0) {
        Ok(())
    } else {
        Err(LtiError::InvalidGain("gains must be finite and positive"))
    }
}

/// Characteristic polynomial `s³ + a s² + b s + c` of the PID loop.
pub fn characteristic_polynomial(a: f64, b: f64, c: f64) -> Result<Polynomial, LtiError> {
    Polynomial::new(vec![1.0, a, b, c])
}

/// Loop transfer function seen by the integral-state nonlinearity:
/// `F(s) / (s³ + a s² + b s + c)`.
pub fn build_loop_tf(a: f64, b: f64, c: f64, actuator: &ActuatorSpec) -> Result<RationalTF, LtiError> {
    check_gains(&[a, b, c])?;
    actuator.validate()?;
    let cubic = characteristic_polynomial(a, b, c)?;
    if actuator.present {
        let lag = Polynomial::new(vec![actuator.mu, 1.0])?;
        RationalTF::new(Polynomial::constant(actuator.kappa)?, lag.mul(&cubic)?)
    } else {
        RationalTF::new(Polynomial::constant(1.0)?, cubic)
    }
}

/// Disturbance-to-output transfer function `s / (s³ + a s² + b s + Ω)`,
/// i.e. `G / (1 + C G)` with `G = 1/s²` and `C = (a s² + b s + Ω)/s`.
pub fn build_sensitivity_tf(a: f64, b: f64, omega_gain: f64) -> Result<RationalTF, LtiError> {
    check_gains(&[a, b, omega_gain])?;
    RationalTF::new(
        Polynomial::new(vec![1.0, 0.0])?,
        characteristic_polynomial(a, b, omega_gain)?,
    )
}

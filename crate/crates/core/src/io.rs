//! Run-configuration files (JSON) and numeric CSV series.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::ControllerParams;
use crate::grid::log_grid;
use crate::lti::ActuatorSpec;
use crate::sim::{DisturbanceSpec, SimConfig, DEFAULT_DT};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub duration: f64,
    #[serde(default)]
    pub y0: f64,
    #[serde(default)]
    pub ydot0: f64,
    #[serde(default)]
    pub integral0: f64,
    #[serde(default)]
    pub reference: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    #[serde(default = "default_omega_min")]
    pub omega_min: f64,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    #[serde(default = "default_omega_points")]
    pub omega_points: usize,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
}

fn default_omega_min() -> f64 {
    1e-1
}
fn default_omega_max() -> f64 {
    1e3
}
fn default_omega_points() -> usize {
    2000
}
pub fn default_thresholds() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            omega_min: default_omega_min(),
            omega_max: default_omega_max(),
            omega_points: default_omega_points(),
            thresholds: default_thresholds(),
        }
    }
}

impl AnalysisBlock {
    pub fn omega_grid(&self) -> Vec<f64> {
        log_grid(self.omega_min, self.omega_max, self.omega_points)
    }
}

/// Top-level run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub version: u32,
    pub controller: ControllerParams,
    #[serde(default)]
    pub actuator: Option<ActuatorSpec>,
    pub disturbance: DisturbanceSpec,
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
}

impl RunConfigFile {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfigFile = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn actuator_spec(&self) -> ActuatorSpec {
        self.actuator.unwrap_or_else(ActuatorSpec::none)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        self.sim_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let a = &self.analysis;
        if !(a.omega_min.is_finite() && a.omega_max.is_finite() && a.omega_min > 0.0 && a.omega_max > a.omega_min) {
            return Err(ConfigError::Invalid(
                "analysis: need 0 < omega_min < omega_max, both finite".into(),
            ));
        }
        if a.omega_points < 2 {
            return Err(ConfigError::Invalid("analysis: omega_points must be >= 2".into()));
        }
        if a.thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(ConfigError::Invalid("analysis: thresholds must be finite and > 0".into()));
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        let s = &self.simulation;
        SimConfig {
            controller: self.controller,
            actuator: self.actuator_spec(),
            disturbance: self.disturbance,
            reference: s.reference,
            y0: s.y0,
            ydot0: s.ydot0,
            integral0: s.integral0,
            dt: s.dt,
            duration: s.duration,
            noise_std: s.noise_std,
            rng_seed: s.rng_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsvError {
    #[error("empty CSV")]
    Empty,
    #[error("unexpected header {found:?} (expected {expected:?})")]
    Header { found: String, expected: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    Width { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse {field:?} as a number")]
    Number { line: usize, field: String },
}

/// Column-major numeric CSV. Floats use the shortest representation that
/// parses back to the same bits.
pub fn write_csv(header: &[&str], columns: &[&[f64]]) -> String {
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    let mut out = String::with_capacity(rows * columns.len() * 12 + 64);
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..rows {
        for (j, col) in columns.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:?}", col[i]);
        }
        out.push('\n');
    }
    out
}

/// Parses a CSV written by [`write_csv`], returning its header and columns.
pub fn read_csv_any(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), CsvError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or(CsvError::Empty)?;
    let header: Vec<String> = head.split(',').map(|s| s.trim().to_owned()).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(CsvError::Width {
                line: i + 1,
                expected: header.len(),
                found: fields.len(),
            });
        }
        for (col, f) in cols.iter_mut().zip(fields) {
            let v = f.trim().parse::<f64>().map_err(|_| CsvError::Number {
                line: i + 1,
                field: f.to_owned(),
            })?;
            col.push(v);
        }
    }
    Ok((header, cols))
}

/// Like [`read_csv_any`] but insists on an exact header.
pub fn read_csv(text: &str, expected: &[&str]) -> Result<Vec<Vec<f64>>, CsvError> {
    let (header, cols) = read_csv_any(text)?;
    if header.iter().map(String::as_str).ne(expected.iter().copied()) {
        return Err(CsvError::Header {
            found: header.join(","),
            expected: expected.join(","),
        });
    }
    Ok(cols)
}

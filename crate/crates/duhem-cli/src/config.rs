//! Run configuration: the JSON schema consumed by every subcommand.
//!
//! Configs are declarative and round-trip losslessly through JSON (numbers
//! serialize with shortest round-trip formatting). Optional numerics fall
//! back to defaults derived from the input span at resolution time.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use duhem::{build_periodic_input, DuhemModel, InputSignal, PeriodicInputSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid model: {0}")]
    Model(#[from] duhem::ModelError),
    #[error("invalid input signal: {0}")]
    Signal(#[from] duhem::SignalError),
    #[error("{0}")]
    Invalid(String),
}

/// Input drive description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InputConfig {
    /// Simple periodic triangle: minimum at phase 0, maximum at `t_peak`.
    Periodic {
        upsilon_min: f64,
        upsilon_max: f64,
        period: f64,
        t_peak: f64,
    },
    /// Explicit breakpoint list, optionally periodic.
    Breakpoints {
        points: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<f64>,
    },
}

/// Numeric knobs; all optional, resolved against the input span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct NumericsConfig {
    /// Integration step in input units. Default: input span / 2000.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Accommodation tolerance on max(|d gamma|, |d zeta|). Default 1e-8.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Cycle cap for the accommodation iteration. Default 500.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Simulation horizon in seconds. Default: 8 periods for periodic
    /// inputs, the final breakpoint time otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: DuhemModel,
    pub input: InputConfig,
    pub y0: f64,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub h: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

/// A config with every numeric resolved and the input signal built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: DuhemModel,
    pub signal: InputSignal,
    /// Drive extrema when the input is simple periodic; the accommodation
    /// analysis requires this.
    pub drive: Option<(f64, f64)>,
    pub y0: f64,
    pub h: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub horizon: f64,
}

pub const DEFAULT_STEP_DIVISOR: f64 = 2000.0;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_HORIZON_PERIODS: f64 = 8.0;

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = serde_json::from_str(text)?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Serializes a config back to JSON (pretty, trailing newline). Parsing the
/// result reproduces the config field for field.
pub fn emit_config(config: &RunConfig) -> String {
    let mut text = serde_json::to_string_pretty(config).expect("config serializes");
    text.push('\n');
    text
}

pub fn resolve(config: &RunConfig, overrides: &Overrides) -> Result<Resolved, ConfigError> {
    config.model.validate()?;
    let (signal, drive, span) = match &config.input {
        InputConfig::Periodic {
            upsilon_min,
            upsilon_max,
            period,
            t_peak,
        } => {
            let spec = PeriodicInputSpec {
                upsilon_min: *upsilon_min,
                upsilon_max: *upsilon_max,
                period: *period,
                t_peak: *t_peak,
            };
            let signal = build_periodic_input(&spec)?;
            (
                signal,
                Some((*upsilon_min, *upsilon_max)),
                upsilon_max - upsilon_min,
            )
        }
        InputConfig::Breakpoints { points, period } => {
            let signal = match period {
                Some(p) => InputSignal::periodic(points.clone(), *p)?,
                None => InputSignal::new(points.clone())?,
            };
            let lo = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let hi = points
                .iter()
                .map(|p| p.1)
                .fold(f64::NEG_INFINITY, f64::max);
            (signal, None, hi - lo)
        }
    };

    let h = overrides
        .h
        .or(config.numerics.h)
        .unwrap_or_else(|| if span > 0.0 { span / DEFAULT_STEP_DIVISOR } else { 1e-3 });
    if !(h > 0.0) {
        return Err(ConfigError::Invalid(format!("step h must be positive, got {h}")));
    }
    let tol = overrides.tol.or(config.numerics.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0) {
        return Err(ConfigError::Invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let max_iter = overrides
        .max_iter
        .or(config.numerics.max_iter)
        .unwrap_or(DEFAULT_MAX_ITER);
    if max_iter == 0 {
        return Err(ConfigError::Invalid("max_iter must be at least 1".into()));
    }
    let horizon = match config.numerics.horizon {
        Some(t) => t,
        None => match signal.period() {
            Some(period) => DEFAULT_HORIZON_PERIODS * period,
            None => signal
                .breakpoints()
                .last()
                .map(|&(t, _)| t)
                .unwrap_or(1.0),
        },
    };
    if !(horizon > 0.0) {
        return Err(ConfigError::Invalid(format!(
            "horizon must be positive, got {horizon}"
        )));
    }

    Ok(Resolved {
        model: config.model.clone(),
        signal,
        drive,
        y0: config.y0,
        h,
        tol,
        max_iter,
        horizon,
    })
}

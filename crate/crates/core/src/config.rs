// Copyright 2026 The darkpath Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON experiment configuration.
//!
//! Every section rejects unknown keys. Rates and times are in units of a
//! reference coupling.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adiabatic::{Channel, HamiltonianFamily};
use crate::bench::OptimizeOptions;
use crate::lambda::{LambdaParams, ThetaProfile};
use crate::master::SimOptions;
use crate::nelder_mead::NelderMeadOptions;
use crate::operator::{Operator, C64};
use crate::path::{ControlPath, SplinePath};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid pulse file {path}: {reason}")]
    PulseFile { path: PathBuf, reason: String },
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub pulse: PulseConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Lambda { params: LambdaParams },
    Generic(GenericModel),
}

/// A matrix given as rows of real parts and optional imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn to_operator(&self) -> Result<Operator, ConfigError> {
        let n = self.re.len();
        if n == 0 || self.re.iter().any(|r| r.len() != n) {
            return invalid("matrix must be square and non-empty");
        }
        if let Some(im) = &self.im {
            if im.len() != n || im.iter().any(|r| r.len() != n) {
                return invalid("imaginary part must match the real part in shape");
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| {
            C64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        });
        Operator::new(m).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default)]
    pub label: String,
    pub op: MatrixSpec,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericModel {
    pub generators: Vec<MatrixSpec>,
    #[serde(default)]
    pub channels: Vec<ChannelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sectors: Option<Vec<Vec<usize>>>,
    /// Basis index of the initial pure state.
    #[serde(default)]
    pub initial_state: usize,
    /// Basis index whose final population is reported as the fidelity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_state: Option<usize>,
}

impl GenericModel {
    pub fn family(&self) -> Result<HamiltonianFamily, ConfigError> {
        let gens = self
            .generators
            .iter()
            .map(MatrixSpec::to_operator)
            .collect::<Result<Vec<_>, _>>()?;
        let mut channels = Vec::with_capacity(self.channels.len());
        for (k, c) in self.channels.iter().enumerate() {
            if !(c.rate >= 0.0 && c.rate.is_finite()) {
                return invalid(format!("channel {k} rate {} must be finite and >= 0", c.rate));
            }
            let label = if c.label.is_empty() {
                format!("channel{k}")
            } else {
                c.label.clone()
            };
            channels.push(Channel::new(label, c.op.to_operator()?, c.rate));
        }
        let fam = match &self.sectors {
            Some(s) => HamiltonianFamily::with_sectors(gens, channels, s.clone()),
            None => HamiltonianFamily::new(gens, channels),
        }
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let d = fam.dim();
        if self.initial_state >= d || self.target_state.is_some_and(|t| t >= d) {
            return invalid(format!("state indices must be below the dimension {d}"));
        }
        Ok(fam)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseConfig {
    /// `θ` linear in time.
    #[default]
    Linear,
    /// Cosine series for `θ̇` with coefficients `α_n`.
    Fourier { coeffs: Vec<f64> },
    /// Least-action trajectory at conserved energy `energy`; `t_f` follows.
    EnergyOptimal {
        #[serde(default)]
        energy: f64,
        /// Boundary smoothing window in time units.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        smoothing: Option<f64>,
    },
    /// CSV with columns `t` then `theta` (Λ model) or one column per control.
    File { path: PathBuf },
    /// Controls interpolated linearly between two vectors (generic model).
    Controls { start: Vec<f64>, end: Vec<f64> },
}

/// Either explicit values or an evenly spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        log: bool,
    },
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        let v = match self {
            GridSpec::Values(v) => v.clone(),
            GridSpec::Range {
                start,
                stop,
                points,
                log,
            } => {
                if *points < 2 {
                    return invalid("grid needs at least 2 points");
                }
                if *log && !(*start > 0.0 && *stop > 0.0) {
                    return invalid("log grid needs positive bounds");
                }
                (0..*points)
                    .map(|k| {
                        let u = k as f64 / (*points - 1) as f64;
                        if *log {
                            (start.ln() + u * (stop.ln() - start.ln())).exp()
                        } else {
                            start + u * (stop - start)
                        }
                    })
                    .collect()
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return invalid("grid values must be finite and non-empty");
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("grid must be strictly increasing");
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_f_grid: Option<GridSpec>,
    /// Fourier orders for `optimize` and `sweep`; runs are nested in this order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    /// Asymmetry values for the rate-asymmetry sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<GridSpec>,
    pub n_max: usize,
    /// Optimize the transfer time together with the coefficients.
    pub optimize_time: bool,
    /// Exit with the divergence code when the optimal time is infinite.
    pub require_optimal_time: bool,
    /// Trajectory samples written by `simulate`.
    pub n_samples: usize,
    /// `θ` samples written by `analytic`.
    pub theta_samples: usize,
    pub sim: SimOptions,
    pub optimizer: OptimizerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_f: None,
            t_f_grid: None,
            n_values: None,
            lambda_grid: None,
            n_max: 8,
            optimize_time: false,
            require_optimal_time: false,
            n_samples: 201,
            theta_samples: 181,
            sim: SimOptions::default(),
            optimizer: OptimizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub nelder_mead: NelderMeadOptions,
    pub perturbation: f64,
    pub n_seeds: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = OptimizeOptions::default();
        Self {
            nelder_mead: d.nelder_mead,
            perturbation: d.perturbation,
            n_seeds: d.n_seeds,
        }
    }
}

impl RunConfig {
    pub fn optimize_options(&self) -> OptimizeOptions {
        OptimizeOptions {
            sim: self.sim,
            nelder_mead: self.optimizer.nelder_mead.clone(),
            perturbation: self.optimizer.perturbation,
            n_seeds: self.optimizer.n_seeds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// File name prefix; defaults to the command name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        // pulse files are resolved relative to the config
        if let PulseConfig::File { path: p } = &mut cfg.pulse {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Checks that need no numerics beyond parsing.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match &self.model {
            ModelConfig::Lambda { params } => {
                params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
                if matches!(self.pulse, PulseConfig::Controls { .. }) {
                    return invalid("pulse kind `controls` needs a generic model");
                }
            }
            ModelConfig::Generic(g) => {
                let fam = g.family()?;
                match &self.pulse {
                    PulseConfig::Controls { start, end } => {
                        if start.len() != fam.n_controls() || end.len() != fam.n_controls() {
                            return invalid(format!("controls need {} entries", fam.n_controls()));
                        }
                    }
                    PulseConfig::File { .. } => {}
                    _ => return invalid("a generic model needs a `controls` or `file` pulse"),
                }
            }
        }
        if let Some(t) = self.run.t_f {
            if !(t > 0.0 && t.is_finite()) {
                return invalid(format!("run.t_f = {t} must be > 0"));
            }
        }
        if let Some(g) = &self.run.t_f_grid {
            if g.values()?.iter().any(|&t| t <= 0.0) {
                return invalid("run.t_f_grid values must be > 0");
            }
        }
        if let Some(g) = &self.run.lambda_grid {
            if g.values()?.iter().any(|&l| !(l > -1.0 && l <= 1.0)) {
                return invalid("run.lambda_grid values must lie in (-1, 1]");
            }
        }
        if let Some(ns) = &self.run.n_values {
            if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
                return invalid("run.n_values must be non-empty and strictly increasing");
            }
        }
        if let PulseConfig::EnergyOptimal {
            energy,
            smoothing,
        } = &self.pulse
        {
            if !energy.is_finite() {
                return invalid("pulse.energy must be finite");
            }
            if smoothing.is_some_and(|d| !(d > 0.0)) {
                return invalid("pulse.smoothing must be > 0");
            }
        }
        if self.run.n_samples < 2 || self.run.theta_samples < 2 {
            return invalid("sample counts must be at least 2");
        }
        let s = &self.run.sim;
        if !(s.rtol > 0.0 && s.atol > 0.0) {
            return invalid("run.sim tolerances must be > 0");
        }
        Ok(())
    }

    pub fn lambda_params(&self) -> Option<&LambdaParams> {
        match &self.model {
            ModelConfig::Lambda { params } => Some(params),
            ModelConfig::Generic(_) => None,
        }
    }
}

/// Read a pulse CSV: a header row, then `t` and one value per control.
pub fn read_pulse_file(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>), ConfigError> {
    let fail = |reason: String| ConfigError::PulseFile {
        path: path.to_path_buf(),
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| fail(e.to_string()))?;
        let vals = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| fail(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() < 2 {
            return Err(fail("need a time column and at least one value column".into()));
        }
        times.push(vals[0]);
        rows.push(vals[1..].to_vec());
    }
    if times.len() < 3 {
        return Err(fail("need at least 3 rows".into()));
    }
    if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(fail("times must start at 0 and increase".into()));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(fail("ragged rows".into()));
    }
    Ok((times, rows))
}

/// A `θ(t)` protocol interpolated from samples.
#[derive(Debug, Clone)]
pub struct SampledTheta(pub SplinePath);

impl ThetaProfile for SampledTheta {
    fn duration(&self) -> f64 {
        self.0.duration()
    }
    fn theta(&self, t: f64) -> f64 {
        self.0.evaluate(t)[0]
    }
    fn theta_dot(&self, t: f64) -> f64 {
        self.0.derivative(t)[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"model": {"kind": "lambda", "params": {"kappa_r": 0.1, "gamma1_r": 2.5e-3,
        "gamma2_r": 2.5e-3, "constraint": {"kind": "pap", "g_max": 1.0}}}}"#;

    #[test]
    fn minimal_parses_with_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.pulse, PulseConfig::Linear);
        assert_eq!(c.run.n_max, 8);
        assert_eq!(c.lambda_params().unwrap().kappa_r, 0.1);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replacen("\"kappa_r\"", "\"kapa_r\"", 1);
        assert!(ExperimentConfig::from_json(&bad).is_err());
        let bad = MINIMAL.replacen("{\"model\"", "{\"extra\": 1, \"model\"", 1);
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn negative_rate_rejected() {
        let bad = MINIMAL.replacen("2.5e-3", "-2.5e-3", 1);
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn grid_forms() {
        let g: GridSpec = serde_json::from_str(r#"{"start": 1, "stop": 3, "points": 3}"#).unwrap();
        assert_eq!(g.values().unwrap(), vec![1.0, 2.0, 3.0]);
        let g: GridSpec = serde_json::from_str("[1, 4]").unwrap();
        assert_eq!(g.values().unwrap(), vec![1.0, 4.0]);
        let g: GridSpec = serde_json::from_str("[4, 1]").unwrap();
        assert!(g.values().is_err());
    }
}

//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//!
//! [grid]
//! ds = 0.5
//! bins = 128
//!
//! [initial]
//! kind = "monodisperse"
//! mass = 1.5
//! size = 1.0
//!
//! [kernel]
//! eps = 0.01
//!
//! [solver]
//! dt = 5e-4
//! t_end = 0.5
//!
//! [outputs]
//! dir = "out"
//! stride = 20
//! ```
//!
//! `stochastic`, `characteristics` and `convergence` sections are optional
//! and only read by the matching subcommand. The scenario (mass, `T*`) is
//! derived from the discretized initial data.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::characteristics::FanSettings;
use crate::error::{ModelError, SolverError};
use crate::experiment::ConvergenceSetup;
use crate::kinetic::SolverConfig;
use crate::model::{make_initial, Distribution, InitialProfile, KernelSpec, ScenarioParams, SizeGrid};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Unreadable { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Model(#[from] ModelError),
    #[error("invalid config: {0}")]
    Solver(#[from] SolverError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub ds: f64,
    pub bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub eps: f64,
    /// Defaults to the number of bins.
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Snapshot every `stride` solver steps.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_stride() -> usize {
    10
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self { dir: default_dir(), stride: default_stride() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticSection {
    pub replicas: usize,
    /// Initial particle count; sets the system volume.
    #[serde(default = "default_particles")]
    pub particles: f64,
    pub times: Vec<f64>,
}

fn default_particles() -> f64 {
    crate::stochastic::DEFAULT_PARTICLES
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicsSection {
    #[serde(default = "default_paths")]
    pub paths: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Right end of the x-range that must stay covered.
    #[serde(default = "default_x_hi")]
    pub x_hi: f64,
    /// Times at which the reconstructed field is exported.
    #[serde(default)]
    pub field_times: Vec<f64>,
    #[serde(default = "default_x_points")]
    pub x_points: usize,
}

fn default_paths() -> usize {
    2000
}

fn default_x_hi() -> f64 {
    5.0
}

fn default_x_points() -> usize {
    46
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub eps: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub t_max: f64,
    #[serde(default = "default_x_points")]
    pub x_points: usize,
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Step of the characteristics integration; defaults to the solver step.
    pub fan_dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSection,
    pub initial: InitialProfile,
    pub kernel: KernelSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub outputs: OutputsSection,
    pub stochastic: Option<StochasticSection>,
    pub characteristics: Option<CharacteristicsSection>,
    pub convergence: Option<ConvergenceSection>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Unreadable { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.initial_distribution()?;
        self.solver_config()?;
        if let Some(s) = &self.stochastic {
            if s.replicas < 2 || !(s.particles >= 1.0) || s.times.is_empty() {
                return Err(ConfigError::Invalid("stochastic: need replicas >= 2, particles >= 1, times".into()));
            }
        }
        if let Some(c) = &self.characteristics {
            if c.paths == 0 || !(c.dt > 0.0) || !(c.t_end >= 0.0) || c.x_points < 2 {
                return Err(ConfigError::Invalid("characteristics: need paths >= 1, dt > 0, t_end >= 0, x_points >= 2".into()));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<SizeGrid, ConfigError> {
        Ok(SizeGrid::new(self.grid.ds, self.grid.bins)?)
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec, ConfigError> {
        let grid = self.grid()?;
        Ok(match self.kernel.truncation {
            Some(t) => KernelSpec::new(self.kernel.eps, t)?,
            None => KernelSpec::for_grid(self.kernel.eps, &grid)?,
        })
    }

    pub fn initial_distribution(&self) -> Result<Distribution, ConfigError> {
        Ok(make_initial(&self.initial, self.grid()?)?)
    }

    pub fn scenario(&self) -> Result<ScenarioParams, ConfigError> {
        Ok(ScenarioParams::from_distribution(&self.initial_distribution()?)?)
    }

    pub fn solver_config(&self) -> Result<SolverConfig, ConfigError> {
        Ok(SolverConfig::new(
            self.solver.dt,
            self.solver.t_end,
            self.outputs.stride,
            self.kernel_spec()?,
            self.scenario()?,
        )?)
    }

    pub fn convergence_setup(&self) -> Result<Option<ConvergenceSetup>, ConfigError> {
        let Some(c) = &self.convergence else {
            return Ok(None);
        };
        Ok(Some(ConvergenceSetup {
            eps: c.eps.clone(),
            initial: self.initial.clone(),
            grid: self.grid()?,
            dt: self.solver.dt,
            output_every: self.outputs.stride,
            x_window: (c.x_min, c.x_max),
            t_max: c.t_max,
            x_points: c.x_points,
            fan: FanSettings { paths: c.paths, dt: c.fan_dt.unwrap_or(self.solver.dt), x_hi: c.x_max },
        }))
    }
}

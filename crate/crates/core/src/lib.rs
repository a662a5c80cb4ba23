//! Numerical laboratory for the coagulation-fragmentation equation with
//! multiplicative coagulation and (perturbed) constant fragmentation.

pub mod bernstein;
pub mod characteristics;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod kinetic;
pub mod model;
pub mod numerics;
pub mod stochastic;
pub mod verification;

pub use error::{AnalysisError, ModelError, SolverError, StochasticError};
pub use model::{Distribution, InitialProfile, KernelSpec, MomentOrder, MomentSeries, ScenarioParams, SizeGrid};

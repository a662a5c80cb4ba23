//! The vanishing-perturbation experiment: kinetic runs for a decreasing list
//! of `eps`, each compared in sup norm against the characteristics solution
//! of the limiting equation over a common `(x, t)` window.

use rayon::prelude::*;
use thiserror::Error;

use crate::bernstein::transform;
use crate::characteristics::{fan_starts, integrate_fan, CharacteristicFan, FanSettings};
use crate::error::{AnalysisError, CharacteristicsError, ModelError, SolverError};
use crate::kinetic::{simulate, stability_limit, SolverConfig};
use crate::model::{make_initial, Distribution, InitialProfile, KernelSpec, ScenarioParams, SizeGrid};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(
        "fan does not cover x = {x} at t = {t} (reach [{lo}, {hi}]); starts must span ({min_first}, {max_first}] on the left and reach at least {min_last}"
    )]
    Coverage {
        x: f64,
        t: f64,
        lo: f64,
        hi: f64,
        min_first: f64,
        max_first: f64,
        min_last: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Characteristics(CharacteristicsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSetup {
    /// Strictly decreasing, at least three entries.
    pub eps: Vec<f64>,
    pub initial: InitialProfile,
    pub grid: SizeGrid,
    /// Requested kinetic step; lowered to the stability guard when needed.
    pub dt: f64,
    pub output_every: usize,
    pub x_window: (f64, f64),
    pub t_max: f64,
    pub x_points: usize,
    pub fan: FanSettings,
}

impl ConvergenceSetup {
    /// Monodisperse unit mass at size 1 on `ds = 1/16` up to size 32, window
    /// `x in [0.5, 5]`, `t in [0, 0.3]`.
    pub fn standard(eps: Vec<f64>) -> Self {
        Self {
            eps,
            initial: InitialProfile::Monodisperse { mass: 1.0, size: 1.0 },
            grid: SizeGrid::new(1.0 / 16.0, 512).expect("valid grid"),
            dt: 5e-4,
            output_every: 20,
            x_window: (0.5, 5.0),
            t_max: 0.3,
            x_points: 46,
            fan: FanSettings { paths: 2000, dt: 5e-4, x_hi: 5.0 },
        }
    }
}

/// Sup-norm gap for one `eps` and where it was attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceGap {
    pub eps: f64,
    pub gap: f64,
    pub x: f64,
    pub t: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceOutcome {
    pub gaps: Vec<ConvergenceGap>,
    /// First consecutive pair `(i, i+1)` whose gap does not decrease.
    pub offending: Option<(usize, usize)>,
}

impl ConvergenceOutcome {
    pub fn strictly_decreasing(&self) -> bool {
        self.offending.is_none()
    }
}

fn validate(setup: &ConvergenceSetup) -> Result<(), ExperimentError> {
    if setup.eps.len() < 3 {
        return Err(ExperimentError::Usage(format!("need at least 3 eps values, got {}", setup.eps.len())));
    }
    if setup.eps.iter().any(|e| !(*e > 0.0)) || setup.eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ExperimentError::Usage("eps values must be positive and strictly decreasing".into()));
    }
    let (lo, hi) = setup.x_window;
    if !(lo > 0.0 && hi > lo && setup.t_max > 0.0 && setup.x_points >= 2) {
        return Err(ExperimentError::Usage("empty (x, t) window".into()));
    }
    Ok(())
}

fn window_points(setup: &ConvergenceSetup) -> Vec<f64> {
    let (lo, hi) = setup.x_window;
    let n = setup.x_points - 1;
    (0..=n).map(|k| if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 }).collect()
}

fn coverage_error(e: CharacteristicsError, m: f64, setup: &ConvergenceSetup) -> ExperimentError {
    match e {
        CharacteristicsError::CoverageGap { x, t, lo, hi } => {
            let drift = (m + 0.5) * setup.t_max;
            ExperimentError::Coverage {
                x,
                t,
                lo,
                hi,
                min_first: drift,
                max_first: setup.x_window.0,
                min_last: setup.x_window.1 + drift,
            }
        }
        other => ExperimentError::Characteristics(other),
    }
}

/// The limiting solution for the setup's initial data.
pub fn limit_fan(setup: &ConvergenceSetup, initial: &Distribution) -> Result<CharacteristicFan, ExperimentError> {
    let m = initial.mass();
    let starts = fan_starts(m, setup.t_max, setup.fan.x_hi.max(setup.x_window.1), setup.fan.paths);
    integrate_fan(initial, &starts, setup.t_max, setup.fan.dt, m).map_err(ExperimentError::Characteristics)
}

/// Gap for a single `eps` against a precomputed fan.
pub fn gap_for_eps(
    setup: &ConvergenceSetup,
    initial: &Distribution,
    fan: &CharacteristicFan,
    eps: f64,
) -> Result<ConvergenceGap, ExperimentError> {
    let scenario = ScenarioParams::from_distribution(initial)?;
    let spec = KernelSpec::for_grid(eps, &setup.grid)?;
    let dt = setup.dt.min(stability_limit(&setup.grid, scenario.mass(), &spec));
    let config = SolverConfig::new(dt, setup.t_max, setup.output_every, spec, scenario)?;
    let traj = simulate(&config, initial)?;
    let xs = window_points(setup);
    let mut best = ConvergenceGap { eps, gap: 0.0, x: f64::NAN, t: f64::NAN, dt };
    for (t, dist) in &traj.snapshots {
        let field = transform(dist, &xs, *t)?;
        for (k, &x) in xs.iter().enumerate() {
            let limit = fan.reconstruct(x, *t).map_err(|e| coverage_error(e, scenario.mass(), setup))?;
            let d = (field.f[0][k] - limit).abs();
            if d > best.gap || best.x.is_nan() {
                best = ConvergenceGap { eps, gap: d, x, t: *t, dt };
            }
        }
    }
    Ok(best)
}

/// Runs the whole sweep; the kinetic runs execute concurrently.
pub fn run_convergence(setup: &ConvergenceSetup) -> Result<ConvergenceOutcome, ExperimentError> {
    validate(setup)?;
    let initial = make_initial(&setup.initial, setup.grid)?;
    let t_star = 1.0 / initial.moments()[2];
    if setup.t_max >= t_star {
        return Err(ExperimentError::Usage(format!("t_max = {} must lie below T* = {t_star}", setup.t_max)));
    }
    let fan = limit_fan(setup, &initial)?;
    let m = initial.mass();
    // coverage of the window over its whole time range, before any kinetic work
    for (j, &t) in fan.times.iter().enumerate() {
        let (lo, hi) = fan.reach(j).unwrap_or((f64::NAN, f64::NAN));
        for x in [setup.x_window.0, setup.x_window.1] {
            if !(x >= lo && x <= hi) {
                return Err(coverage_error(CharacteristicsError::CoverageGap { x, t, lo, hi }, m, setup));
            }
        }
    }
    let gaps = setup
        .eps
        .par_iter()
        .map(|&eps| gap_for_eps(setup, &initial, &fan, eps))
        .collect::<Result<Vec<_>, _>>()?;
    let offending = gaps.windows(2).position(|w| w[1].gap >= w[0].gap).map(|i| (i, i + 1));
    Ok(ConvergenceOutcome { gaps, offending })
}

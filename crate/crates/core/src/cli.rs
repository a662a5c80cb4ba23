//! Command-line front end: `cf-lab <simulate|verify|convergence|characteristics|stochastic> --config PATH`.
//!
//! Exit codes: 0 success, 1 solver abort, 2 bound violation, 3 insufficient
//! fan coverage, 64 usage or configuration error, 65 unparsable artifact,
//! 66 missing artifact.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::bernstein::{
    complete_monotonicity_report, default_x_grid, field_monotonicity_report, hj_residual_grid, max_abs_g,
    BernsteinField, MonotonicitySource, EXACT_MONOTONICITY_TOL,
};
use crate::characteristics::{fan_starts, integrate_fan, monotone_derivative_checks};
use crate::config::{ConfigError, ExperimentConfig};
use crate::error::{CharacteristicsError, SolverError, StochasticError};
use crate::experiment::{run_convergence, ExperimentError};
use crate::io::{self, IoError};
use crate::kinetic::{simulate, MASS_DRIFT_LIMIT};
use crate::stochastic::ensemble_moments;
use crate::verification::{
    a_priori_cap_check, derivative_bounds_check, envelope_rows, holder_bounds_check, monotonicity_bound_report,
    BoundReport, BoundTracker, DERIVATIVE_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER_ABORT: i32 = 1;
pub const EXIT_BOUND_VIOLATION: i32 = 2;
pub const EXIT_COVERAGE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_PARSE: i32 = 65;
pub const EXIT_MISSING: i32 = 66;

/// Residual threshold reported by `verify` and `characteristics`.
pub const RESIDUAL_LIMIT: f64 = 1e-2;
/// Largest x at which `verify` evaluates residuals.
pub const RESIDUAL_X_MAX: f64 = 5.0;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SNAPSHOT_FILE: &str = "snapshots.csv";
pub const FIELD_FILE: &str = "field.csv";
pub const REPORT_FILE: &str = "verify_report.csv";
pub const FAN_FILE: &str = "fan.csv";
pub const FAN_FIELD_FILE: &str = "fan_field.csv";
pub const FAN_REPORT_FILE: &str = "characteristics_report.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const ENSEMBLE_FILE: &str = "ensemble.csv";

#[derive(Debug, Parser)]
#[command(name = "cf-lab", version, about = "Coagulation-fragmentation numerical laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `outputs.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed; overrides `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Only print errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the kinetic solver and write trajectory and snapshot CSVs.
    Simulate,
    /// Check every bound on the artifacts of a previous `simulate`.
    Verify,
    /// Sweep eps and measure the distance to the limiting solution.
    Convergence,
    /// Integrate and export a characteristics fan.
    Characteristics,
    /// Run a stochastic ensemble and export moment statistics.
    Stochastic,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("solver aborted: {0}")]
    Solver(#[from] SolverError),
    #[error("stochastic run failed: {0}")]
    Stochastic(#[from] StochasticError),
    #[error(transparent)]
    Characteristics(#[from] CharacteristicsError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{0}")]
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Io(IoError::Missing(_)) => EXIT_MISSING,
            CliError::Io(IoError::Parse { .. } | IoError::Read { .. }) => EXIT_PARSE,
            CliError::Io(IoError::Write { .. }) => EXIT_USAGE,
            CliError::Solver(_) | CliError::Stochastic(_) => EXIT_SOLVER_ABORT,
            CliError::Characteristics(e) => characteristics_code(e),
            CliError::Experiment(e) => match e {
                ExperimentError::Usage(_) | ExperimentError::Model(_) => EXIT_USAGE,
                ExperimentError::Coverage { .. } => EXIT_COVERAGE,
                ExperimentError::Characteristics(e) => characteristics_code(e),
                ExperimentError::Solver(_) | ExperimentError::Analysis(_) => EXIT_SOLVER_ABORT,
            },
            CliError::Violation(_) => EXIT_BOUND_VIOLATION,
        }
    }
}

fn characteristics_code(e: &CharacteristicsError) -> i32 {
    match e {
        CharacteristicsError::CoverageGap { .. } => EXIT_COVERAGE,
        CharacteristicsError::SingularBoundary(_) | CharacteristicsError::Crossing { .. } => EXIT_SOLVER_ABORT,
        _ => EXIT_USAGE,
    }
}

struct Context {
    cfg: ExperimentConfig,
    out: PathBuf,
    seed: u64,
    quiet: bool,
}

impl Context {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn ensure_out(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", self.out.display())))
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("CF_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CF_LAB_THREADS must be a positive integer, got {raw:?}")))?;
    // a pool may already exist when called repeatedly in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("cf-lab: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
    let cfg = ExperimentConfig::load(path)?;
    let ctx = Context {
        out: cli.out.clone().unwrap_or_else(|| cfg.outputs.dir.clone()),
        seed: cli.seed.unwrap_or(cfg.seed),
        quiet: cli.quiet,
        cfg,
    };
    match cli.command {
        Command::Simulate => cmd_simulate(&ctx),
        Command::Verify => cmd_verify(&ctx),
        Command::Convergence => cmd_convergence(&ctx),
        Command::Characteristics => cmd_characteristics(&ctx),
        Command::Stochastic => cmd_stochastic(&ctx),
    }
}

fn cmd_simulate(ctx: &Context) -> Result<(), CliError> {
    let config = ctx.cfg.solver_config()?;
    let initial = ctx.cfg.initial_distribution()?;
    let grid = *initial.grid();
    if !config.within_stability_guard(&grid) {
        ctx.say(format!(
            "warning: dt = {} exceeds the stability guard {:.3e}",
            config.dt,
            config.stability_limit(&grid)
        ));
    }
    let traj = simulate(&config, &initial)?;
    ctx.ensure_out()?;
    io::write_trajectory(&ctx.path(TRAJECTORY_FILE), &traj)?;
    io::write_snapshots(&ctx.path(SNAPSHOT_FILE), &traj)?;
    ctx.say(format!(
        "simulated to t = {} in {} snapshots; mass_drift = {:.3e} (limit {:.0e}); top_bin_occupancy = {:.3e}",
        config.t_end,
        traj.snapshots.len(),
        traj.max_mass_drift(),
        MASS_DRIFT_LIMIT,
        traj.max_top_bin_occupancy()
    ));
    if traj.truncation_flagged() {
        ctx.say("warning: truncation bin occupancy above 1e-9; enlarge the grid");
    }
    if traj.mass_drift_flagged() {
        return Err(CliError::Violation(format!(
            "mass drift {:.3e} exceeds {:.0e}",
            traj.max_mass_drift(),
            MASS_DRIFT_LIMIT
        )));
    }
    Ok(())
}

fn fraction_report(name: &str, value: f64, limit: f64, t: f64, x_or_k: f64, tolerance: f64) -> BoundReport {
    let mut tracker = BoundTracker::new(name, tolerance);
    tracker.observe(1.0 - value / limit, t, x_or_k);
    tracker.finish()
}

/// All checks applicable to a finished kinetic run.
pub fn verify_artifacts(
    cfg: &ExperimentConfig,
    table: &io::TrajectoryTable,
    snapshots: &[(f64, crate::model::Distribution)],
) -> Result<(Vec<BoundReport>, BernsteinField, Option<Vec<Vec<f64>>>), CliError> {
    let scenario = cfg.scenario()?;
    let eps = cfg.kernel.eps;
    let m = scenario.mass();
    let t_star = scenario.t_star();
    let mut reports = Vec::new();

    let (drift_t, drift) = table
        .times
        .iter()
        .zip(&table.mass_drift)
        .fold((0.0, 0.0), |acc, (&t, &d)| if d > acc.1 { (t, d) } else { acc });
    reports.push(fraction_report("mass_conservation", drift, MASS_DRIFT_LIMIT, drift_t, 1.0, 0.0));

    let m2: Vec<f64> = table.moments.iter().map(|m| m[2]).collect();
    let below: Vec<usize> = (0..table.times.len()).filter(|&i| table.times[i] < t_star).collect();
    let times_below: Vec<f64> = below.iter().map(|&i| table.times[i]).collect();
    let m2_below: Vec<f64> = below.iter().map(|&i| m2[i]).collect();
    reports.extend(envelope_rows(&times_below, &m2_below, scenario.m2_0()).map_err(|e| CliError::Usage(e.to_string()))?);
    reports.push(holder_bounds_check(&table.times, &table.moments));
    if eps > 0.0 {
        reports.push(a_priori_cap_check(&table.times, &table.moments, m, eps).map_err(|e| CliError::Usage(e.to_string()))?);
    }

    let x_grid = default_x_grid(60);
    let mut exact = BoundTracker::new("complete_monotonicity_exact", EXACT_MONOTONICITY_TOL * m);
    for (t, d) in snapshots {
        let r = complete_monotonicity_report(MonotonicitySource::Exact(d), 6, &x_grid)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(w) = r.worst {
            exact.observe(w.value, *t, w.k as f64);
        }
    }
    let exact = exact.finish();
    reports.push(exact);

    let field = BernsteinField::from_distributions(snapshots.iter().map(|(t, d)| (*t, d)), &x_grid)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let horizon = field.times.iter().copied().filter(|&t| t < t_star).fold(0.0, f64::max);
    let window = field.restrict_times(horizon);
    reports.extend(derivative_bounds_check(&window, &scenario, horizon).map_err(|e| CliError::Usage(e.to_string()))?);
    if eps > 0.0 {
        let bound = 3.0 / (t_star - horizon);
        reports.push(fraction_report("g_eps_bound", max_abs_g(&window, m), bound, horizon, f64::NAN, DERIVATIVE_TOL));
    }

    let residual = hj_residual_grid(&field, &scenario, eps).ok();
    if let Some(grid) = &residual {
        let mut tracker = BoundTracker::new("hj_residual", 0.0);
        for (ti, row) in grid.iter().enumerate() {
            for (xi, r) in row.iter().enumerate() {
                let x = field.x_grid[xi];
                if r.is_nan() || x > RESIDUAL_X_MAX || field.times[ti] >= t_star {
                    continue;
                }
                tracker.observe(RESIDUAL_LIMIT - r.abs(), field.times[ti], x);
            }
        }
        reports.push(tracker.finish());
    }
    Ok((reports, field, residual))
}

fn finish_reports(ctx: &Context, reports: &[BoundReport], file: &str) -> Result<(), CliError> {
    io::write_report(&ctx.path(file), reports)?;
    let failed: Vec<&BoundReport> = reports.iter().filter(|r| !r.passed()).collect();
    for r in &failed {
        ctx.say(format!("FAIL {}: margin {:.3e} at t = {}, x_or_k = {}", r.name, r.worst_margin, r.t, r.x_or_k));
    }
    ctx.say(format!("{} checks, {} failed", reports.len(), failed.len()));
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Violation(format!("{} bound check(s) failed", failed.len())))
    }
}

fn cmd_verify(ctx: &Context) -> Result<(), CliError> {
    let table = io::read_trajectory(&ctx.path(TRAJECTORY_FILE))?;
    let snapshots = io::read_snapshots(&ctx.path(SNAPSHOT_FILE), ctx.cfg.grid()?)?;
    let (reports, field, residual) = verify_artifacts(&ctx.cfg, &table, &snapshots)?;
    io::write_field(&ctx.path(FIELD_FILE), &field, residual.as_deref())?;
    finish_reports(ctx, &reports, REPORT_FILE)
}

fn cmd_convergence(ctx: &Context) -> Result<(), CliError> {
    let setup = ctx
        .cfg
        .convergence_setup()?
        .ok_or_else(|| CliError::Usage("config has no [convergence] section".into()))?;
    let outcome = run_convergence(&setup)?;
    ctx.ensure_out()?;
    io::write_convergence(&ctx.path(CONVERGENCE_FILE), &outcome.gaps)?;
    for g in &outcome.gaps {
        ctx.say(format!("eps = {}: gap = {:.6e} at x = {}, t = {}", g.eps, g.gap, g.x, g.t));
    }
    match outcome.offending {
        None => Ok(()),
        Some((i, j)) => Err(CliError::Violation(format!(
            "gaps not strictly decreasing: eps = {} gives {:.6e}, eps = {} gives {:.6e}",
            outcome.gaps[i].eps, outcome.gaps[i].gap, outcome.gaps[j].eps, outcome.gaps[j].gap
        ))),
    }
}

fn cmd_characteristics(ctx: &Context) -> Result<(), CliError> {
    let section = ctx
        .cfg
        .characteristics
        .as_ref()
        .ok_or_else(|| CliError::Usage("config has no [characteristics] section".into()))?;
    let initial = ctx.cfg.initial_distribution()?;
    let m = initial.mass();
    let starts = fan_starts(m, section.t_end, section.x_hi, section.paths);
    let fan = integrate_fan(&initial, &starts, section.t_end, section.dt, m)?;
    ctx.ensure_out()?;
    io::write_fan(&ctx.path(FAN_FILE), &fan)?;

    let mut reports = monotone_derivative_checks(&fan);
    let times = if section.field_times.is_empty() {
        vec![0.0, 0.5 * section.t_end, section.t_end]
    } else {
        section.field_times.clone()
    };
    // the left edge only moves left, so the first start is covered at all times
    let lo = fan.starts[0];
    let n = section.x_points - 1;
    let xs: Vec<f64> = (0..=n).map(|k| lo + (section.x_hi - lo) * k as f64 / n as f64).collect();
    let field = fan.reconstruct_field(&xs, &times)?;
    let scenario = ctx.cfg.scenario()?;
    let residual = hj_residual_grid(&field, &scenario, 0.0).ok();
    io::write_field(&ctx.path(FAN_FIELD_FILE), &field, residual.as_deref())?;

    let mono = field_monotonicity_report(&field, m, 4).map_err(|e| CliError::Usage(e.to_string()))?;
    reports.push(monotonicity_bound_report("complete_monotonicity_sampled", &mono));
    ctx.say(format!(
        "{} paths to t = {}; reach at t_end = {:?}; compression = {:.3}",
        fan.paths.len(),
        section.t_end,
        fan.reach(fan.times.len() - 1),
        fan.compression()
    ));
    finish_reports(ctx, &reports, FAN_REPORT_FILE)
}

fn cmd_stochastic(ctx: &Context) -> Result<(), CliError> {
    let section = ctx
        .cfg
        .stochastic
        .as_ref()
        .ok_or_else(|| CliError::Usage("config has no [stochastic] section".into()))?;
    let initial = ctx.cfg.initial_distribution()?;
    let spec = ctx.cfg.kernel_spec()?;
    let volume = section.particles / initial.moments()[0];
    let ens = ensemble_moments(&initial, volume, &spec, &section.times, section.replicas, ctx.seed)?;
    ctx.ensure_out()?;
    io::write_ensemble(&ctx.path(ENSEMBLE_FILE), &ens)?;
    let last = ens.times.len() - 1;
    ctx.say(format!(
        "{} replicas; mean m2({}) = {:.6} +- {:.2e}",
        ens.replicas, ens.times[last], ens.mean[last][2], ens.stderr[last][2]
    ));
    Ok(())
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid size grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("expected {expected} bin counts, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("bin {bin} holds invalid count {value}")]
    InvalidCount { bin: usize, value: f64 },
    #[error("distributions live on different grids")]
    GridMismatch,
    #[error("moment order {0} exceeds the supported maximum of 5")]
    MomentOrder(usize),
    #[error("size {size} is not a grid point (ds = {ds}, max = {max})")]
    Unrepresentable { size: f64, ds: f64, max: f64 },
    #[error("grid too small: relative tail mass {tail:e} above the last bin")]
    GridTooSmall { tail: f64 },
    #[error("time {next} does not follow {previous}")]
    NonMonotoneTime { previous: f64, next: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("bin {bin} went negative ({value:e}) at t = {t}; time step too large")]
    NegativeCount { bin: usize, value: f64, t: f64 },
    #[error("non-finite value in bin {bin} at t = {t}")]
    NonFinite { bin: usize, t: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("weak-form residual needs at least 3 snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochasticError {
    #[error("particle system is empty")]
    Empty,
    #[error("no admissible event: the system is absorbed")]
    Absorbed,
    #[error("invalid stochastic setup: {0}")]
    InvalidSetup(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid x-grid: {0}")]
    InvalidGrid(String),
    #[error("need at least {needed} snapshots, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },
    #[error("finite-difference monotonicity is limited to order 4, requested {0}")]
    OrderTooHigh(usize),
    #[error("horizon T = {t} must lie below T* = {t_star}")]
    BeyondHorizon { t: f64, t_star: f64 },
    #[error("field time {t} lies outside [0, {limit}]")]
    TimeOutsideWindow { t: f64, limit: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CharacteristicsError {
    #[error("characteristic reached the singular boundary (X = {0})")]
    SingularBoundary(f64),
    #[error("initial slope {slope} at x = {x} lies outside [0, {m}]")]
    InvalidInitialSlope { x: f64, slope: f64, m: f64 },
    #[error("invalid fan setup: {0}")]
    InvalidSetup(String),
    #[error("final time {t_end} must lie below T* = {t_star}")]
    BeyondHorizon { t_end: f64, t_star: f64 },
    #[error("x = {x} outside the fan's reach [{lo}, {hi}] at t = {t}")]
    CoverageGap { x: f64, t: f64, lo: f64, hi: f64 },
    #[error("time {t} outside the fan's range [0, {t_end}]")]
    TimeOutOfRange { t: f64, t_end: f64 },
    #[error("characteristics crossed at t = {t} between starts {a} and {b}")]
    Crossing { t: f64, a: f64, b: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerificationError {
    #[error("t = {t} is at or beyond T* = {t_star}")]
    BeyondHorizon { t: f64, t_star: f64 },
    #[error("no a-priori cap without fragmentation perturbation (eps = 0)")]
    NoCap,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

//! Deterministic solver for the truncated coagulation-fragmentation system.
//!
//! Coagulation merges bins `i + j = k` at rate `s_i s_j N_i N_j` and is
//! suppressed whenever `i + j` exceeds the truncation index. Fragmentation is
//! binary and lives on the integer grid: a parent in bin `j` splits into the
//! ordered pair `(k, j - k)`, `k = 1..j-1`, at rate `ds/2 * b(s_k, s_{j-k})`.
//! Both terms conserve `sum_k s_k N_k` exactly in exact arithmetic.
//!
//! Time integration is classical fourth-order Runge-Kutta with a fixed step.

use crate::error::SolverError;
use crate::model::{coag_kernel, frag_kernel, Distribution, KernelSpec, MomentSeries, ScenarioParams, SizeGrid};
use crate::numerics::centered_derivative;

/// Relative floor below which a negative count is roundoff and gets clipped.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// Mass drift above which a trajectory is flagged.
pub const MASS_DRIFT_LIMIT: f64 = 1e-6;

/// Top-bin mass fraction above which truncation is considered active.
pub const TOP_BIN_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Record a snapshot every `output_every` steps (and always at `t_end`).
    pub output_every: usize,
    pub spec: KernelSpec,
    pub scenario: ScenarioParams,
}

impl SolverConfig {
    pub fn new(
        dt: f64,
        t_end: f64,
        output_every: usize,
        spec: KernelSpec,
        scenario: ScenarioParams,
    ) -> Result<Self, SolverError> {
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(SolverError::InvalidConfig(format!("dt must be >= 0, got {dt}")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(SolverError::InvalidConfig(format!("t_end must be >= 0, got {t_end}")));
        }
        if t_end > 0.0 && dt == 0.0 {
            return Err(SolverError::InvalidConfig("dt = 0 with t_end > 0".into()));
        }
        if output_every == 0 {
            return Err(SolverError::InvalidConfig("output_every must be >= 1".into()));
        }
        Ok(Self {
            dt,
            t_end,
            output_every,
            spec,
            scenario,
        })
    }

    /// Largest step allowed by the explicit stability guard
    /// `0.1 / max_i [s_i m_1 + s_i (1 + eps s_i) / 2]`.
    pub fn stability_limit(&self, grid: &SizeGrid) -> f64 {
        stability_limit(grid, self.scenario.mass(), &self.spec)
    }

    pub fn within_stability_guard(&self, grid: &SizeGrid) -> bool {
        self.dt <= self.stability_limit(grid)
    }

    /// Whether the run stays strictly below `T*`.
    pub fn below_horizon(&self) -> bool {
        self.t_end < self.scenario.t_star()
    }
}

/// Stability guard for a grid, mass and kernel.
pub fn stability_limit(grid: &SizeGrid, mass: f64, spec: &KernelSpec) -> f64 {
    let eps = spec.frag_eps();
    let fastest = (1..=grid.bins())
        .map(|i| {
            let s = grid.size(i);
            s * mass + 0.5 * s * (1.0 + eps * s)
        })
        .fold(0.0, f64::max);
    0.1 / fastest
}

/// Time-ordered snapshots with their moment series.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub snapshots: Vec<(f64, Distribution)>,
    pub moments: MomentSeries,
    /// Mass fraction `s_T N_T / m_1(0)` in the truncation bin per snapshot.
    pub top_bin_occupancy: Vec<f64>,
}

impl Trajectory {
    /// Assembles a trajectory from existing snapshots (e.g. read back from CSV).
    pub fn from_snapshots(config: SolverConfig, snapshots: Vec<(f64, Distribution)>) -> Result<Self, SolverError> {
        let mut moments = MomentSeries::new();
        let mut top = Vec::with_capacity(snapshots.len());
        let m1_0 = snapshots.first().map(|(_, d)| d.mass()).unwrap_or(0.0);
        for (t, d) in &snapshots {
            moments.push(*t, d.moments())?;
            top.push(top_bin_fraction(d, &config.spec, m1_0));
        }
        Ok(Self {
            config,
            snapshots,
            moments,
            top_bin_occupancy: top,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(t, _)| *t).collect()
    }

    pub fn final_distribution(&self) -> &Distribution {
        &self.snapshots.last().expect("trajectory is never empty").1
    }

    pub fn max_mass_drift(&self) -> f64 {
        self.moments.max_mass_drift()
    }

    pub fn mass_drift_flagged(&self) -> bool {
        self.max_mass_drift() > MASS_DRIFT_LIMIT
    }

    pub fn max_top_bin_occupancy(&self) -> f64 {
        self.top_bin_occupancy.iter().copied().fold(0.0, f64::max)
    }

    pub fn truncation_flagged(&self) -> bool {
        self.max_top_bin_occupancy() > TOP_BIN_LIMIT
    }
}

fn top_bin_fraction(dist: &Distribution, spec: &KernelSpec, m1_0: f64) -> f64 {
    if m1_0 <= 0.0 {
        return 0.0;
    }
    let cap = spec.cap(dist.grid());
    dist.grid().size(cap) * dist.counts()[cap - 1] / m1_0
}

fn coagulation_into(grid: &SizeGrid, cap: usize, counts: &[f64], weighted: &mut Vec<f64>, prefix: &mut Vec<f64>, out: &mut [f64]) {
    let n = grid.bins();
    // a(s_i, s_j) N_i N_j = (s_i N_i)(s_j N_j)
    weighted.clear();
    weighted.extend(counts.iter().enumerate().map(|(i, c)| grid.size(i + 1) * c));
    prefix.clear();
    prefix.push(0.0);
    let mut acc = 0.0;
    for w in weighted.iter() {
        acc += w;
        prefix.push(acc);
    }
    for k in 1..=n {
        let mut gain = 0.0;
        if k <= cap {
            let mut i = 1;
            while 2 * i < k {
                gain += weighted[i - 1] * weighted[k - i - 1];
                i += 1;
            }
            if k % 2 == 0 {
                let w = weighted[k / 2 - 1];
                gain += 0.5 * w * w;
            }
        }
        let loss = if k < cap { weighted[k - 1] * prefix[cap - k] } else { 0.0 };
        out[k - 1] = gain - loss;
    }
}

fn fragmentation_into(grid: &SizeGrid, spec: &KernelSpec, counts: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    if !spec.fragmentation_enabled() {
        return;
    }
    let cap = spec.cap(grid);
    let ds = grid.ds();
    // b(s_k, s_{j-k}) depends only on s_j, so the split sum over k is (j-1) b_j
    // and the gain at bin k is a suffix sum over parents j > k.
    let mut suffix = 0.0;
    for j in (1..=cap).rev() {
        let b_j = frag_kernel(spec, grid.size(j) - grid.size(1), grid.size(1));
        out[j - 1] += ds * suffix - 0.5 * ds * (j - 1) as f64 * b_j * counts[j - 1];
        suffix += b_j * counts[j - 1];
    }
}

/// Per-bin coagulation rate with the truncated kernel.
pub fn coagulation_rhs(dist: &Distribution, spec: &KernelSpec) -> Vec<f64> {
    let grid = dist.grid();
    let mut out = vec![0.0; grid.bins()];
    coagulation_into(grid, spec.cap(grid), dist.counts(), &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Per-bin discrete binary fragmentation rate.
pub fn fragmentation_rhs(dist: &Distribution, spec: &KernelSpec) -> Vec<f64> {
    let grid = dist.grid();
    let mut out = vec![0.0; grid.bins()];
    fragmentation_into(grid, spec, dist.counts(), &mut out);
    out
}

/// Reusable buffers for repeated right-hand-side evaluations.
struct Workspace {
    grid: SizeGrid,
    spec: KernelSpec,
    weighted: Vec<f64>,
    prefix: Vec<f64>,
    frag: Vec<f64>,
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
}

impl Workspace {
    fn new(grid: SizeGrid, spec: KernelSpec) -> Self {
        let n = grid.bins();
        Self {
            grid,
            spec,
            weighted: Vec::with_capacity(n),
            prefix: Vec::with_capacity(n + 1),
            frag: vec![0.0; n],
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            stage: vec![0.0; n],
        }
    }

    fn rhs(&mut self, y: &[f64], which: usize) {
        let cap = self.spec.cap(&self.grid);
        let mut out = std::mem::take(&mut self.k[which]);
        coagulation_into(&self.grid, cap, y, &mut self.weighted, &mut self.prefix, &mut out);
        fragmentation_into(&self.grid, &self.spec, y, &mut self.frag);
        for (o, f) in out.iter_mut().zip(&self.frag) {
            *o += f;
        }
        self.k[which] = out;
    }

    /// One RK4 step from `y` into `next`; validates and clips the result.
    fn advance(&mut self, y: &[f64], dt: f64, t: f64, next: &mut Vec<f64>) -> Result<(), SolverError> {
        next.clear();
        if dt == 0.0 {
            next.extend_from_slice(y);
            return Ok(());
        }
        self.rhs(y, 0);
        for i in 0..y.len() {
            self.stage[i] = y[i] + 0.5 * dt * self.k[0][i];
        }
        let stage = std::mem::take(&mut self.stage);
        self.rhs(&stage, 1);
        let mut stage = stage;
        for i in 0..y.len() {
            stage[i] = y[i] + 0.5 * dt * self.k[1][i];
        }
        self.rhs(&stage, 2);
        for i in 0..y.len() {
            stage[i] = y[i] + dt * self.k[2][i];
        }
        self.rhs(&stage, 3);
        self.stage = stage;

        let floor = -NEGATIVE_TOLERANCE * y.iter().copied().fold(0.0, f64::max);
        for i in 0..y.len() {
            let v = y[i] + dt / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
            if !v.is_finite() {
                return Err(SolverError::NonFinite { bin: i + 1, t: t + dt });
            }
            if v < 0.0 {
                if v < floor {
                    return Err(SolverError::NegativeCount { bin: i + 1, value: v, t: t + dt });
                }
                next.push(0.0);
            } else {
                next.push(v);
            }
        }
        Ok(())
    }
}

/// One fourth-order Runge-Kutta step of size `config.dt`.
pub fn step(dist: &Distribution, config: &SolverConfig) -> Result<Distribution, SolverError> {
    let mut ws = Workspace::new(*dist.grid(), config.spec);
    let mut next = Vec::with_capacity(dist.grid().bins());
    ws.advance(dist.counts(), config.dt, 0.0, &mut next)?;
    Ok(Distribution::from_counts_unchecked(*dist.grid(), next))
}

/// Integrates from `initial` to `config.t_end`, recording snapshots every
/// `output_every` steps and at the final time.
pub fn simulate(config: &SolverConfig, initial: &Distribution) -> Result<Trajectory, SolverError> {
    let grid = *initial.grid();
    let mut snapshots = vec![(0.0, initial.clone())];
    if config.t_end > 0.0 {
        let steps = (config.t_end / config.dt - 1e-9).ceil().max(1.0) as usize;
        let mut ws = Workspace::new(grid, config.spec);
        let mut y = initial.counts().to_vec();
        let mut next = Vec::with_capacity(grid.bins());
        for n in 0..steps {
            let t = n as f64 * config.dt;
            let t_next = if n + 1 == steps { config.t_end } else { (n + 1) as f64 * config.dt };
            ws.advance(&y, t_next - t, t, &mut next)?;
            std::mem::swap(&mut y, &mut next);
            if (n + 1) % config.output_every == 0 || n + 1 == steps {
                snapshots.push((t_next, Distribution::from_counts_unchecked(grid, y.clone())));
            }
        }
    }
    Trajectory::from_snapshots(*config, snapshots)
}

/// Discrete weak-form right side for a test function `phi`, evaluated by
/// direct double sums over bins.
pub fn weak_form_rhs<F: Fn(f64) -> f64>(dist: &Distribution, spec: &KernelSpec, phi: &F) -> f64 {
    let grid = dist.grid();
    let cap = spec.cap(grid);
    let ds = grid.ds();
    let counts = dist.counts();
    let phi_at: Vec<f64> = (0..=grid.bins()).map(|i| phi(grid.size(i))).collect();

    let mut coag = 0.0;
    for i in 1..cap {
        if counts[i - 1] == 0.0 {
            continue;
        }
        for j in 1..=(cap - i) {
            let jump = phi_at[i + j] - phi_at[i] - phi_at[j];
            coag += jump * coag_kernel(grid.size(i), grid.size(j)) * counts[i - 1] * counts[j - 1];
        }
    }

    let mut frag = 0.0;
    if spec.fragmentation_enabled() {
        for j in 2..=cap {
            if counts[j - 1] == 0.0 {
                continue;
            }
            let s_j = grid.size(j);
            let mut inner = 0.0;
            for k in 1..j {
                let jump = phi_at[j] - phi_at[j - k] - phi_at[k];
                inner += ds * jump * frag_kernel(spec, s_j - grid.size(k), grid.size(k));
            }
            frag += inner * counts[j - 1];
        }
    }
    0.5 * coag - 0.5 * frag
}

/// Largest mismatch between the centered time difference of
/// `sum_i phi(s_i) N_i` and the discrete weak-form right side, over interior
/// snapshots.
pub fn weak_form_residual<F: Fn(f64) -> f64>(traj: &Trajectory, phi: F) -> Result<f64, SolverError> {
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(SolverError::TooFewSnapshots(snaps.len()));
    }
    let observable: Vec<f64> = snaps
        .iter()
        .map(|(_, d)| d.iter().map(|(s, c)| phi(s) * c).sum())
        .collect();
    let mut worst: f64 = 0.0;
    for i in 1..snaps.len() - 1 {
        let rate = centered_derivative(
            [snaps[i - 1].0, snaps[i].0, snaps[i + 1].0],
            [observable[i - 1], observable[i], observable[i + 1]],
        );
        let rhs = weak_form_rhs(&snaps[i].1, &traj.config.spec, &phi);
        worst = worst.max((rate - rhs).abs());
    }
    Ok(worst)
}

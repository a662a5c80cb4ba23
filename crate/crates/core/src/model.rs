//! Size grids, number distributions, kernels and scenario parameters.
//!
//! Sizes live on a uniform grid `s_i = i * ds`, `i = 1..=n`. A
//! [`Distribution`] stores number concentrations per bin (not densities), so
//! every moment and weak-form quantity is a plain sum over counts.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Highest moment order tracked anywhere in the crate.
pub const MAX_MOMENT: usize = 5;

/// Relative tail mass above the grid that `make_initial` tolerates.
const TAIL_TOLERANCE: f64 = 1e-9;

/// Uniform size grid with `n` bins of width `ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeGrid {
    ds: f64,
    n: usize,
}

impl SizeGrid {
    pub fn new(ds: f64, n: usize) -> Result<Self, ModelError> {
        if !(ds.is_finite() && ds > 0.0) {
            return Err(ModelError::InvalidGrid(format!("size step must be positive, got {ds}")));
        }
        if n < 2 {
            return Err(ModelError::InvalidGrid(format!("need at least 2 bins, got {n}")));
        }
        Ok(Self { ds, n })
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn bins(&self) -> usize {
        self.n
    }

    /// Size of the bin with 1-based index `i`.
    #[inline]
    pub fn size(&self, i: usize) -> f64 {
        i as f64 * self.ds
    }

    /// Largest representable size `n * ds`.
    pub fn max_size(&self) -> f64 {
        self.size(self.n)
    }

    /// Sizes `s_1..=s_n` in bin order.
    pub fn sizes(&self) -> Vec<f64> {
        (1..=self.n).map(|i| self.size(i)).collect()
    }

    /// 1-based bin index of `s` if it sits on the grid (relative slack 1e-9).
    pub fn index_of(&self, s: f64) -> Option<usize> {
        let r = s / self.ds;
        let i = r.round();
        if i < 1.0 || i > self.n as f64 || (r - i).abs() > 1e-9 * r.max(1.0) {
            return None;
        }
        Some(i as usize)
    }
}

/// Moment orders `0..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MomentOrder {
    M0,
    M1,
    M2,
    M3,
    M4,
    M5,
}

impl MomentOrder {
    pub const ALL: [MomentOrder; 6] = [
        MomentOrder::M0,
        MomentOrder::M1,
        MomentOrder::M2,
        MomentOrder::M3,
        MomentOrder::M4,
        MomentOrder::M5,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl TryFrom<usize> for MomentOrder {
    type Error = ModelError;

    fn try_from(k: usize) -> Result<Self, Self::Error> {
        MomentOrder::ALL
            .get(k)
            .copied()
            .ok_or(ModelError::MomentOrder(k))
    }
}

/// Number concentrations `N_i >= 0` on a [`SizeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    grid: SizeGrid,
    counts: Vec<f64>,
}

impl Distribution {
    /// Validates length, sign and finiteness of `counts`.
    pub fn new(grid: SizeGrid, counts: Vec<f64>) -> Result<Self, ModelError> {
        if counts.len() != grid.bins() {
            return Err(ModelError::LengthMismatch {
                expected: grid.bins(),
                got: counts.len(),
            });
        }
        if let Some((i, &c)) = counts
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_finite() || **c < 0.0)
        {
            return Err(ModelError::InvalidCount { bin: i + 1, value: c });
        }
        Ok(Self { grid, counts })
    }

    pub fn zeros(grid: SizeGrid) -> Self {
        Self {
            grid,
            counts: vec![0.0; grid.bins()],
        }
    }

    /// Crate-internal constructor for solver output already known to be valid.
    pub(crate) fn from_counts_unchecked(grid: SizeGrid, counts: Vec<f64>) -> Self {
        debug_assert_eq!(counts.len(), grid.bins());
        Self { grid, counts }
    }

    pub fn grid(&self) -> &SizeGrid {
        &self.grid
    }

    /// Counts in bin order; entry `i` belongs to size `(i + 1) * ds`.
    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Number concentration per unit size, `N_i / ds`.
    pub fn densities(&self) -> Vec<f64> {
        self.counts.iter().map(|c| c / self.grid.ds()).collect()
    }

    /// Iterator over `(s_i, N_i)`.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.grid.size(i + 1), c))
    }

    pub fn moment(&self, k: MomentOrder) -> f64 {
        moment(self, k)
    }

    /// All six moments `m_0..m_5`.
    pub fn moments(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (s, c) in self.iter() {
            let mut p = c;
            for slot in out.iter_mut() {
                *slot += p;
                p *= s;
            }
        }
        out
    }

    /// Total mass `m_1`.
    pub fn mass(&self) -> f64 {
        self.moment(MomentOrder::M1)
    }

    pub fn max_count(&self) -> f64 {
        self.counts.iter().copied().fold(0.0, f64::max)
    }

    /// `alpha * self + beta * other` on the same grid.
    pub fn combine(&self, alpha: f64, other: &Distribution, beta: f64) -> Result<Self, ModelError> {
        if self.grid != other.grid {
            return Err(ModelError::GridMismatch);
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Distribution::new(self.grid, counts)
    }
}

/// `m_k = sum_i s_i^k N_i`.
pub fn moment(dist: &Distribution, k: MomentOrder) -> f64 {
    let p = k.index() as i32;
    dist.iter().map(|(s, c)| s.powi(p) * c).sum()
}

/// Multiplicative coagulation kernel `a(s, s') = s s'`.
#[inline]
pub fn coag_kernel(s: f64, s_hat: f64) -> f64 {
    s * s_hat
}

/// Perturbed fragmentation kernel `b(s, s') = 1 + eps (s + s')`.
#[inline]
pub fn frag_kernel(spec: &KernelSpec, s: f64, s_hat: f64) -> f64 {
    1.0 + spec.frag_eps() * (s + s_hat)
}

/// Kernel family: fixed multiplicative coagulation, fragmentation
/// `1 + eps (s + s')`, and a truncation index above which no event may land.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    frag_eps: f64,
    truncation: usize,
    fragmentation: bool,
}

impl KernelSpec {
    pub fn new(frag_eps: f64, truncation: usize) -> Result<Self, ModelError> {
        if !(frag_eps.is_finite() && frag_eps >= 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "fragmentation perturbation must be >= 0, got {frag_eps}"
            )));
        }
        if truncation < 2 {
            return Err(ModelError::InvalidParameter(format!(
                "truncation index must be >= 2, got {truncation}"
            )));
        }
        Ok(Self {
            frag_eps,
            truncation,
            fragmentation: true,
        })
    }

    /// Truncation at the top of `grid`.
    pub fn for_grid(frag_eps: f64, grid: &SizeGrid) -> Result<Self, ModelError> {
        Self::new(frag_eps, grid.bins())
    }

    /// Same truncation, fragmentation switched off (pure coagulation).
    pub fn without_fragmentation(mut self) -> Self {
        self.fragmentation = false;
        self
    }

    pub fn frag_eps(&self) -> f64 {
        self.frag_eps
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn fragmentation_enabled(&self) -> bool {
        self.fragmentation
    }

    /// Truncation index clamped to the bins of `grid`.
    pub(crate) fn cap(&self, grid: &SizeGrid) -> usize {
        self.truncation.min(grid.bins())
    }
}

/// Initial mass, second moment and the horizon `T* = 1 / m_2(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    m: f64,
    m2_0: f64,
    t_star: f64,
}

impl ScenarioParams {
    pub fn new(m: f64, m2_0: f64) -> Result<Self, ModelError> {
        if !(m.is_finite() && m > 0.0) {
            return Err(ModelError::InvalidParameter(format!("mass must be positive, got {m}")));
        }
        if !(m2_0.is_finite() && m2_0 > 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "second moment must be positive, got {m2_0}"
            )));
        }
        Ok(Self {
            m,
            m2_0,
            t_star: 1.0 / m2_0,
        })
    }

    /// Scenario of the distribution actually simulated.
    pub fn from_distribution(dist: &Distribution) -> Result<Self, ModelError> {
        let mom = dist.moments();
        Self::new(mom[1], mom[2])
    }

    pub fn mass(&self) -> f64 {
        self.m
    }

    pub fn m2_0(&self) -> f64 {
        self.m2_0
    }

    pub fn t_star(&self) -> f64 {
        self.t_star
    }
}

/// Time series of `m_0..m_5` with relative mass drift per time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub moments: Vec<[f64; 6]>,
    pub mass_drift: Vec<f64>,
}

impl MomentSeries {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; `times` must stay strictly increasing.
    pub fn push(&mut self, t: f64, moments: [f64; 6]) -> Result<(), ModelError> {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(ModelError::NonMonotoneTime { previous: last, next: t });
            }
        }
        let m1_0 = self.moments.first().map_or(moments[1], |m| m[1]);
        let drift = if m1_0 > 0.0 {
            (moments[1] - m1_0).abs() / m1_0
        } else {
            0.0
        };
        self.times.push(t);
        self.moments.push(moments);
        self.mass_drift.push(drift);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_mass_drift(&self) -> f64 {
        self.mass_drift.iter().copied().fold(0.0, f64::max)
    }

    /// Column `k` of the moment table.
    pub fn column(&self, k: MomentOrder) -> Vec<f64> {
        self.moments.iter().map(|m| m[k.index()]).collect()
    }
}

/// Initial-condition families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialProfile {
    /// All mass at a single size.
    Monodisperse { mass: f64, size: f64 },
    /// Number density `mass * lambda^2 * exp(-lambda s)`, integrated per bin.
    Exponential { mass: f64, lambda: f64 },
    /// Weights at explicit on-grid sizes, rescaled to `mass`.
    Custom { mass: f64, points: Vec<(f64, f64)> },
}

impl InitialProfile {
    pub fn mass(&self) -> f64 {
        match self {
            InitialProfile::Monodisperse { mass, .. }
            | InitialProfile::Exponential { mass, .. }
            | InitialProfile::Custom { mass, .. } => *mass,
        }
    }
}

/// Discretizes `profile` on `grid` and renormalizes so that `m_1` equals the
/// requested mass.
pub fn make_initial(profile: &InitialProfile, grid: SizeGrid) -> Result<Distribution, ModelError> {
    let mass = profile.mass();
    if !(mass.is_finite() && mass > 0.0) {
        return Err(ModelError::InvalidParameter(format!("mass must be positive, got {mass}")));
    }
    let mut counts = vec![0.0; grid.bins()];
    match profile {
        InitialProfile::Monodisperse { size, .. } => {
            let i = grid
                .index_of(*size)
                .ok_or(ModelError::Unrepresentable { size: *size, ds: grid.ds(), max: grid.max_size() })?;
            counts[i - 1] = mass / grid.size(i);
        }
        InitialProfile::Exponential { lambda, .. } => {
            if !(lambda.is_finite() && *lambda > 0.0) {
                return Err(ModelError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
            }
            let ds = grid.ds();
            // mass above the last bin edge: mass * (1 + lambda L) e^{-lambda L}
            let edge = (grid.bins() as f64 + 0.5) * ds;
            let tail = (1.0 + lambda * edge) * (-lambda * edge).exp();
            if tail > TAIL_TOLERANCE {
                return Err(ModelError::GridTooSmall { tail });
            }
            for (i, c) in counts.iter_mut().enumerate() {
                let lo = (i as f64 + 0.5) * ds;
                let hi = lo + ds;
                // exact number in the cell: mass * lambda * (e^{-lambda lo} - e^{-lambda hi})
                *c = mass * lambda * ((-lambda * lo).exp() - (-lambda * hi).exp());
            }
        }
        InitialProfile::Custom { points, .. } => {
            if points.is_empty() {
                return Err(ModelError::InvalidParameter("custom profile has no points".into()));
            }
            for &(s, w) in points {
                if !(w.is_finite() && w >= 0.0) {
                    return Err(ModelError::InvalidParameter(format!("weight at size {s} is {w}")));
                }
                let i = grid
                    .index_of(s)
                    .ok_or(ModelError::Unrepresentable { size: s, ds: grid.ds(), max: grid.max_size() })?;
                counts[i - 1] += w;
            }
        }
    }
    let raw = Distribution::new(grid, counts)?;
    let raw_mass = raw.mass();
    if raw_mass <= 0.0 {
        return Err(ModelError::InvalidParameter("profile carries no mass on this grid".into()));
    }
    let scale = mass / raw_mass;
    let counts = raw.counts.iter().map(|c| c * scale).collect();
    Distribution::new(grid, counts)
}

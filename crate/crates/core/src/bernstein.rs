//! Bernstein transform `F(x) = sum_i (1 - e^{-x s_i}) N_i`, its
//! x-derivatives, complete-monotonicity checks and residuals of the
//! Hamilton-Jacobi equations satisfied by `F`.
//!
//! On a [`Distribution`] every quantity is an exact finite sum. The
//! perturbation term is
//!
//! ```text
//! G(x, t) = m_2(t) / 2 - F_xx / 2 - (m - F_x) / x
//! ```
//!
//! and the residual of the perturbed equation is
//!
//! ```text
//! F_t + (F_x - m)(F_x - m - 1) / 2 + F / x - m - eps G.
//! ```

use crate::error::AnalysisError;
use crate::kinetic::Trajectory;
use crate::model::{Distribution, ScenarioParams};
use crate::numerics::{centered_derivative, geometric_points, scaled_divided_difference, time_derivative};

/// Tolerance factor (times mass) for exact-sum monotonicity checks.
pub const EXACT_MONOTONICITY_TOL: f64 = 1e-8;
/// Tolerance factor (times mass) for finite-difference monotonicity checks.
pub const SAMPLED_MONOTONICITY_TOL: f64 = 1e-4;
/// Highest order checked by divided differences.
pub const MAX_SAMPLED_ORDER: usize = 4;

/// `F`, `F_x`, `F_xx` and `G` sampled on an x-grid at a sequence of times.
/// Arrays are indexed `[time][x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinField {
    pub x_grid: Vec<f64>,
    pub times: Vec<f64>,
    pub f: Vec<Vec<f64>>,
    pub fx: Vec<Vec<f64>>,
    pub fxx: Vec<Vec<f64>>,
    /// `m_2(t)` per time; `NaN` when the source does not know it.
    pub m2_of_t: Vec<f64>,
    /// Exact `G` samples when the field comes from distributions.
    pub g_eps: Option<Vec<Vec<f64>>>,
}

/// The default x-grid: `x = 0` plus geometric points over `[1e-3, 20]`.
pub fn default_x_grid(count: usize) -> Vec<f64> {
    let mut x = vec![0.0];
    x.extend(geometric_points(1e-3, 20.0, count.max(3) - 1));
    x
}

fn validate_x_grid(x_grid: &[f64]) -> Result<(), AnalysisError> {
    if x_grid.is_empty() {
        return Err(AnalysisError::InvalidGrid("empty".into()));
    }
    if x_grid.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(AnalysisError::InvalidGrid("points must be finite and >= 0".into()));
    }
    if x_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::InvalidGrid("points must be strictly increasing".into()));
    }
    Ok(())
}

struct Sample {
    f: f64,
    fx: f64,
    fxx: f64,
    g: f64,
}

fn sample(dist: &Distribution, x: f64, m2: f64) -> Sample {
    let mut f = 0.0;
    let mut fx = 0.0;
    let mut fxx = 0.0;
    // (m - F_x) = sum s (1 - e^{-xs}) N, kept separate to avoid cancellation
    let mut deficit = 0.0;
    for (s, c) in dist.iter() {
        if c == 0.0 {
            continue;
        }
        let one_minus = -(-x * s).exp_m1();
        let decay = (-x * s).exp();
        f += one_minus * c;
        fx += s * decay * c;
        fxx -= s * s * decay * c;
        deficit += s * one_minus * c;
    }
    let g = if x == 0.0 { 0.0 } else { 0.5 * m2 - 0.5 * fxx - deficit / x };
    Sample { f, fx, fxx, g }
}

impl BernsteinField {
    /// A field from explicit samples (no `G` data).
    pub fn from_samples(
        x_grid: Vec<f64>,
        times: Vec<f64>,
        f: Vec<Vec<f64>>,
        fx: Vec<Vec<f64>>,
        fxx: Vec<Vec<f64>>,
        m2_of_t: Vec<f64>,
    ) -> Result<Self, AnalysisError> {
        validate_x_grid(&x_grid)?;
        let nt = times.len();
        let shape_ok = |a: &Vec<Vec<f64>>| a.len() == nt && a.iter().all(|row| row.len() == x_grid.len());
        if !(shape_ok(&f) && shape_ok(&fx) && shape_ok(&fxx) && m2_of_t.len() == nt) {
            return Err(AnalysisError::InvalidGrid("sample arrays do not match grid shape".into()));
        }
        Ok(Self {
            x_grid,
            times,
            f,
            fx,
            fxx,
            m2_of_t,
            g_eps: None,
        })
    }

    /// Transforms a time-ordered list of distributions.
    pub fn from_distributions<'a, I>(snapshots: I, x_grid: &[f64]) -> Result<Self, AnalysisError>
    where
        I: IntoIterator<Item = (f64, &'a Distribution)>,
    {
        validate_x_grid(x_grid)?;
        let mut field = Self {
            x_grid: x_grid.to_vec(),
            times: Vec::new(),
            f: Vec::new(),
            fx: Vec::new(),
            fxx: Vec::new(),
            m2_of_t: Vec::new(),
            g_eps: Some(Vec::new()),
        };
        for (t, dist) in snapshots {
            let m2 = dist.moments()[2];
            let rows: Vec<Sample> = x_grid.iter().map(|&x| sample(dist, x, m2)).collect();
            field.times.push(t);
            field.f.push(rows.iter().map(|r| r.f).collect());
            field.fx.push(rows.iter().map(|r| r.fx).collect());
            field.fxx.push(rows.iter().map(|r| r.fxx).collect());
            if let Some(g) = field.g_eps.as_mut() {
                g.push(rows.iter().map(|r| r.g).collect());
            }
            field.m2_of_t.push(m2);
        }
        Ok(field)
    }

    /// Field of every snapshot of a kinetic trajectory.
    pub fn from_trajectory(traj: &Trajectory, x_grid: &[f64]) -> Result<Self, AnalysisError> {
        Self::from_distributions(traj.snapshots.iter().map(|(t, d)| (*t, d)), x_grid)
    }

    /// Keeps only snapshots with `t <= t_max`.
    pub fn restrict_times(&self, t_max: f64) -> Self {
        let keep: Vec<usize> = (0..self.times.len()).filter(|&i| self.times[i] <= t_max).collect();
        let pick = |a: &Vec<Vec<f64>>| keep.iter().map(|&i| a[i].clone()).collect::<Vec<_>>();
        Self {
            x_grid: self.x_grid.clone(),
            times: keep.iter().map(|&i| self.times[i]).collect(),
            f: pick(&self.f),
            fx: pick(&self.fx),
            fxx: pick(&self.fxx),
            m2_of_t: keep.iter().map(|&i| self.m2_of_t[i]).collect(),
            g_eps: self.g_eps.as_ref().map(pick),
        }
    }

    /// `G` at `(times[ti], x_grid[xi])`: the stored exact value when present,
    /// otherwise the formula applied to the sampled derivatives with mass `m`.
    pub fn g_at(&self, ti: usize, xi: usize, m: f64) -> f64 {
        if let Some(g) = &self.g_eps {
            return g[ti][xi];
        }
        let x = self.x_grid[xi];
        if x == 0.0 {
            return 0.0;
        }
        0.5 * self.m2_of_t[ti] - 0.5 * self.fxx[ti][xi] - (m - self.fx[ti][xi]) / x
    }

    /// `F_t` on every sample, centered in the interior and one-sided at the
    /// first and last snapshots.
    pub fn time_derivative(&self) -> Result<Vec<Vec<f64>>, AnalysisError> {
        let nt = self.times.len();
        if nt < 3 {
            return Err(AnalysisError::TooFewSnapshots { needed: 3, got: nt });
        }
        let nx = self.x_grid.len();
        let mut out = vec![vec![0.0; nx]; nt];
        for xi in 0..nx {
            let column: Vec<f64> = (0..nt).map(|ti| self.f[ti][xi]).collect();
            for (ti, v) in time_derivative(&self.times, &column).into_iter().enumerate() {
                out[ti][xi] = v;
            }
        }
        Ok(out)
    }
}

/// Bernstein transform of one distribution at time `t`.
pub fn transform(dist: &Distribution, x_grid: &[f64], t: f64) -> Result<BernsteinField, AnalysisError> {
    BernsteinField::from_distributions(std::iter::once((t, dist)), x_grid)
}

/// `d^k F / dx^k = (-1)^{k-1} sum_i s_i^k e^{-x s_i} N_i` for `k >= 1`.
///
/// # Panics
/// If `k == 0`.
pub fn derivative(dist: &Distribution, x: f64, k: u32) -> f64 {
    assert!(k >= 1, "derivative order must be >= 1");
    let magnitude: f64 = dist
        .iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(s, c)| s.powi(k as i32) * (-x * s).exp() * c)
        .sum();
    if k % 2 == 1 {
        magnitude
    } else {
        -magnitude
    }
}

/// One evaluation of `(-1)^{k-1} d^k F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignSample {
    pub k: usize,
    pub x: f64,
    pub t: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub pass: bool,
    pub tolerance: f64,
    pub evaluations: usize,
    pub violations: Vec<SignSample>,
    /// Smallest signed value seen.
    pub worst: Option<SignSample>,
}

impl MonotonicityReport {
    fn new(tolerance: f64) -> Self {
        Self {
            pass: true,
            tolerance,
            evaluations: 0,
            violations: Vec::new(),
            worst: None,
        }
    }

    fn record(&mut self, sample: SignSample) {
        self.evaluations += 1;
        if self.worst.map_or(true, |w| sample.value < w.value) {
            self.worst = Some(sample);
        }
        if sample.value < -self.tolerance {
            self.pass = false;
            self.violations.push(sample);
        }
    }

    fn merge(&mut self, other: MonotonicityReport) {
        self.evaluations += other.evaluations;
        self.pass &= other.pass;
        self.violations.extend(other.violations);
        if let Some(w) = other.worst {
            if self.worst.map_or(true, |cur| w.value < cur.value) {
                self.worst = Some(w);
            }
        }
    }
}

/// Input to [`complete_monotonicity_report`].
#[derive(Debug, Clone, Copy)]
pub enum MonotonicitySource<'a> {
    /// Exact sums over a distribution; any order.
    Exact(&'a Distribution),
    /// Samples `F(x)` of a function with mass `m`; orders up to 4.
    Sampled { x: &'a [f64], f: &'a [f64], mass: f64 },
}

/// Signs of `(-1)^{k-1} d^k F` for `k = 1..=k_max`.
///
/// Exact sources are evaluated at `x_samples`; sampled sources use
/// `k!`-scaled divided differences over consecutive samples (which equal the
/// k-th derivative at some interior point) and ignore `x_samples`.
pub fn complete_monotonicity_report(
    source: MonotonicitySource<'_>,
    k_max: usize,
    x_samples: &[f64],
) -> Result<MonotonicityReport, AnalysisError> {
    match source {
        MonotonicitySource::Exact(dist) => {
            let mut report = MonotonicityReport::new(EXACT_MONOTONICITY_TOL * dist.mass());
            for k in 1..=k_max {
                for &x in x_samples {
                    let d = derivative(dist, x, k as u32);
                    let value = if k % 2 == 1 { d } else { -d };
                    report.record(SignSample { k, x, t: None, value });
                }
            }
            Ok(report)
        }
        MonotonicitySource::Sampled { x, f, mass } => {
            if k_max > MAX_SAMPLED_ORDER {
                return Err(AnalysisError::OrderTooHigh(k_max));
            }
            validate_x_grid(x)?;
            if x.len() != f.len() {
                return Err(AnalysisError::InvalidGrid("x and F lengths differ".into()));
            }
            let mut report = MonotonicityReport::new(SAMPLED_MONOTONICITY_TOL * mass);
            for k in 1..=k_max {
                if x.len() <= k {
                    continue;
                }
                for i in 0..x.len() - k {
                    let d = scaled_divided_difference(&x[i..=i + k], &f[i..=i + k]);
                    let value = if k % 2 == 1 { d } else { -d };
                    let centre = 0.5 * (x[i] + x[i + k]);
                    report.record(SignSample { k, x: centre, t: None, value });
                }
            }
            Ok(report)
        }
    }
}

/// Divided-difference monotonicity of every snapshot of a sampled field.
pub fn field_monotonicity_report(field: &BernsteinField, mass: f64, k_max: usize) -> Result<MonotonicityReport, AnalysisError> {
    let mut report = MonotonicityReport::new(SAMPLED_MONOTONICITY_TOL * mass);
    for (ti, &t) in field.times.iter().enumerate() {
        let mut r = complete_monotonicity_report(
            MonotonicitySource::Sampled { x: &field.x_grid, f: &field.f[ti], mass },
            k_max,
            &[],
        )?;
        for s in r.violations.iter_mut() {
            s.t = Some(t);
        }
        if let Some(w) = r.worst.as_mut() {
            w.t = Some(t);
        }
        report.merge(r);
    }
    Ok(report)
}

/// Largest absolute residual and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjResidual {
    pub max_abs: f64,
    pub x: f64,
    pub t: f64,
}

/// Residual on every sample; `NaN` at `x = 0` and at the first and last
/// snapshots, which are excluded.
pub fn hj_residual_grid(field: &BernsteinField, scenario: &ScenarioParams, eps: f64) -> Result<Vec<Vec<f64>>, AnalysisError> {
    let nt = field.times.len();
    if nt < 3 {
        return Err(AnalysisError::TooFewSnapshots { needed: 3, got: nt });
    }
    let m = scenario.mass();
    let mut out = vec![vec![f64::NAN; field.x_grid.len()]; nt];
    for ti in 1..nt - 1 {
        for (xi, &x) in field.x_grid.iter().enumerate() {
            if x <= 0.0 {
                continue;
            }
            let f_t = centered_derivative(
                [field.times[ti - 1], field.times[ti], field.times[ti + 1]],
                [field.f[ti - 1][xi], field.f[ti][xi], field.f[ti + 1][xi]],
            );
            let p = field.fx[ti][xi];
            let mut r = f_t + 0.5 * (p - m) * (p - m - 1.0) + field.f[ti][xi] / x - m;
            if eps != 0.0 {
                r -= eps * field.g_at(ti, xi, m);
            }
            out[ti][xi] = r;
        }
    }
    Ok(out)
}

/// Max absolute residual over interior samples.
pub fn hj_residual(field: &BernsteinField, scenario: &ScenarioParams, eps: f64) -> Result<HjResidual, AnalysisError> {
    let grid = hj_residual_grid(field, scenario, eps)?;
    let mut best = HjResidual { max_abs: 0.0, x: f64::NAN, t: f64::NAN };
    for (ti, row) in grid.iter().enumerate() {
        for (xi, r) in row.iter().enumerate() {
            if r.is_nan() {
                continue;
            }
            if r.abs() > best.max_abs || best.x.is_nan() {
                best = HjResidual { max_abs: r.abs(), x: field.x_grid[xi], t: field.times[ti] };
            }
        }
    }
    Ok(best)
}

/// Largest `|G|` over the field.
pub fn max_abs_g(field: &BernsteinField, m: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for ti in 0..field.times.len() {
        for xi in 0..field.x_grid.len() {
            worst = worst.max(field.g_at(ti, xi, m).abs());
        }
    }
    worst
}

/// Whether `max |G| <= 3 / (T* - T)` (relative slack 1e-2) on a field whose
/// times lie in `[0, T]`.
pub fn g_eps_bound_check(field: &BernsteinField, scenario: &ScenarioParams, horizon: f64) -> Result<bool, AnalysisError> {
    let t_star = scenario.t_star();
    if horizon >= t_star {
        return Err(AnalysisError::BeyondHorizon { t: horizon, t_star });
    }
    if let Some(&t) = field.times.iter().find(|&&t| t < 0.0 || t > horizon) {
        return Err(AnalysisError::TimeOutsideWindow { t, limit: horizon });
    }
    let bound = 3.0 / (t_star - horizon);
    Ok(max_abs_g(field, scenario.mass()) <= bound * (1.0 + 1e-2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_initial, InitialProfile, SizeGrid};

    fn point(ds: f64, n: usize, size: f64, count: f64) -> Distribution {
        let g = SizeGrid::new(ds, n).unwrap();
        let mut counts = vec![0.0; n];
        counts[g.index_of(size).unwrap() - 1] = count;
        Distribution::new(g, counts).unwrap()
    }

    #[test]
    fn point_mass_transform() {
        let d = point(1.0, 4, 1.0, 1.0);
        let field = transform(&d, &[0.0, 1.0], 0.0).unwrap();
        assert_eq!(field.f[0][0], 0.0);
        assert!((field.f[0][1] - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((field.f[0][1] - 0.632121).abs() < 1e-6);
        assert_eq!(field.fx[0][0], 1.0);
        assert_eq!(field.fxx[0][0], -1.0);
    }

    #[test]
    fn exponential_density_transform() {
        let ds = 0.01;
        let g = SizeGrid::new(ds, 4000).unwrap();
        let d = make_initial(&InitialProfile::Exponential { mass: 1.0, lambda: 1.0 }, g).unwrap();
        let field = transform(&d, &[1.0], 0.0).unwrap();
        // closed form x / (1 + x) of the continuous density
        assert!((field.f[0][0] - 0.5).abs() < 2.0 * ds);
    }

    #[test]
    fn derivative_sign_convention() {
        let d = point(0.5, 8, 1.0, 1.5);
        assert_eq!(derivative(&d, 0.0, 1), d.mass());
        assert_eq!(derivative(&d, 0.0, 2), -d.moments()[2]);
        let two = point(1.0, 4, 2.0, 1.0);
        assert_eq!(derivative(&two, 0.0, 3), 8.0);
    }

    #[test]
    fn exact_monotonicity_passes_on_distributions() {
        let g = SizeGrid::new(0.5, 40).unwrap();
        let d = make_initial(&InitialProfile::Exponential { mass: 1.0, lambda: 1.5 }, g).unwrap();
        let x = default_x_grid(30);
        let r = complete_monotonicity_report(MonotonicitySource::Exact(&d), 6, &x).unwrap();
        assert!(r.pass);
        assert!(r.violations.is_empty());
        assert_eq!(r.evaluations, 6 * x.len());
    }

    #[test]
    fn convex_field_fails_at_second_order() {
        let x: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let f: Vec<f64> = x.iter().map(|v| v * v).collect();
        let r = complete_monotonicity_report(MonotonicitySource::Sampled { x: &x, f: &f, mass: 1.0 }, 2, &[]).unwrap();
        assert!(!r.pass);
        assert!(r.violations.iter().all(|v| v.k == 2));
        assert!(matches!(
            complete_monotonicity_report(MonotonicitySource::Sampled { x: &x, f: &f, mass: 1.0 }, 5, &[]),
            Err(AnalysisError::OrderTooHigh(5))
        ));
    }

    fn synthetic(f: impl Fn(f64) -> f64, fx: impl Fn(f64) -> f64, m2: f64) -> BernsteinField {
        let x = vec![0.0, 0.5, 1.0, 2.0];
        let times = vec![0.0, 0.1, 0.2];
        let row = |g: &dyn Fn(f64) -> f64| x.iter().map(|&v| g(v)).collect::<Vec<_>>();
        BernsteinField::from_samples(
            x.clone(),
            times,
            vec![row(&f); 3],
            vec![row(&fx); 3],
            vec![vec![0.0; 4]; 3],
            vec![m2; 3],
        )
        .unwrap()
    }

    #[test]
    fn residual_plug_in_cases() {
        let m = 1.3;
        let sc = ScenarioParams::new(m, 1.0).unwrap();
        let linear = synthetic(|x| m * x, |_| m, 1.0);
        assert!(hj_residual(&linear, &sc, 0.0).unwrap().max_abs < 1e-14);

        let zero = synthetic(|_| 0.0, |_| 0.0, 1.0);
        let one = ScenarioParams::new(1.0, 1.0).unwrap();
        assert!(hj_residual(&zero, &one, 0.0).unwrap().max_abs < 1e-15);
        let two = ScenarioParams::new(2.0, 1.0).unwrap();
        assert!((hj_residual(&zero, &two, 0.0).unwrap().max_abs - 1.0).abs() < 1e-15);

        let short = transform(&point(1.0, 4, 1.0, 1.0), &[0.0, 1.0], 0.0).unwrap();
        assert!(matches!(hj_residual(&short, &one, 0.0), Err(AnalysisError::TooFewSnapshots { .. })));
    }

    #[test]
    fn g_bound_at_initial_time() {
        let d = point(0.5, 16, 1.0, 1.0);
        let sc = ScenarioParams::from_distribution(&d).unwrap();
        let field = transform(&d, &default_x_grid(40), 0.0).unwrap();
        assert!(g_eps_bound_check(&field, &sc, 0.0).unwrap());
        assert!(g_eps_bound_check(&field, &sc, sc.t_star() * (1.0 - 1e-9)).unwrap());
        assert!(g_eps_bound_check(&field, &sc, sc.t_star()).is_err());
    }
}

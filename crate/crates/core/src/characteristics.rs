//! Characteristics of the limiting Hamilton-Jacobi equation
//!
//! ```text
//! F_t + (F_x - m)(F_x - m - 1) / 2 + F / x - m = 0
//! ```
//!
//! Along a characteristic `(X, P, Z) = (x, F_x, F)` evolves by
//!
//! ```text
//! X' = P - (m + 1/2),   P' = Z / X^2 - P / X,   Z' = P^2 / 2 - Z / X + m (1 - m) / 2.
//! ```
//!
//! Paths are integrated with RK4 on a common time grid, in parallel, and
//! `F(x, t)` is recovered by monotone Hermite interpolation of `(X, Z)` with
//! slopes `P`.

use rayon::prelude::*;

use crate::bernstein::BernsteinField;
use crate::error::CharacteristicsError;
use crate::model::Distribution;
use crate::numerics::geometric_points;
use crate::verification::{BoundReport, BoundTracker};

/// Paths reaching `X <= X_MIN` are terminated.
pub const X_MIN: f64 = 1e-6;
/// Minimum separation between neighbouring characteristics.
pub const CROSSING_GAP: f64 = 1e-12;
/// Slack allowed on monotonicity in time of `P`.
pub const P_MONOTONE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicState {
    pub x: f64,
    pub p: f64,
    pub z: f64,
}

/// Right-hand side `(dX, dP, dZ)`.
pub fn char_rhs(state: CharacteristicState, m: f64) -> Result<(f64, f64, f64), CharacteristicsError> {
    let CharacteristicState { x, p, z } = state;
    if !(x > 0.0) {
        return Err(CharacteristicsError::SingularBoundary(x));
    }
    Ok((p - (m + 0.5), z / (x * x) - p / x, 0.5 * p * p - z / x + 0.5 * m * (1.0 - m)))
}

/// Closed-form initial data `F_0` with its slope.
pub trait InitialData: Sync {
    fn value(&self, x: f64) -> f64;
    fn slope(&self, x: f64) -> f64;
    /// `-F_0''(0)`, the initial second moment; sets `T* = 1 / m_2(0)`.
    fn second_moment(&self) -> f64;
}

impl InitialData for Distribution {
    fn value(&self, x: f64) -> f64 {
        self.iter().map(|(s, c)| -(-x * s).exp_m1() * c).sum()
    }

    fn slope(&self, x: f64) -> f64 {
        self.iter().map(|(s, c)| s * (-x * s).exp() * c).sum()
    }

    fn second_moment(&self) -> f64 {
        self.moments()[2]
    }
}

/// `F_0(x) = m (1 - e^{-x})`: monodisperse particles of size 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monodisperse {
    pub mass: f64,
}

impl InitialData for Monodisperse {
    fn value(&self, x: f64) -> f64 {
        -self.mass * (-x).exp_m1()
    }

    fn slope(&self, x: f64) -> f64 {
        self.mass * (-x).exp()
    }

    fn second_moment(&self) -> f64 {
        self.mass
    }
}

/// `factor * F_0`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<'a, D: ?Sized> {
    pub inner: &'a D,
    pub factor: f64,
}

impl<D: InitialData + ?Sized> InitialData for Scaled<'_, D> {
    fn value(&self, x: f64) -> f64 {
        self.factor * self.inner.value(x)
    }

    fn slope(&self, x: f64) -> f64 {
        self.factor * self.inner.slope(x)
    }

    fn second_moment(&self) -> f64 {
        self.factor * self.inner.second_moment()
    }
}

/// Integrated characteristics. `paths[i][j]` is the state of start `i` at
/// `times[j]`; a terminated path is shorter than `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicFan {
    pub starts: Vec<f64>,
    pub times: Vec<f64>,
    pub paths: Vec<Vec<CharacteristicState>>,
    pub terminated: Vec<bool>,
    pub m: f64,
    pub t_star: f64,
}

/// Geometric starts from just right of `(m + 1/2) t_end`, so no path can
/// reach the boundary before `t_end`, to `x_hi + (m + 1/2) t_end + 1`, so
/// the right edge stays beyond `x_hi`.
pub fn fan_starts(m: f64, t_end: f64, x_hi: f64, count: usize) -> Vec<f64> {
    let drift = (m + 0.5) * t_end;
    let first = drift + 1e-3;
    geometric_points(first, x_hi + drift + 1.0, count.max(2))
}

fn rk4(state: CharacteristicState, m: f64, h: f64) -> Result<CharacteristicState, CharacteristicsError> {
    let add = |s: CharacteristicState, k: (f64, f64, f64), c: f64| CharacteristicState {
        x: s.x + c * k.0,
        p: s.p + c * k.1,
        z: s.z + c * k.2,
    };
    let k1 = char_rhs(state, m)?;
    let k2 = char_rhs(add(state, k1, 0.5 * h), m)?;
    let k3 = char_rhs(add(state, k2, 0.5 * h), m)?;
    let k4 = char_rhs(add(state, k3, h), m)?;
    Ok(CharacteristicState {
        x: state.x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        p: state.p + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        z: state.z + h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
    })
}

fn time_grid(t_end: f64, dt: f64) -> Vec<f64> {
    if t_end == 0.0 {
        return vec![0.0];
    }
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..steps).map(|j| j as f64 * dt).collect();
    times.push(t_end);
    times
}

/// Integrates one characteristic per start up to `t_end`.
///
/// Fails if `F_0'` leaves `[0, m]` at a start, if `t_end >= T*`, or if two
/// characteristics cross.
pub fn integrate_fan(
    initial: &dyn InitialData,
    starts: &[f64],
    t_end: f64,
    dt: f64,
    m: f64,
) -> Result<CharacteristicFan, CharacteristicsError> {
    if starts.is_empty() {
        return Err(CharacteristicsError::InvalidSetup("no starts".into()));
    }
    if starts.windows(2).any(|w| w[1] <= w[0]) || starts[0] <= 0.0 {
        return Err(CharacteristicsError::InvalidSetup("starts must be positive and strictly increasing".into()));
    }
    if !(dt > 0.0 && t_end >= 0.0 && m > 0.0) {
        return Err(CharacteristicsError::InvalidSetup(format!("dt = {dt}, t_end = {t_end}, m = {m}")));
    }
    let t_star = 1.0 / initial.second_moment();
    if t_end >= t_star {
        return Err(CharacteristicsError::BeyondHorizon { t_end, t_star });
    }
    let slope_tol = 1e-12 * m;
    let mut initial_states = Vec::with_capacity(starts.len());
    for &x in starts {
        let p = initial.slope(x);
        if !(p >= -slope_tol && p <= m + slope_tol) {
            return Err(CharacteristicsError::InvalidInitialSlope { x, slope: p, m });
        }
        initial_states.push(CharacteristicState { x, p, z: initial.value(x) });
    }
    let times = time_grid(t_end, dt);

    let results: Vec<(Vec<CharacteristicState>, bool)> = initial_states
        .into_par_iter()
        .map(|s0| {
            let mut path = Vec::with_capacity(times.len());
            path.push(s0);
            let mut state = s0;
            for w in times.windows(2) {
                match rk4(state, m, w[1] - w[0]) {
                    Ok(next) if next.x > X_MIN => {
                        state = next;
                        path.push(next);
                    }
                    _ => return (path, true),
                }
            }
            (path, false)
        })
        .collect();
    let (paths, terminated): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let fan = CharacteristicFan {
        starts: starts.to_vec(),
        times,
        paths,
        terminated,
        m,
        t_star,
    };
    if let Some((t, a, b)) = fan.first_crossing() {
        return Err(CharacteristicsError::Crossing { t, a, b });
    }
    Ok(fan)
}

/// Monotone cubic Hermite interpolation of `F` over the characteristics
/// alive at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FanSlice {
    pub t: f64,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub p: Vec<f64>,
}

impl FanSlice {
    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn locate(&self, x: f64) -> Result<usize, CharacteristicsError> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return Err(CharacteristicsError::CoverageGap { x, t: self.t, lo, hi });
        }
        let i = self.x.partition_point(|&v| v <= x);
        Ok(i.clamp(1, self.x.len() - 1) - 1)
    }

    /// `(F, F_x, F_xx)` at `x`. `F` is the limited Hermite cubic; `F_x`
    /// interpolates `P` linearly and `F_xx` is the slope of that line.
    pub fn eval(&self, x: f64) -> Result<(f64, f64, f64), CharacteristicsError> {
        if self.x.len() == 1 {
            let (lo, _) = self.range();
            if x == lo {
                return Ok((self.z[0], self.p[0], f64::NAN));
            }
            return Err(CharacteristicsError::CoverageGap { x, t: self.t, lo, hi: lo });
        }
        let i = self.locate(x)?;
        let h = self.x[i + 1] - self.x[i];
        let u = (x - self.x[i]) / h;
        let secant = (self.z[i + 1] - self.z[i]) / h;
        let (mut d0, mut d1) = (self.p[i], self.p[i + 1]);
        if secant == 0.0 {
            d0 = 0.0;
            d1 = 0.0;
        } else {
            let (a, b) = (d0 / secant, d1 / secant);
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                d0 *= tau;
                d1 *= tau;
            }
        }
        let u2 = u * u;
        let u3 = u2 * u;
        let f = (2.0 * u3 - 3.0 * u2 + 1.0) * self.z[i]
            + (u3 - 2.0 * u2 + u) * h * d0
            + (-2.0 * u3 + 3.0 * u2) * self.z[i + 1]
            + (u3 - u2) * h * d1;
        let curvature = (self.p[i + 1] - self.p[i]) / h;
        let fx = self.p[i] + u * (self.p[i + 1] - self.p[i]);
        Ok((f, fx, curvature))
    }
}

impl CharacteristicFan {
    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// States alive at time index `j`, with their start index.
    fn alive(&self, j: usize) -> impl Iterator<Item = (usize, &CharacteristicState)> {
        self.paths.iter().enumerate().filter_map(move |(i, p)| p.get(j).map(|s| (i, s)))
    }

    fn first_crossing(&self) -> Option<(f64, f64, f64)> {
        for (j, &t) in self.times.iter().enumerate() {
            let mut prev: Option<(usize, f64)> = None;
            for (i, s) in self.alive(j) {
                if let Some((pi, px)) = prev {
                    if s.x - px <= CROSSING_GAP {
                        return Some((t, self.starts[pi], self.starts[i]));
                    }
                }
                prev = Some((i, s.x));
            }
        }
        None
    }

    pub fn slice_at_index(&self, j: usize) -> Result<FanSlice, CharacteristicsError> {
        let t = *self
            .times
            .get(j)
            .ok_or(CharacteristicsError::TimeOutOfRange { t: f64::NAN, t_end: self.t_end() })?;
        let mut slice = FanSlice { t, x: Vec::new(), z: Vec::new(), p: Vec::new() };
        for (_, s) in self.alive(j) {
            slice.x.push(s.x);
            slice.z.push(s.z);
            slice.p.push(s.p);
        }
        if slice.x.is_empty() {
            return Err(CharacteristicsError::CoverageGap { x: f64::NAN, t, lo: f64::NAN, hi: f64::NAN });
        }
        Ok(slice)
    }

    /// Covered x-range at time index `j`.
    pub fn reach(&self, j: usize) -> Option<(f64, f64)> {
        let mut it = self.alive(j).map(|(_, s)| s.x);
        let first = it.next()?;
        Some((first, it.last().unwrap_or(first)))
    }

    fn bracket(&self, t: f64) -> Result<(usize, f64), CharacteristicsError> {
        let t_end = self.t_end();
        let eps = 1e-12 * t_end.max(1.0);
        if !(t >= -eps && t <= t_end + eps) {
            return Err(CharacteristicsError::TimeOutOfRange { t, t_end });
        }
        let j = self.times.partition_point(|&v| v <= t + eps);
        let j = j.max(1) - 1;
        if j + 1 >= self.times.len() || (t - self.times[j]).abs() <= eps {
            return Ok((j, 0.0));
        }
        Ok((j, (t - self.times[j]) / (self.times[j + 1] - self.times[j])))
    }

    /// `(F, F_x, F_xx)` at `(x, t)`; between recorded times the two
    /// neighbouring slices are blended linearly.
    pub fn reconstruct_full(&self, x: f64, t: f64) -> Result<(f64, f64, f64), CharacteristicsError> {
        let (j, w) = self.bracket(t)?;
        let a = self.slice_at_index(j)?.eval(x)?;
        if w == 0.0 {
            return Ok(a);
        }
        let b = self.slice_at_index(j + 1)?.eval(x)?;
        Ok((a.0 + w * (b.0 - a.0), a.1 + w * (b.1 - a.1), a.2 + w * (b.2 - a.2)))
    }

    /// `F(x, t)`.
    pub fn reconstruct(&self, x: f64, t: f64) -> Result<f64, CharacteristicsError> {
        self.reconstruct_full(x, t).map(|v| v.0)
    }

    /// The reconstruction sampled on a grid, as a field (no second-moment or
    /// perturbation data).
    pub fn reconstruct_field(&self, x_grid: &[f64], times: &[f64]) -> Result<BernsteinField, CharacteristicsError> {
        let nx = x_grid.len();
        let mut f = Vec::with_capacity(times.len());
        let mut fx = Vec::with_capacity(times.len());
        let mut fxx = Vec::with_capacity(times.len());
        for &t in times {
            let mut rows = (vec![0.0; nx], vec![0.0; nx], vec![0.0; nx]);
            for (k, &x) in x_grid.iter().enumerate() {
                let (a, b, c) = self.reconstruct_full(x, t)?;
                rows.0[k] = a;
                rows.1[k] = b;
                rows.2[k] = c;
            }
            f.push(rows.0);
            fx.push(rows.1);
            fxx.push(rows.2);
        }
        BernsteinField::from_samples(x_grid.to_vec(), times.to_vec(), f, fx, fxx, vec![f64::NAN; times.len()])
            .map_err(|e| CharacteristicsError::InvalidSetup(e.to_string()))
    }

    /// Largest ratio `(dX at t=0) / (dX at t)` between neighbouring starts:
    /// how much the fan has compressed, a proxy for the conditioning of the
    /// inverse map `x -> start`.
    pub fn compression(&self) -> f64 {
        let mut worst: f64 = 1.0;
        for i in 0..self.paths.len().saturating_sub(1) {
            let (a, b) = (&self.paths[i], &self.paths[i + 1]);
            let d0 = b[0].x - a[0].x;
            for j in 0..a.len().min(b.len()) {
                worst = worst.max(d0 / (b[j].x - a[j].x));
            }
        }
        worst
    }
}

/// Per-path and cross-path checks on a fan:
///
/// - `p_monotone_in_time`: `P` nondecreasing along each path (abs. 1e-10);
/// - `dp_nonnegative`: `P' >= -1e-10` at every state;
/// - `p_range`: `0 <= P <= m`;
/// - `dx_band`: `-(m + 1/2) <= X' <= -1/2`, up to rounding;
/// - `x_ordering`: `X` strictly increasing across starts;
/// - `slope_quotient`: `dZ/dX` between neighbours in `[0, m]`;
/// - `curvature_quotient`: `dP/dX` between neighbours in `[-1/(T*-t), 0]`;
/// - `spread_growth`: `e^{s/(T*-T)} dX(s)` nondecreasing in `s`.
pub fn monotone_derivative_checks(fan: &CharacteristicFan) -> Vec<BoundReport> {
    let m = fan.m;
    let round = 8.0 * f64::EPSILON * (m + 1.0);
    let mut p_time = BoundTracker::new("p_monotone_in_time", P_MONOTONE_TOL);
    let mut dp = BoundTracker::new("dp_nonnegative", P_MONOTONE_TOL);
    let mut p_range = BoundTracker::new("p_range", round);
    let mut dx_band = BoundTracker::new("dx_band", round);
    let mut ordering = BoundTracker::new("x_ordering", 0.0);
    let mut slope = BoundTracker::new("slope_quotient", 1e-9 * m);
    let mut curvature = BoundTracker::new("curvature_quotient", 1e-2);
    let mut spread = BoundTracker::new("spread_growth", 1e-8);

    for (i, path) in fan.paths.iter().enumerate() {
        let x0 = fan.starts[i];
        for (j, s) in path.iter().enumerate() {
            let t = fan.times[j];
            if j > 0 {
                p_time.observe(s.p - path[j - 1].p, t, x0);
            }
            if let Ok((dxdt, dpdt, _)) = char_rhs(*s, m) {
                dp.observe(dpdt, t, x0);
                dx_band.observe((dxdt + m + 0.5).min(-0.5 - dxdt), t, x0);
            }
            p_range.observe(s.p.min(m - s.p), t, x0);
        }
    }

    let horizon = fan.t_end();
    let rate = 1.0 / (fan.t_star - horizon);
    for (j, &t) in fan.times.iter().enumerate() {
        let bound = 1.0 / (fan.t_star - t);
        let alive: Vec<(usize, &CharacteristicState)> = fan.alive(j).collect();
        for w in alive.windows(2) {
            let ((ia, a), (_, b)) = (w[0], w[1]);
            let x0 = fan.starts[ia];
            let dx = b.x - a.x;
            ordering.observe(dx - CROSSING_GAP, t, x0);
            if dx > 0.0 {
                let q = (b.z - a.z) / dx;
                slope.observe(q.min(m - q), t, x0);
                let c = (b.p - a.p) / dx;
                curvature.observe((-c / bound).min(c / bound + 1.0), t, x0);
            }
        }
    }
    for i in 0..fan.paths.len().saturating_sub(1) {
        let (a, b) = (&fan.paths[i], &fan.paths[i + 1]);
        let len = a.len().min(b.len());
        for j in 1..len {
            let g_prev = (fan.times[j - 1] * rate).exp() * (b[j - 1].x - a[j - 1].x);
            let g = (fan.times[j] * rate).exp() * (b[j].x - a[j].x);
            spread.observe((g - g_prev) / g_prev, fan.times[j], fan.starts[i]);
        }
    }

    vec![
        p_time.finish(),
        dp.finish(),
        p_range.finish(),
        dx_band.finish(),
        ordering.finish(),
        slope.finish(),
        curvature.finish(),
        spread.finish(),
    ]
}

/// Fan resolution used by [`ordering_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanSettings {
    pub paths: usize,
    pub dt: f64,
    pub x_hi: f64,
}

impl Default for FanSettings {
    fn default() -> Self {
        Self { paths: 2000, dt: 1e-3, x_hi: 5.0 }
    }
}

/// Whether `F_low(x, t) <= F_high(x, t) + 1e-6` over the range both fans
/// cover at time `t`.
pub fn ordering_check(
    low: &dyn InitialData,
    high: &dyn InitialData,
    t: f64,
    m: f64,
    settings: FanSettings,
) -> Result<bool, CharacteristicsError> {
    let starts = fan_starts(m, t, settings.x_hi, settings.paths);
    let fan_low = integrate_fan(low, &starts, t, settings.dt, m)?;
    let fan_high = integrate_fan(high, &starts, t, settings.dt, m)?;
    let j = fan_low.times.len() - 1;
    let (a_lo, a_hi) = fan_low.reach(j).ok_or(CharacteristicsError::InvalidSetup("empty fan".into()))?;
    let (b_lo, b_hi) = fan_high.reach(j).ok_or(CharacteristicsError::InvalidSetup("empty fan".into()))?;
    let (lo, hi) = (a_lo.max(b_lo), a_hi.min(b_hi));
    if lo >= hi {
        return Err(CharacteristicsError::InvalidSetup("fans share no common range".into()));
    }
    let low_slice = fan_low.slice_at_index(j)?;
    let high_slice = fan_high.slice_at_index(j)?;
    for k in 0..=400 {
        let x = (lo + (hi - lo) * k as f64 / 400.0).clamp(lo, hi);
        if low_slice.eval(x)?.0 > high_slice.eval(x)?.0 + 1e-6 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(x: f64, p: f64, z: f64) -> CharacteristicState {
        CharacteristicState { x, p, z }
    }

    #[test]
    fn rhs_instances() {
        assert_eq!(char_rhs(st(1.0, 1.0, 1.0), 1.0).unwrap(), (-0.5, 0.0, -0.5));
        assert_eq!(char_rhs(st(2.0, 0.0, 0.0), 1.0).unwrap(), (-1.5, 0.0, 0.0));
        let (_, dp, _) = char_rhs(st(0.7, 0.3, 0.21), 1.4).unwrap();
        assert!(dp.abs() < 1e-15);
        assert!(matches!(char_rhs(st(0.0, 0.0, 0.0), 1.0), Err(CharacteristicsError::SingularBoundary(_))));
    }

    #[test]
    fn left_edge_speed() {
        let f0 = Monodisperse { mass: 1.0 };
        let (dx, _, _) = char_rhs(st(1e-12, f0.slope(1e-12), f0.value(1e-12)), 1.0).unwrap();
        assert!((dx + 0.5).abs() < 1e-11);
    }

    #[test]
    fn zero_horizon_fan_is_initial_data() {
        let f0 = Monodisperse { mass: 1.0 };
        let starts = [0.5, 1.0, 2.0];
        let fan = integrate_fan(&f0, &starts, 0.0, 1e-3, 1.0).unwrap();
        assert_eq!(fan.times, vec![0.0]);
        for (i, &x) in starts.iter().enumerate() {
            assert_eq!(fan.paths[i], vec![st(x, f0.slope(x), f0.value(x))]);
        }
    }

    #[test]
    fn invalid_slope_and_horizon() {
        let f0 = Monodisperse { mass: 2.0 };
        assert!(matches!(
            integrate_fan(&f0, &[0.5], 0.1, 1e-3, 1.0),
            Err(CharacteristicsError::InvalidInitialSlope { .. })
        ));
        assert!(matches!(
            integrate_fan(&f0, &[0.5], 0.5, 1e-3, 2.0),
            Err(CharacteristicsError::BeyondHorizon { .. })
        ));
    }

    #[test]
    fn reconstruction_at_start_and_gap() {
        let f0 = Monodisperse { mass: 1.0 };
        let starts = fan_starts(1.0, 0.3, 5.0, 2000);
        let fan = integrate_fan(&f0, &starts, 0.3, 1e-3, 1.0).unwrap();
        for k in 0..200 {
            let x = 0.5 + 4.5 * k as f64 / 199.0;
            assert!((fan.reconstruct(x, 0.0).unwrap() - f0.value(x)).abs() < 1e-6);
        }
        assert!(matches!(fan.reconstruct(0.1, 0.0), Err(CharacteristicsError::CoverageGap { .. })));
        assert!(monotone_derivative_checks(&fan).iter().all(|r| r.passed()));
    }

    #[test]
    fn corrupted_path_is_flagged() {
        let f0 = Monodisperse { mass: 1.0 };
        let starts = fan_starts(1.0, 0.1, 3.0, 20);
        let mut fan = integrate_fan(&f0, &starts, 0.1, 1e-2, 1.0).unwrap();
        fan.paths[10][5].p -= 0.1;
        let reports = monotone_derivative_checks(&fan);
        let p_time = reports.iter().find(|r| r.name == "p_monotone_in_time").unwrap();
        assert!(!p_time.passed());
    }

    #[test]
    fn single_path_cross_checks_vacuous() {
        let f0 = Monodisperse { mass: 1.0 };
        let fan = integrate_fan(&f0, &[1.0], 0.2, 1e-2, 1.0).unwrap();
        let reports = monotone_derivative_checks(&fan);
        assert!(reports.iter().all(|r| r.passed()));
        let ordering = reports.iter().find(|r| r.name == "x_ordering").unwrap();
        assert_eq!(ordering.evaluations, 0);
    }

    #[test]
    fn ordering_cases() {
        let high = Monodisperse { mass: 1.0 };
        let low = Scaled { inner: &high, factor: 0.9 };
        let settings = FanSettings { paths: 400, dt: 2e-3, x_hi: 5.0 };
        assert!(ordering_check(&high, &high, 0.3, 1.0, settings).unwrap());
        assert!(ordering_check(&low, &high, 0.3, 1.0, settings).unwrap());
        assert!(!ordering_check(&high, &low, 0.3, 1.0, settings).unwrap());
    }
}

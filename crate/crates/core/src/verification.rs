//! Checkers for the quantitative bounds satisfied by solutions: the
//! second-moment envelope, Hölder moment inequalities, the moment ODEs, the
//! a-priori cap on `dm_2/dt` and the derivative bounds of the transform.
//!
//! Every check returns a [`BoundReport`] whose `worst_margin` is a signed
//! distance to the bound (negative means violated); a check fails iff the
//! margin drops below minus its tolerance.

use std::fmt;
use std::sync::OnceLock;

use crate::bernstein::{BernsteinField, MonotonicityReport};
use crate::error::VerificationError;
use crate::model::ScenarioParams;
use crate::numerics::golden_section_max;

pub const ENVELOPE_TOL: f64 = 1e-3;
pub const ENVELOPE_FRACTION: f64 = 0.8;
pub const HOLDER_TOL: f64 = 1e-9;
pub const DERIVATIVE_TOL: f64 = 1e-2;
pub const CAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        })
    }
}

/// Outcome of one named check. `t` and `x_or_k` locate the worst case
/// (`NaN` when the check saw no data).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub status: Status,
    pub worst_margin: f64,
    pub t: f64,
    pub x_or_k: f64,
    pub tolerance: f64,
    pub evaluations: usize,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Accumulates margins and keeps the worst one.
#[derive(Debug, Clone)]
pub struct BoundTracker {
    name: String,
    tolerance: f64,
    worst: f64,
    t: f64,
    x_or_k: f64,
    evaluations: usize,
    failed: bool,
}

impl BoundTracker {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            tolerance,
            worst: f64::INFINITY,
            t: f64::NAN,
            x_or_k: f64::NAN,
            evaluations: 0,
            failed: false,
        }
    }

    pub fn observe(&mut self, margin: f64, t: f64, x_or_k: f64) {
        self.evaluations += 1;
        // NaN margins count as violations
        if margin.is_nan() || margin < -self.tolerance {
            self.failed = true;
        }
        if margin.is_nan() || margin < self.worst {
            self.worst = margin;
            self.t = t;
            self.x_or_k = x_or_k;
        }
    }

    pub fn finish(self) -> BoundReport {
        let failed = self.failed;
        BoundReport {
            name: self.name,
            status: if failed { Status::Fail } else { Status::Pass },
            worst_margin: self.worst,
            t: self.t,
            x_or_k: self.x_or_k,
            tolerance: self.tolerance,
            evaluations: self.evaluations,
        }
    }
}

/// `1 / (1/m2_0 - t)`.
pub fn second_moment_envelope(m2_0: f64, t: f64) -> Result<f64, VerificationError> {
    if !(m2_0 > 0.0) || !(t >= 0.0) {
        return Err(VerificationError::InvalidInput(format!("m2_0 = {m2_0}, t = {t}")));
    }
    let t_star = 1.0 / m2_0;
    if t >= t_star {
        return Err(VerificationError::BeyondHorizon { t, t_star });
    }
    Ok(1.0 / (t_star - t))
}

/// One envelope report per time `t <= 0.8 T*`, margin `1 - m_2 / envelope`.
pub fn envelope_rows(times: &[f64], m2: &[f64], m2_0: f64) -> Result<Vec<BoundReport>, VerificationError> {
    envelope_rows_with(times, m2, m2_0, ENVELOPE_TOL)
}

/// [`envelope_rows`] with a custom relative tolerance (stochastic runs use
/// their standard error).
pub fn envelope_rows_with(times: &[f64], m2: &[f64], m2_0: f64, tolerance: f64) -> Result<Vec<BoundReport>, VerificationError> {
    if times.len() != m2.len() {
        return Err(VerificationError::InvalidInput("times and m2 lengths differ".into()));
    }
    let limit = ENVELOPE_FRACTION / m2_0;
    let mut rows = Vec::new();
    for (&t, &v) in times.iter().zip(m2) {
        if t > limit {
            continue;
        }
        let env = second_moment_envelope(m2_0, t)?;
        let mut tracker = BoundTracker::new("second_moment_envelope", tolerance);
        tracker.observe(1.0 - v / env, t, 2.0);
        rows.push(tracker.finish());
    }
    Ok(rows)
}

/// Aggregate envelope check over all times `t <= 0.8 T*`.
pub fn envelope_check(times: &[f64], m2: &[f64], m2_0: f64) -> Result<BoundReport, VerificationError> {
    let rows = envelope_rows(times, m2, m2_0)?;
    let mut tracker = BoundTracker::new("second_moment_envelope", ENVELOPE_TOL);
    for r in rows {
        tracker.observe(r.worst_margin, r.t, r.x_or_k);
    }
    Ok(tracker.finish())
}

/// `m_4 m_1^2 >= m_2^3` and `m_5 m_1 >= m_3^2` at every time, as relative
/// margins `m_4 m_1^2 / m_2^3 - 1` and `m_5 m_1 / m_3^2 - 1`; `x_or_k` names
/// the higher moment involved.
pub fn holder_bounds_check(times: &[f64], moments: &[[f64; 6]]) -> BoundReport {
    let mut tracker = BoundTracker::new("holder_moments", HOLDER_TOL);
    for (&t, m) in times.iter().zip(moments) {
        if !(m[1] > 0.0) {
            continue;
        }
        tracker.observe(m[4] * m[1] * m[1] / m[2].powi(3) - 1.0, t, 4.0);
        tracker.observe(m[5] * m[1] / (m[3] * m[3]) - 1.0, t, 5.0);
    }
    tracker.finish()
}

const GAUSS_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Coefficient `c_p` with `frag weak form of s^p = -c_p s^{p+1} b`, i.e.
/// `1/2 * int_0^1 (1 - (1-u)^p - u^p) du`, by Gauss-Legendre quadrature
/// (exact for the polynomial integrand when `p <= 7`).
fn fragmentation_coefficient_by_quadrature(p: i32) -> f64 {
    let integral: f64 = GAUSS_NODES
        .iter()
        .zip(GAUSS_WEIGHTS)
        .map(|(&z, w)| {
            let u = 0.5 * (z + 1.0);
            0.5 * w * (1.0 - (1.0 - u).powi(p) - u.powi(p))
        })
        .sum();
    0.5 * integral
}

fn coefficients() -> &'static [f64; 2] {
    static COEFFS: OnceLock<[f64; 2]> = OnceLock::new();
    COEFFS.get_or_init(|| [fragmentation_coefficient_by_quadrature(2), fragmentation_coefficient_by_quadrature(3)])
}

/// Fragmentation loss coefficient in `dm_k/dt` for `k` in `{2, 3}`.
pub fn fragmentation_coefficient(k: usize) -> Result<f64, VerificationError> {
    match k {
        2 => Ok(coefficients()[0]),
        3 => Ok(coefficients()[1]),
        _ => Err(VerificationError::InvalidInput(format!("moment ODE order {k} not in {{2, 3}}"))),
    }
}

/// Right-hand side of the closed moment equations
///
/// ```text
/// dm_2/dt = m_2^2      - c_2 (m_3 + eps m_4)
/// dm_3/dt = 3 m_2 m_3  - c_3 (m_4 + eps m_5)
/// ```
///
/// with `moments = [m_0, ..., m_5]`.
pub fn moment_ode_rhs(moments: &[f64; 6], eps: f64, k: usize) -> Result<f64, VerificationError> {
    let c = fragmentation_coefficient(k)?;
    let coag = match k {
        2 => moments[2] * moments[2],
        _ => 3.0 * moments[2] * moments[3],
    };
    Ok(coag - c * (moments[k + 1] + eps * moments[k + 2]))
}

/// `max_{y >= 0} y^2 - (eps/6) y^3 / m^2`, found by golden-section search.
pub fn a_priori_cap(m: f64, eps: f64) -> Result<f64, VerificationError> {
    if eps == 0.0 {
        return Err(VerificationError::NoCap);
    }
    if !(eps > 0.0 && m > 0.0) {
        return Err(VerificationError::InvalidInput(format!("m = {m}, eps = {eps}")));
    }
    let f = |y: f64| y * y - eps / 6.0 * y.powi(3) / (m * m);
    let root = 6.0 * m * m / eps;
    let y = golden_section_max(f, 0.0, root, 1e-12);
    Ok(f(y))
}

/// Along a moment series: `m_2^2 - (eps/6) m_4 <= m_2^2 - (eps/6) m_2^3/m^2
/// <= C`, margins relative to `C`.
pub fn a_priori_cap_check(times: &[f64], moments: &[[f64; 6]], m: f64, eps: f64) -> Result<BoundReport, VerificationError> {
    let cap = a_priori_cap(m, eps)?;
    let mut tracker = BoundTracker::new("a_priori_cap", CAP_TOL);
    for (&t, mm) in times.iter().zip(moments) {
        let exact = mm[2] * mm[2] - eps / 6.0 * mm[4];
        let holder = mm[2] * mm[2] - eps / 6.0 * mm[2].powi(3) / (m * m);
        let scale = cap.max(mm[2] * mm[2]);
        tracker.observe((holder - exact) / scale, t, 2.0);
        tracker.observe((cap - holder) / cap, t, 2.0);
    }
    Ok(tracker.finish())
}

/// `0 <= F_x <= m`, `-1/(T*-T) <= F_xx <= 0` and
/// `|F_t| <= m(m+5)/2 + 3/(T*-T)` on a field whose times lie in `[0, T]`.
/// Margins are relative to the respective bound; the time bound needs at
/// least three snapshots and is vacuous otherwise.
pub fn derivative_bounds_check(
    field: &BernsteinField,
    scenario: &ScenarioParams,
    horizon: f64,
) -> Result<Vec<BoundReport>, VerificationError> {
    let t_star = scenario.t_star();
    if horizon >= t_star {
        return Err(VerificationError::BeyondHorizon { t: horizon, t_star });
    }
    if let Some(t) = field.times.iter().find(|&&t| t < 0.0 || t > horizon) {
        return Err(VerificationError::InvalidInput(format!("field time {t} outside [0, {horizon}]")));
    }
    let m = scenario.mass();
    let curvature = 1.0 / (t_star - horizon);
    let mut fx = BoundTracker::new("first_derivative_bounds", DERIVATIVE_TOL);
    let mut fxx = BoundTracker::new("second_derivative_bounds", DERIVATIVE_TOL);
    for (ti, &t) in field.times.iter().enumerate() {
        for (xi, &x) in field.x_grid.iter().enumerate() {
            let p = field.fx[ti][xi];
            fx.observe((p / m).min((m - p) / m), t, x);
            let q = field.fxx[ti][xi];
            fxx.observe((-q / curvature).min(q / curvature + 1.0), t, x);
        }
    }
    let time_bound = 0.5 * m * (m + 5.0) + 3.0 * curvature;
    let mut ft = BoundTracker::new("time_derivative_bound", DERIVATIVE_TOL);
    if let Ok(dt) = field.time_derivative() {
        for (ti, &t) in field.times.iter().enumerate() {
            for (xi, &x) in field.x_grid.iter().enumerate() {
                ft.observe(1.0 - dt[ti][xi].abs() / time_bound, t, x);
            }
        }
    }
    Ok(vec![fx.finish(), fxx.finish(), ft.finish()])
}

/// Wraps a monotonicity report: the margin is the smallest signed derivative
/// `(-1)^{k-1} d^k F` seen and `x_or_k` is its order.
pub fn monotonicity_bound_report(name: &str, report: &MonotonicityReport) -> BoundReport {
    let mut tracker = BoundTracker::new(name, report.tolerance);
    for v in &report.violations {
        tracker.observe(v.value, v.t.unwrap_or(f64::NAN), v.k as f64);
    }
    if let Some(w) = report.worst {
        tracker.observe(w.value, w.t.unwrap_or(f64::NAN), w.k as f64);
    }
    let mut out = tracker.finish();
    out.evaluations = report.evaluations;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_values() {
        assert_eq!(second_moment_envelope(2.0, 0.25).unwrap(), 4.0);
        assert_eq!(second_moment_envelope(1.5, 0.0).unwrap(), 1.5);
        assert!(second_moment_envelope(2.0, 0.5 - 1e-12).unwrap() > 1e11);
        assert!(matches!(second_moment_envelope(2.0, 0.5), Err(VerificationError::BeyondHorizon { .. })));
    }

    #[test]
    fn envelope_rows_stop_at_fraction() {
        let times = [0.0, 0.2, 0.4, 0.45];
        let m2 = [1.0, 1.2, 1.6, 1.8];
        let rows = envelope_rows(&times, &m2, 2.0).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.passed()));
    }

    #[test]
    fn holder_cases() {
        let equal = [[1.0; 6]];
        let r = holder_bounds_check(&[0.0], &equal);
        assert!(r.passed());
        assert!(r.worst_margin.abs() < 1e-15);

        let two_point = [[2.0, 3.0, 5.0, 9.0, 17.0, 33.0]];
        let r = holder_bounds_check(&[0.0], &two_point);
        assert!(r.passed());
        assert!((r.worst_margin - (99.0 / 81.0 - 1.0)).abs() < 1e-15);

        let bad = [[1.0, 1.0, 1.0, 2.0, 1.0, 1.0]];
        let r = holder_bounds_check(&[0.5], &bad);
        assert!(!r.passed());
        assert_eq!(r.x_or_k, 5.0);
        assert_eq!(r.t, 0.5);
    }

    #[test]
    fn moment_rhs_instances() {
        let ones = [1.0; 6];
        assert!((moment_ode_rhs(&ones, 0.0, 2).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert!((moment_ode_rhs(&ones, 0.1, 2).unwrap() - 0.816_666_666_666_666_7).abs() < 1e-15);
        assert!(moment_ode_rhs(&ones, 0.0, 4).is_err());
    }

    #[test]
    fn cap_instances() {
        assert!((a_priori_cap(1.0, 1.0).unwrap() - 16.0 / 3.0).abs() < 1e-9);
        let (m, eps): (f64, f64) = (1.7, 0.05);
        let closed = 16.0 * m.powi(4) / (3.0 * eps * eps);
        assert!((a_priori_cap(m, eps).unwrap() / closed - 1.0).abs() < 1e-12);
        assert!(matches!(a_priori_cap(1.0, 0.0), Err(VerificationError::NoCap)));
    }

    #[test]
    fn time_bound_instance() {
        let sc = ScenarioParams::new(1.0, 1.0).unwrap();
        let horizon = 0.5 * sc.t_star();
        let bound = 0.5 * sc.mass() * (sc.mass() + 5.0) + 3.0 / (sc.t_star() - horizon);
        assert_eq!(bound, 9.0);
    }

    #[test]
    fn convex_field_fails_curvature() {
        let x = vec![0.0, 0.5, 1.0];
        let field = BernsteinField::from_samples(
            x,
            vec![0.0],
            vec![vec![0.0, 0.25, 1.0]],
            vec![vec![0.0, 0.5, 1.0]],
            vec![vec![2.0, 2.0, 2.0]],
            vec![f64::NAN],
        )
        .unwrap();
        let sc = ScenarioParams::new(1.0, 1.0).unwrap();
        let reports = derivative_bounds_check(&field, &sc, 0.5).unwrap();
        assert!(reports[0].passed());
        assert!(!reports[1].passed());
        assert!(reports[2].passed() && reports[2].evaluations == 0);
        assert!(derivative_bounds_check(&field, &sc, 1.0).is_err());
    }
}

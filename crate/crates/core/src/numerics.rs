//! Small numerical helpers shared by the engines.

/// Second-order derivative at `t0` from three (possibly unevenly spaced)
/// samples.
#[inline]
pub fn centered_derivative(t: [f64; 3], f: [f64; 3]) -> f64 {
    let hm = t[1] - t[0];
    let hp = t[2] - t[1];
    (hm * hm * (f[2] - f[1]) + hp * hp * (f[1] - f[0])) / (hm * hp * (hm + hp))
}

/// Second-order one-sided derivative at `t[0]` (forward) from three samples.
#[inline]
pub fn forward_derivative(t: [f64; 3], f: [f64; 3]) -> f64 {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[0];
    // derivative at t0 of the quadratic through the three points
    let a = f[0] * (-(h1 + h2)) / (h1 * h2);
    let b = f[1] * h2 / (h1 * (h2 - h1));
    let c = f[2] * (-h1) / (h2 * (h2 - h1));
    a + b + c
}

/// Second-order one-sided derivative at `t[2]` (backward) from three samples.
#[inline]
pub fn backward_derivative(t: [f64; 3], f: [f64; 3]) -> f64 {
    -forward_derivative([-t[2], -t[1], -t[0]], [f[2], f[1], f[0]])
}

/// Time derivative of a sampled series: centered in the interior, one-sided
/// second order at the ends. Needs at least 3 samples.
pub fn time_derivative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    assert!(n >= 3 && values.len() == n);
    (0..n)
        .map(|i| {
            if i == 0 {
                forward_derivative([times[0], times[1], times[2]], [values[0], values[1], values[2]])
            } else if i == n - 1 {
                backward_derivative(
                    [times[n - 3], times[n - 2], times[n - 1]],
                    [values[n - 3], values[n - 2], values[n - 1]],
                )
            } else {
                centered_derivative(
                    [times[i - 1], times[i], times[i + 1]],
                    [values[i - 1], values[i], values[i + 1]],
                )
            }
        })
        .collect()
}

/// `k! f[x_0, ..., x_k]`, the k-th divided difference scaled to estimate the
/// k-th derivative somewhere inside the stencil.
pub fn scaled_divided_difference(x: &[f64], f: &[f64]) -> f64 {
    assert_eq!(x.len(), f.len());
    let k = x.len() - 1;
    let mut table = f.to_vec();
    for level in 1..=k {
        for i in 0..=(k - level) {
            table[i] = (table[i + 1] - table[i]) / (x[i + level] - x[i]);
        }
    }
    let factorial: f64 = (1..=k).map(|j| j as f64).product();
    table[0] * factorial
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo) > rel_tol * (lo.abs() + hi.abs()).max(f64::MIN_POSITIVE) {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Geometric sequence of `count` points from `lo` to `hi` inclusive.
pub fn geometric_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                lo * (ratio * i as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_are_exact_on_quadratics() {
        let f = |t: f64| 3.0 * t * t - 2.0 * t + 1.0;
        let df = |t: f64| 6.0 * t - 2.0;
        let t = [0.1, 0.25, 0.32];
        let v = [f(t[0]), f(t[1]), f(t[2])];
        assert!((centered_derivative(t, v) - df(t[1])).abs() < 1e-12);
        assert!((forward_derivative(t, v) - df(t[0])).abs() < 1e-12);
        assert!((backward_derivative(t, v) - df(t[2])).abs() < 1e-12);
    }

    #[test]
    fn divided_difference_of_cubic() {
        let x = [0.0, 0.3, 0.7, 1.5];
        let f: Vec<f64> = x.iter().map(|v| 2.0 * v * v * v).collect();
        assert!((scaled_divided_difference(&x, &f) - 12.0).abs() < 1e-10);
    }

    #[test]
    fn golden_section_finds_peak() {
        let y = golden_section_max(|y| -(y - 2.5) * (y - 2.5), 0.0, 10.0, 1e-12);
        assert!((y - 2.5).abs() < 1e-9);
    }

    #[test]
    fn geometric_endpoints() {
        let p = geometric_points(1e-3, 20.0, 50);
        assert_eq!(p[0], 1e-3);
        assert_eq!(p[49], 20.0);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }
}

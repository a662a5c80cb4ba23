use proptest::prelude::*;

use cf_lab::bernstein::{complete_monotonicity_report, transform, MonotonicitySource};
use cf_lab::kinetic::{coagulation_rhs, fragmentation_rhs};
use cf_lab::model::{coag_kernel, frag_kernel, Distribution, KernelSpec, SizeGrid};
use cf_lab::verification::holder_bounds_check;

fn counts(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..2.0f64], n)
}

fn dist(ds: f64, c: Vec<f64>) -> Distribution {
    Distribution::new(SizeGrid::new(ds, c.len()).unwrap(), c).unwrap()
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * scale.max(1.0)
}

proptest! {
    #[test]
    fn kernels_are_symmetric(s in 0.0..50.0f64, t in 0.0..50.0f64, eps in 0.0..1.0f64) {
        let spec = KernelSpec::new(eps, 8).unwrap();
        prop_assert_eq!(coag_kernel(s, t), coag_kernel(t, s));
        prop_assert_eq!(frag_kernel(&spec, s, t), frag_kernel(&spec, t, s));
    }

    #[test]
    fn fragmentation_is_linear(a in counts(24), b in counts(24), alpha in 0.0..3.0f64, beta in 0.0..3.0f64, eps in 0.0..0.5f64) {
        let (da, db) = (dist(0.5, a), dist(0.5, b));
        let spec = KernelSpec::for_grid(eps, da.grid()).unwrap();
        let mixed = da.combine(alpha, &db, beta).unwrap();
        let lhs = fragmentation_rhs(&mixed, &spec);
        let (ra, rb) = (fragmentation_rhs(&da, &spec), fragmentation_rhs(&db, &spec));
        let scale = lhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..lhs.len() {
            prop_assert!(close(lhs[i], alpha * ra[i] + beta * rb[i], scale));
        }
    }

    #[test]
    fn coagulation_is_quadratic(a in counts(20), lambda in 0.0..4.0f64) {
        let da = dist(0.25, a.clone());
        let spec = KernelSpec::for_grid(0.0, da.grid()).unwrap();
        let scaled = dist(0.25, a.iter().map(|v| v * lambda).collect());
        let (r1, r2) = (coagulation_rhs(&da, &spec), coagulation_rhs(&scaled, &spec));
        let scale = r2.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..r1.len() {
            prop_assert!(close(r2[i], lambda * lambda * r1[i], scale));
        }
    }

    #[test]
    fn rates_conserve_mass(c in counts(32), eps in 0.0..1.0f64, trunc in 2usize..40) {
        let d = dist(0.5, c);
        let spec = KernelSpec::new(eps, trunc).unwrap();
        let sizes = d.grid().sizes();
        let coag: f64 = coagulation_rhs(&d, &spec).iter().zip(&sizes).map(|(r, s)| r * s).sum();
        let frag: f64 = fragmentation_rhs(&d, &spec).iter().zip(&sizes).map(|(r, s)| r * s).sum();
        let scale = d.moments()[2] * d.mass() + d.moments()[2] * (1.0 + eps * 16.0);
        prop_assert!(coag.abs() <= 1e-12 * scale.max(1.0));
        prop_assert!(frag.abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn transform_is_additive(a in counts(16), b in counts(16), x in 0.0..10.0f64) {
        let (da, db) = (dist(0.5, a), dist(0.5, b));
        let sum = da.combine(1.0, &db, 1.0).unwrap();
        let f = |d: &Distribution| transform(d, &[x], 0.0).unwrap();
        let (fa, fb, fs) = (f(&da), f(&db), f(&sum));
        prop_assert!(close(fs.f[0][0], fa.f[0][0] + fb.f[0][0], fs.f[0][0]));
        prop_assert!(close(fs.fx[0][0], fa.fx[0][0] + fb.fx[0][0], fs.fx[0][0]));
    }

    #[test]
    fn holder_holds_for_any_distribution(c in counts(40)) {
        prop_assume!(c.iter().any(|v| *v > 0.0));
        let d = dist(0.25, c);
        prop_assert!(holder_bounds_check(&[0.0], &[d.moments()]).passed());
    }

    #[test]
    fn distributions_are_completely_monotone(c in counts(30)) {
        let d = dist(0.5, c);
        let x = [0.0, 0.01, 0.1, 0.5, 1.0, 3.0, 10.0];
        let r = complete_monotonicity_report(MonotonicitySource::Exact(&d), 6, &x).unwrap();
        prop_assert!(r.pass);
    }
}

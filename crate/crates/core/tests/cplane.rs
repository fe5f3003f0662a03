use phaseint::cplane::{contour_integrate, find_zeros_poles, PathSpec, RationalIntegrand};
use phaseint::{c64, C64};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn point(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(a, b)| c64(a, b))
}

/// Entire, oscillating, and of modest size on the sampled region.
fn f(z: C64) -> C64 {
    (0.5 * z).exp() * (2.0 * z).cos() + z * z
}

fn path() -> impl Strategy<Value = PathSpec> {
    prop::collection::vec(point(2.0), 2..6).prop_filter_map("distinct waypoints", |w| PathSpec::open(w).ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn splitting_a_segment_changes_little(p in path(), t in 0.05f64..0.95, k in 0usize..8) {
        let w = p.waypoints().to_vec();
        let i = k % (w.len() - 1);
        let mid = w[i] + (w[i + 1] - w[i]) * t;
        let mut split = w.clone();
        split.insert(i + 1, mid);
        let a = contour_integrate(f, &p, TOL).unwrap().value;
        let b = contour_integrate(f, &PathSpec::open(split).unwrap(), TOL).unwrap().value;
        prop_assert!((a - b).norm() < 2.0 * TOL, "{}", (a - b).norm());
    }

    #[test]
    fn reversal_negates(p in path()) {
        let a = contour_integrate(f, &p, TOL).unwrap().value;
        let b = contour_integrate(f, &p.reversed(), TOL).unwrap().value;
        prop_assert!((a + b).norm() < 2.0 * TOL, "{}", (a + b).norm());
    }

    #[test]
    fn roots_have_small_residuals(roots in prop::collection::vec(point(4.0), 1..7), lead in point(2.0)) {
        prop_assume!(lead.norm() > 0.1);
        // keep roots apart so multiplicities are unambiguous
        for (i, a) in roots.iter().enumerate() {
            for b in &roots[..i] {
                prop_assume!((a - b).norm() > 0.05);
            }
        }
        let coeffs = roots.iter().fold(vec![lead], |c, &r| {
            let mut next = vec![c64(0.0, 0.0); c.len() + 1];
            for (k, &a) in c.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            next
        });
        let scale = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let r = RationalIntegrand::polynomial(coeffs.clone()).unwrap();
        let s = find_zeros_poles(&r).unwrap();
        prop_assert_eq!(s.zeros.iter().map(|z| z.order as usize).sum::<usize>(), roots.len());
        for z in &s.zeros {
            let v = coeffs.iter().rev().fold(c64(0.0, 0.0), |acc, &a| acc * z.z + a);
            prop_assert!(v.norm() < 1e-10 * scale, "|p({})| = {}", z.z, v.norm());
        }
    }
}

#[test]
fn double_roots_keep_their_order() {
    // (z − 1)²(z + 2i)
    let r = RationalIntegrand::polynomial(vec![c64(0.0, 2.0), c64(1.0, -4.0), c64(-2.0, 2.0), c64(1.0, 0.0)]).unwrap();
    let s = find_zeros_poles(&r).unwrap();
    let double = s.zeros.iter().find(|z| z.order == 2).expect("double root");
    assert!((double.z - 1.0).norm() < 1e-6);
    // the first derivative vanishes there as well
    let d = 2.0 * (double.z - 1.0) * (double.z + c64(0.0, 2.0)) + (double.z - 1.0).powi(2);
    assert!(d.norm() < 1e-10 * 4.0, "{}", d.norm());
}

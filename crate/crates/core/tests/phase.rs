use phaseint::cplane::{PathSpec, RationalIntegrand};
use phaseint::phase::{basis_values, phase_integral, BranchSheet};
use phaseint::{c64, C64};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

/// `R = −z + g²/z` with `g = 1`: two simple zeros at ±1 and a pole at 0.
fn fig1() -> RationalIntegrand {
    RationalIntegrand::from_coeffs(
        vec![c64(1.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)],
        vec![c64(0.0, 0.0), c64(1.0, 0.0)],
    )
    .unwrap()
}

/// Waypoints in the annulus `2 < |z| < 4`, well clear of the singular points.
fn far_point() -> impl Strategy<Value = C64> {
    (2.0f64..4.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))
}

fn far_path() -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(far_point(), 2..5)
}

/// Keep chords out of the disc `|z| < 1.5`.
fn clear(w: &[C64]) -> bool {
    PathSpec::open(w.to_vec())
        .is_ok_and(|p| [c64(0.0, 0.0), c64(1.0, 0.0), c64(-1.0, 0.0)].iter().all(|&s| p.min_distance(s) > 0.5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn continued_root_squares_to_r(w in far_path().prop_filter("clear", |w| clear(w))) {
        let l = fig1();
        let path = PathSpec::open(w).unwrap();
        let sheet = BranchSheet::principal(l.clone(), path.start()).unwrap();
        let end = sheet.continue_along(&path).unwrap();
        let q = end.anchor_value();
        let r = l.eval(path.end()).unwrap();
        prop_assert!((q * q - r).norm() < 1e-10 * r.norm());
    }

    #[test]
    fn phase_integrals_add(a in far_path().prop_filter("clear", |w| clear(w)), b in far_path()) {
        let first = PathSpec::open(a.clone()).unwrap();
        let mut rest = vec![first.end()];
        rest.extend(b);
        prop_assume!(clear(&rest));
        let second = PathSpec::open(rest).unwrap();
        let whole = first.concat(&second).unwrap();
        let sheet = BranchSheet::principal(fig1(), first.start()).unwrap();
        let w1 = phase_integral(&sheet, &first, TOL).unwrap().omega;
        let w2 = phase_integral(&sheet.continue_along(&first).unwrap(), &second, TOL).unwrap().omega;
        let w = phase_integral(&sheet, &whole, TOL).unwrap().omega;
        prop_assert!((w1 + w2 - w).norm() < 2.0 * TOL, "{}", (w1 + w2 - w).norm());
    }

    #[test]
    fn wronskian_is_minus_two_i(w in far_path().prop_filter("clear", |w| clear(w))) {
        let path = PathSpec::open(w).unwrap();
        let sheet = BranchSheet::principal(fig1(), path.start()).unwrap();
        let omega = phase_integral(&sheet, &path, TOL).unwrap();
        let b = basis_values(&sheet, &omega, path.end(), f64::INFINITY).unwrap();
        let scale = (b.y_plus * b.y_minus_deriv).norm().max(1.0);
        prop_assert!((b.wronskian() - c64(0.0, -2.0)).norm() < 1e-12 * scale);
    }
}

#[test]
fn root_monodromy() {
    let l = fig1();
    let loop_around = |centre: C64, r: f64| {
        let start = centre + r;
        let mut w: Vec<C64> =
            (0..=64).map(|k| centre + C64::from_polar(r, std::f64::consts::TAU * k as f64 / 64.0)).collect();
        w[64] = start;
        PathSpec::open(w).unwrap()
    };
    // one simple zero: the root flips
    let p = loop_around(c64(1.0, 0.0), 0.5);
    let s = BranchSheet::principal(l.clone(), p.start()).unwrap();
    assert!((s.continue_along(&p).unwrap().anchor_value() + s.anchor_value()).norm() < 1e-12);
    // both zeros and the pole: total order 2 + (−1) is odd, so the root flips
    let p = loop_around(c64(0.0, 0.0), 3.0);
    let s = BranchSheet::principal(l.clone(), p.start()).unwrap();
    assert!((s.continue_along(&p).unwrap().anchor_value() + s.anchor_value()).norm() < 1e-12);
    // R = z² − 1 around both zeros: even order, the root returns
    let q = RationalIntegrand::polynomial(vec![c64(-1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]).unwrap();
    let p = loop_around(c64(0.0, 0.0), 3.0);
    let s = BranchSheet::principal(q, p.start()).unwrap();
    assert!((s.continue_along(&p).unwrap().anchor_value() - s.anchor_value()).norm() < 1e-12);
}

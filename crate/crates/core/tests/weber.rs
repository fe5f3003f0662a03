use std::f64::consts::PI;

use serde::Deserialize;

use phaseint::oracle::OracleOptions;
use phaseint::weber::{
    closed_form_constants, gamma_complex, loop_product, oracle_constant, oracle_constants, p_function, s_three_halves,
    s_three_halves_on_sheet, scattering, verify_webtrad, Domain, WeberConstants, WeberInstance,
};
use phaseint::{c64, Error, C64};

#[derive(Deserialize)]
struct GammaPoint {
    z: [f64; 2],
    gamma: [f64; 2],
}

#[derive(Deserialize)]
struct SPoint {
    delta: [f64; 2],
    s: [f64; 2],
}

#[derive(Deserialize)]
struct Fixtures {
    gamma: Vec<GammaPoint>,
    s_three_halves: Vec<SPoint>,
}

fn fixtures() -> Fixtures {
    serde_json::from_str(include_str!("data/mpmath_fixtures.json")).unwrap()
}

fn cx(v: [f64; 2]) -> C64 {
    c64(v[0], v[1])
}

#[test]
fn gamma_matches_high_precision_values() {
    for p in fixtures().gamma {
        let got = gamma_complex(cx(p.z)).unwrap();
        let want = cx(p.gamma);
        assert!((got - want).norm() <= 1e-12 * want.norm(), "Γ({:?}) = {got}, want {want}", p.z);
    }
}

#[test]
fn gamma_poles_and_modulus() {
    for n in [0.0, -1.0, -4.0] {
        assert!(matches!(gamma_complex(c64(n, 0.0)), Err(Error::PoleOfGamma(_))));
    }
    let g = gamma_complex(c64(0.5, 0.5)).unwrap();
    assert!((g.norm_sqr() - PI / (PI / 2.0).cosh()).abs() < 1e-12);
    assert!((gamma_complex(c64(5.0, 0.0)).unwrap() - 24.0).norm() < 1e-11);
}

#[test]
fn s_three_halves_matches_high_precision_values() {
    for p in fixtures().s_three_halves {
        let got = s_three_halves(cx(p.delta)).unwrap();
        let want = cx(p.s);
        assert!((got - want).norm() <= 1e-11 * want.norm(), "s({:?}) = {got}, want {want}", p.delta);
    }
}

#[test]
fn s_three_halves_reference_values() {
    let s0 = s_three_halves(c64(0.0, 0.0)).unwrap();
    assert!((s0 - c64(0.0, 2f64.sqrt())).norm() < 1e-14);
    let s1 = s_three_halves(c64(1.0, 0.0)).unwrap();
    assert!((s1.norm_sqr() - (1.0 + (-PI).exp())).abs() < 1e-12);
    // unit modulus is approached for large δ
    let s3 = s_three_halves(c64(3.0, 0.0)).unwrap();
    assert!((s3.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn flux_is_conserved() {
    for k in 0..=20 {
        let d = 0.1 * k as f64;
        let r = scattering(c64(d, 0.0)).unwrap();
        assert!(r.flux_residual() < 1e-10, "δ = {d}: {}", r.flux_residual());
    }
    let r0 = scattering(c64(0.0, 0.0)).unwrap();
    assert!((r0.r_coeff.norm_sqr() - 0.5).abs() < 1e-14);
    let r1 = scattering(c64(1.0, 0.0)).unwrap();
    let e = (-PI).exp();
    assert!((r1.r_coeff.norm_sqr() - 1.0 / (1.0 + e)).abs() < 1e-12);
    assert!((r1.t_coeff.norm_sqr() / r1.r_coeff.norm_sqr() - e).abs() < 1e-12);
}

#[test]
fn p_function_identities() {
    assert!((p_function(c64(0.0, 0.0)).unwrap() - 2f64.sqrt()).norm() < 1e-14);
    for x in [c64(0.25, 0.0), c64(-0.25, 0.0), c64(0.0, 0.5), c64(0.0, -0.5), c64(1.0, 0.3), c64(0.5, 0.0)] {
        let lhs = p_function(x).unwrap() * p_function(-x).unwrap();
        let rhs = 2.0 * (PI * x / 2.0).cos();
        assert!((lhs - rhs).norm() < 1e-10, "x = {x}: {lhs} vs {rhs}");
    }
    for x in [0.3, -0.3, 0.7, -0.7] {
        assert!(p_function(c64(x, 0.0)).unwrap().im.abs() < 1e-12);
    }
}

#[test]
fn rotation_functional_equation() {
    for d in [c64(0.5, 0.2), c64(1.0, 0.0), c64(0.3, -0.8), c64(-1.2, 0.4), c64(0.9, 0.6)] {
        let turned = s_three_halves_on_sheet(d, Some(1)).unwrap();
        let want = s_three_halves(d).unwrap() * (-PI * d * d).exp();
        assert!((turned - want).norm() < 1e-10 * want.norm().max(1.0), "δ = {d}");
    }
}

#[test]
fn seam_requires_sheet() {
    // iδ² on the negative real axis
    let d = C64::from_polar(1.2, PI / 4.0);
    assert!(matches!(s_three_halves(d), Err(Error::BranchSeam(_))));
    assert!(s_three_halves_on_sheet(d, Some(0)).is_ok());
}

#[test]
fn closed_form_satisfies_loop_relations() {
    let d = c64(1.0, 0.0);
    let s = closed_form_constants(d).unwrap();
    for r in verify_webtrad(d, &s) {
        assert!(r < 1e-10, "{r}");
    }
    let zero = WeberConstants {
        s_3_2: c64(0.0, 2f64.sqrt()),
        s_1_2: c64(0.0, 2f64.sqrt()),
        s_m1_2: c64(0.0, 2f64.sqrt()),
        s_m3_2: c64(0.0, 2f64.sqrt()),
    };
    assert!(verify_webtrad(c64(0.0, 0.0), &zero)[2] < 1e-14);
}

#[test]
fn oracle_agrees_with_closed_form() {
    let opts = OracleOptions::default();
    for d in [0.0, 0.6, 1.0] {
        let w = WeberInstance::new(c64(d, 0.0)).unwrap();
        let (e, f) = oracle_constant(&w, Domain::ThreeHalves, &opts).unwrap();
        let want = s_three_halves(c64(d, 0.0)).unwrap();
        assert!((e.s - want).norm() < 1e-3, "δ = {d}: {} vs {want}", e.s);
        assert!(e.residual < 1e-2);
        assert!(f.det_residual < 10.0 * opts.tol);
    }
}

#[test]
fn oracle_constants_close_the_loop() {
    let d = c64(1.0, 0.0);
    let s = oracle_constants(&WeberInstance::new(d).unwrap(), &OracleOptions::default()).unwrap();
    for r in verify_webtrad(d, &s) {
        assert!(r < 1e-3, "{r}");
    }
    let m = loop_product(d, &s).unwrap();
    assert!(m.max_abs_diff(&phaseint::algebra::ConnectionMatrix::identity(2)) < 1e-3);
}

#[test]
fn overlapped_domains_share_a_constant() {
    let opts = OracleOptions::default();
    for d in [0.6, 1.0] {
        let rotated = WeberInstance::new(c64(0.0, d)).unwrap();
        let plain = WeberInstance::new(c64(d, 0.0)).unwrap();
        let a = oracle_constant(&rotated, Domain::Half, &opts).unwrap().0.s;
        let b = oracle_constant(&plain, Domain::MinusHalf, &opts).unwrap().0.s;
        assert!((a - b).norm() < 1e-3, "δ = {d}: {a} vs {b}");
    }
}

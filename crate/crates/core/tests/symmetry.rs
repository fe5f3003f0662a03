use std::f64::consts::PI;

use phaseint::c64;
use phaseint::cplane::{arc_points, Expr, PathSpec};
use phaseint::oracle::{extract_stokes_constant, OracleOptions, StokesForm};
use phaseint::symmetry::{
    derive_constant_relation, purely_imaginary_check, verify_fmatrix_relation, DomainPair, DomainRef, FRelationReport,
    Provenance, Sigma, SymmetryTransform,
};
use phaseint::weber::{crossing, s_three_halves, s_three_halves_on_sheet, Domain, WeberInstance};
use phaseint::{Error, C64};

fn opts() -> OracleOptions {
    OracleOptions::with_tol(1e-10)
}

fn rotation() -> SymmetryTransform {
    SymmetryTransform::from_json(
        r#"{"f":"1","g":{"a":[0,1],"b":[0,0],"conj":false},"h":{"map":"delta->i*delta","conj":false},"mu_steps":64}"#,
    )
    .unwrap()
}

fn h_turn(turns: f64) -> SymmetryTransform {
    SymmetryTransform::from_json(&format!(
        r#"{{"h":{{"map":"delta->delta*exp(i*pi*{turns})","angle":{}}}}}"#,
        PI * turns
    ))
    .unwrap()
}

fn pair(report: &FRelationReport, lhs: Domain, rhs: Domain) -> DomainPair {
    let (ft, fo) = report.forms();
    DomainPair {
        transformed: DomainRef { name: lhs.label().into(), form: ft.unwrap() },
        original: DomainRef { name: rhs.label().into(), form: fo.unwrap() },
    }
}

fn run(
    delta: C64,
    t: &SymmetryTransform,
    domain: Domain,
    z0: &str,
    hom: Option<&PathSpec>,
) -> phaseint::Result<FRelationReport> {
    let w = WeberInstance::new(delta).unwrap();
    let c = crossing(&w, domain).unwrap();
    verify_fmatrix_relation(w.integrand(), t, &c.path, &Expr::parse(z0).unwrap(), c.basepoint, hom, &opts())
}

#[test]
fn identity_relation_is_exact() {
    let r = run(c64(1.0, 0.0), &SymmetryTransform::identity(), Domain::MinusHalf, "delta", None).unwrap();
    assert!(r.residual < 10.0 * 1e-10, "residual {}", r.residual);
    assert_eq!(r.p_sigma, Sigma::Identity);
    let rel = derive_constant_relation(
        &SymmetryTransform::identity(),
        &pair(&r, Domain::MinusHalf, Domain::MinusHalf),
        r.p_sigma,
        r.omega,
    )
    .unwrap();
    assert_eq!(rel.lhs, rel.rhs);
    assert_eq!(rel.phase_factor, c64(1.0, 0.0));
}

#[test]
fn rotation_overlaps_domains() {
    let t = rotation();
    let r = run(c64(1.0, 0.0), &t, Domain::MinusHalf, "delta", None).unwrap();
    assert!(r.residual < 1e-5, "residual {}", r.residual);
    assert_eq!(r.p_sigma, Sigma::Swap);
    let rel = derive_constant_relation(&t, &pair(&r, Domain::Half, Domain::MinusHalf), r.p_sigma, r.omega).unwrap();
    assert_eq!(rel.to_string(), "s_1_2(i*delta) = s_-1_2(delta)");
    assert_eq!(rel.provenance, Provenance::Gensym);
    let s_t = extract_stokes_constant(&r.transformed, StokesForm::ST).unwrap().s;
    let s_o = extract_stokes_constant(&r.original, StokesForm::S).unwrap().s;
    // read-off constants carry the limiting-form error of the crossing
    assert!(rel.residual(s_t, s_o) < 1e-3, "{s_t} {s_o}");
}

#[test]
fn conjugation_reverses_crossing() {
    let t = SymmetryTransform::from_json(r#"{"f":"conj","g":{"conj":true},"h":{"map":"delta->delta","conj":true}}"#)
        .unwrap();
    let r = run(c64(1.0, 0.0), &t, Domain::MinusHalf, "delta", None).unwrap();
    assert!(r.residual < 1e-5, "residual {}", r.residual);
    let rel = derive_constant_relation(&t, &pair(&r, Domain::Half, Domain::MinusHalf), r.p_sigma, r.omega).unwrap();
    assert_eq!(rel.to_string(), "-conj(s_1_2(conj(delta))) = s_-1_2(delta)");
    assert_eq!(rel.provenance, Provenance::Cnjgtn);
    // closed form: s_1/2(δ) = s_3/2(−iδ), s_-1/2(δ) = s_3/2(δ)
    for d in [0.4, 1.0, 1.7] {
        let lhs = s_three_halves(c64(0.0, -d)).unwrap();
        let rhs = s_three_halves(c64(d, 0.0)).unwrap();
        assert!(rel.residual(lhs, rhs) < 1e-12);
    }
}

#[test]
fn functional_equation_half_turn() {
    let delta = c64(1.0, 0.0);
    let t = h_turn(1.0);
    // basepoint −δ follows −δe^{iπμ} through the lower half plane
    let hom = PathSpec::open(arc_points(c64(0.0, 0.0), 1.0, PI, 2.0 * PI, 24)).unwrap();
    let r = run(delta, &t, Domain::ThreeHalves, "-delta", Some(&hom)).unwrap();
    assert!(r.residual < 1e-5, "residual {}", r.residual);
    assert_eq!(r.p_sigma, Sigma::Identity);
    let rel =
        derive_constant_relation(&t, &pair(&r, Domain::ThreeHalves, Domain::ThreeHalves), r.p_sigma, r.omega).unwrap();
    assert_eq!(rel.provenance, Provenance::Func);
    let expected = (-PI * delta * delta).exp();
    assert!((rel.phase_factor - expected).norm() < 1e-8, "{}", rel.phase_factor);
    let lhs = s_three_halves_on_sheet(delta, Some(1)).unwrap();
    let rhs = s_three_halves(delta).unwrap();
    assert!(rel.residual(lhs, rhs) < 1e-8);
}

#[test]
fn formal_full_turn_is_nontrivial() {
    let delta = c64(0.8, 0.0);
    let t = h_turn(2.0);
    // from −δ out, once around both turning points, and back
    let mut w = vec![-delta];
    w.extend(arc_points(c64(0.0, 0.0), 1.5, PI, 3.0 * PI, 48));
    w.push(-delta);
    let hom = PathSpec::open(w).unwrap();
    let r = run(delta, &t, Domain::ThreeHalves, "-delta", Some(&hom)).unwrap();
    assert!(r.residual < 1e-5, "residual {}", r.residual);
    let rel =
        derive_constant_relation(&t, &pair(&r, Domain::ThreeHalves, Domain::ThreeHalves), r.p_sigma, r.omega).unwrap();
    assert!((rel.phase_factor - 1.0).norm() > 0.1);
    // the factor is the reconnection phase around both turning points
    let loop_omega = phaseint::phase::phase_integral(
        &phaseint::phase::BranchSheet::from_infinity(phaseint::weber::weber_integrand(delta).unwrap(), c64(-1.5, 0.0))
            .unwrap(),
        &PathSpec::circle(c64(0.0, 0.0), 1.5, 64).unwrap().map(|z| -z).unwrap(),
        1e-12,
    )
    .unwrap()
    .omega;
    assert!((r.omega - loop_omega).norm() < 1e-8, "{} vs {}", r.omega, loop_omega);
    let lhs = s_three_halves_on_sheet(delta, Some(2)).unwrap();
    let rhs = s_three_halves(delta).unwrap();
    assert!(rel.residual(lhs, rhs) < 1e-10);
}

#[test]
fn homotopy_around_a_fixed_pole_is_rejected() {
    // R = (1 − δ²z²)/z²·… keeps the pole at 0 fixed while the turning points rotate
    let spec: phaseint::cplane::RationalSpec =
        serde_json::from_str(r#"{"num":["-delta^2",0,1],"den":[0,0,1]}"#).unwrap();
    let l = phaseint::cplane::RationalIntegrand::new(
        spec,
        std::collections::BTreeMap::from([("delta".to_string(), c64(1.0, 0.0))]),
    )
    .unwrap();
    let t = h_turn(1.0);
    let gamma = PathSpec::open(vec![c64(30.0, 30.0), c64(-30.0, 30.0)]).unwrap();
    // the basepoint −δ moves below the pole; the path goes above it
    let hom = PathSpec::open(arc_points(c64(0.0, 0.0), 1.0, PI, 0.0, 24)).unwrap();
    let r =
        verify_fmatrix_relation(&l, &t, &gamma, &Expr::parse("-delta").unwrap(), c64(-1.0, 0.0), Some(&hom), &opts());
    assert!(matches!(r, Err(Error::HomotopyAmbiguous(_))), "{r:?}");
}

#[test]
fn purely_imaginary_relation_for_real_delta() {
    // conjugation maps the s_3/2 domain to s_-3/2; with s_-3/2(δ) = s_3/2(−iδ)
    // the self-conjugate reading is s*(δ) = −s(δ)
    let rel = derive_constant_relation(
        &SymmetryTransform::conjugation(),
        &DomainPair {
            transformed: DomainRef { name: "s_3/2".into(), form: StokesForm::ST },
            original: DomainRef { name: "s_3/2".into(), form: StokesForm::S },
        },
        Sigma::Swap,
        c64(0.0, 0.0),
    )
    .unwrap();
    assert!(rel.is_self_conjugate());
    let vals = std::collections::BTreeMap::from([("0".to_string(), c64(0.0, 2f64.sqrt()))]);
    assert!(purely_imaginary_check(&rel, &vals).unwrap());
}

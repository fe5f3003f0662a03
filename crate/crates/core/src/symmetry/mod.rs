//! Symmetry transformations `{f̂, ĝ, ĥ}` and the relations they induce
//! between F-matrices and effective Stokes constants.
//!
//! A transformation sends a solution `y(z, λ)` to `f̂ y(ĝz, ĥλ)`. Here `ĝ` is
//! affine, `z ↦ a z + b` or `z ↦ a z̄ + b`, `ĥ` rescales one named parameter,
//! `λ_k ↦ k λ_k` (optionally followed by conjugation of all parameters),
//! and `f̂` is either a constant multiplier or complex conjugation.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{p_sigma, w_matrix, ConnectionMatrix};
use crate::cplane::path::segment_distance;
use crate::cplane::{Expr, PathSpec, RationalIntegrand};
use crate::oracle::{exact_fmatrix_with, extract_stokes_constant, OracleOptions, StokesForm};
use crate::phase::{integrate_track_range, BranchSheet};
use crate::{Error, Result, C64};

const SYMMETRY_TOL: f64 = 1e-10;
/// Radius (relative to the problem scale) of the detour taken around a
/// turning point where two paths are joined.
const DETOUR_RADIUS: f64 = 1e-8;
/// Relative distance below which the homotopy sweep treats two points as
/// colliding.
const COLLISION_TOL: f64 = 1e-6;

fn default_mu_steps() -> u32 {
    64
}

fn one() -> String {
    "1".into()
}

fn unit() -> C64 {
    C64::new(1.0, 0.0)
}

/// Affine action on `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GAction {
    #[serde(default = "unit", with = "crate::serde_c64")]
    pub a: C64,
    #[serde(default, with = "crate::serde_c64")]
    pub b: C64,
    #[serde(default)]
    pub conj: bool,
    /// Lifted argument of `a` used by the homotopy; defaults to `arg a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

impl Default for GAction {
    fn default() -> Self {
        Self { a: unit(), b: C64::new(0.0, 0.0), conj: false, angle: None }
    }
}

/// `g` either as an explicit affine map or as an expression in `z`.
/// Expressions are accepted only when they turn out to be affine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GSpec {
    Affine(GAction),
    Expr(String),
}

impl Default for GSpec {
    fn default() -> Self {
        GSpec::Affine(GAction::default())
    }
}

/// Parameter map `"NAME->EXPR"`, linear in `NAME`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HAction {
    pub map: String,
    #[serde(default)]
    pub conj: bool,
    /// Lifted argument of the factor, e.g. `2π` for `δ ↦ δe^{2iπ}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryTransform {
    /// `"conj"` or a constant multiplier expression.
    #[serde(default = "one")]
    pub f: String,
    #[serde(default)]
    pub g: GSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<HAction>,
    #[serde(default = "default_mu_steps")]
    pub mu_steps: u32,
}

impl Default for SymmetryTransform {
    fn default() -> Self {
        Self::identity()
    }
}

/// Parsed `ĥ`.
#[derive(Debug, Clone, PartialEq)]
struct ParamMap {
    name: String,
    expr: String,
    factor: C64,
    angle: f64,
    conj: bool,
}

/// Resolved `ĝ`: `z ↦ a·c(z) + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Affine {
    a: C64,
    b: C64,
    conj: bool,
    angle: f64,
}

impl Affine {
    fn apply(&self, z: C64) -> C64 {
        let z = if self.conj { z.conj() } else { z };
        self.a * z + self.b
    }

    fn inverse(&self, w: C64) -> C64 {
        let z = (w - self.b) / self.a;
        if self.conj {
            z.conj()
        } else {
            z
        }
    }

    /// Inverse of the linear part of the continuous family at `μ`.
    fn inverse_at(&self, mu: f64, w: C64) -> C64 {
        let a_mu = C64::from_polar(self.a.norm().powf(mu), self.angle * mu);
        (w - self.b * mu) / a_mu
    }

    fn is_identity(&self) -> bool {
        !self.conj && self.a == unit() && self.b == C64::new(0.0, 0.0)
    }
}

/// The `P_σ` of a relation: whether the basis exponents keep or swap sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sigma {
    Identity,
    Swap,
}

impl Sigma {
    pub fn matrix(self) -> ConnectionMatrix {
        match self {
            Sigma::Identity => ConnectionMatrix::identity(2),
            Sigma::Swap => p_sigma(),
        }
    }
}

impl SymmetryTransform {
    pub fn identity() -> Self {
        Self { f: one(), g: GSpec::default(), h: None, mu_steps: default_mu_steps() }
    }

    /// Full complex conjugation of solutions, variable and parameters.
    pub fn conjugation() -> Self {
        Self {
            f: "conj".into(),
            g: GSpec::Affine(GAction { conj: true, ..GAction::default() }),
            h: None,
            mu_steps: default_mu_steps(),
        }
        .with_h_conj()
    }

    fn with_h_conj(mut self) -> Self {
        self.h = Some(HAction { map: String::new(), conj: true, angle: None });
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("transform: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        self.affine()?;
        self.param_map()?;
        self.f_is_conj()?;
        if self.mu_steps == 0 {
            return Err(Error::InvalidInput("mu_steps must be positive".into()));
        }
        Ok(())
    }

    fn f_is_conj(&self) -> Result<bool> {
        let f = self.f.trim();
        if f == "conj" {
            return Ok(true);
        }
        let e = Expr::parse(f)?;
        if e.variables().iter().any(|v| v == "z") {
            return Err(Error::UnsupportedAction(format!("multiplier `{f}` depends on z")));
        }
        Ok(false)
    }

    fn affine(&self) -> Result<Affine> {
        let g = match &self.g {
            GSpec::Affine(g) => g.clone(),
            GSpec::Expr(src) => affine_from_expr(src)?,
        };
        if g.a.norm() == 0.0 || !g.a.re.is_finite() || !g.a.im.is_finite() {
            return Err(Error::InvalidInput("g must be invertible (a ≠ 0)".into()));
        }
        let angle = g.angle.unwrap_or_else(|| g.a.arg());
        Ok(Affine { a: g.a, b: g.b, conj: g.conj, angle })
    }

    fn param_map(&self) -> Result<Option<ParamMap>> {
        let Some(h) = &self.h else { return Ok(None) };
        if h.map.trim().is_empty() {
            return Ok(Some(ParamMap {
                name: String::new(),
                expr: String::new(),
                factor: unit(),
                angle: 0.0,
                conj: h.conj,
            }));
        }
        let (name, rhs) = h
            .map
            .split_once("->")
            .ok_or_else(|| Error::InvalidInput(format!("h map `{}` must read NAME->EXPR", h.map)))?;
        let name = name.trim().to_string();
        let expr = Expr::parse(rhs)?;
        if let Some(v) = expr.variables().into_iter().find(|v| *v != name) {
            return Err(Error::UnsupportedAction(format!("h map refers to `{v}` besides `{name}`")));
        }
        let at = |x: f64| -> Result<C64> {
            let mut env = BTreeMap::new();
            env.insert(name.clone(), C64::new(x, 0.0));
            expr.eval(&env)
        };
        let factor = at(1.0)?;
        let (v0, v2, v3) = (at(0.0)?, at(2.0)?, at(-3.0)?);
        let lin_tol = 1e-12 * factor.norm().max(1.0);
        if v0.norm() > lin_tol || (v2 - 2.0 * factor).norm() > lin_tol || (v3 + 3.0 * factor).norm() > lin_tol {
            return Err(Error::UnsupportedAction(format!("h map `{}` is not linear", h.map)));
        }
        if factor.norm() == 0.0 {
            return Err(Error::InvalidInput("h must be invertible".into()));
        }
        let angle = h.angle.unwrap_or_else(|| factor.arg());
        if (C64::from_polar(factor.norm(), angle) - factor).norm() > 1e-9 * factor.norm() {
            return Err(Error::InvalidInput(format!("h angle {angle} is not an argument of {factor}")));
        }
        Ok(Some(ParamMap { name, expr: rhs.trim().to_string(), factor, angle, conj: h.conj }))
    }

    /// Whether `ĝ` (and with it `f̂`) is antilinear.
    pub fn is_antilinear(&self) -> Result<bool> {
        Ok(self.affine()?.conj)
    }

    /// `ĥλ`.
    pub fn map_params(&self, params: &BTreeMap<String, C64>) -> Result<BTreeMap<String, C64>> {
        let Some(h) = self.param_map()? else { return Ok(params.clone()) };
        let mut out = params.clone();
        if !h.name.is_empty() {
            let v = out
                .get_mut(&h.name)
                .ok_or_else(|| Error::InvalidInput(format!("problem has no parameter `{}`", h.name)))?;
            *v *= h.factor;
        }
        if h.conj {
            out.values_mut().for_each(|v| *v = v.conj());
        }
        Ok(out)
    }

    /// Parameters along the continuous family `ĥ_cont(μ)` (conjugation excluded).
    fn params_at(&self, mu: f64, params: &BTreeMap<String, C64>) -> Result<BTreeMap<String, C64>> {
        let mut out = params.clone();
        if let Some(h) = self.param_map()? {
            if let Some(v) = out.get_mut(&h.name) {
                *v *= C64::from_polar(h.factor.norm().powf(mu), h.angle * mu);
            }
        }
        Ok(out)
    }

    /// `ĝz`.
    pub fn map_point(&self, z: C64) -> Result<C64> {
        Ok(self.affine()?.apply(z))
    }

    /// `ĝ⁻¹w`.
    pub fn inverse_point(&self, w: C64) -> Result<C64> {
        Ok(self.affine()?.inverse(w))
    }

    /// `self` applied after `inner`: solutions go to `f̂ f̂' y(ĝ'ĝz, ĥ'ĥλ)`.
    pub fn then(&self, inner: &SymmetryTransform) -> Result<SymmetryTransform> {
        let (g1, g2) = (self.affine()?, inner.affine()?);
        let c1 = |z: C64| if g1.conj { z.conj() } else { z };
        let a = g2.a * c1(g1.a);
        let b = g2.a * c1(g1.b) + g2.b;
        let conj = g1.conj != g2.conj;
        let angle = if g1.conj { -g1.angle } else { g1.angle } + g2.angle;
        let g = GSpec::Affine(GAction { a, b, conj, angle: Some(angle) });

        let f = match (self.f_is_conj()?, inner.f_is_conj()?) {
            (true, true) => one(),
            (true, false) => "conj".into(),
            (false, true) => "conj".into(),
            (false, false) => format!("({})*({})", self.f.trim(), inner.f.trim()),
        };

        let h = match (self.param_map()?, inner.param_map()?) {
            (None, None) => None,
            (Some(h), None) | (None, Some(h)) => Some(HAction {
                map: if h.name.is_empty() { String::new() } else { format!("{}->{}", h.name, h.expr) },
                conj: h.conj,
                angle: Some(h.angle),
            }),
            (Some(h1), Some(h2)) => {
                let name = match (h1.name.is_empty(), h2.name.is_empty()) {
                    (true, _) => h2.name.clone(),
                    (_, true) => h1.name.clone(),
                    _ if h1.name == h2.name => h1.name.clone(),
                    _ => {
                        return Err(Error::UnsupportedAction(format!(
                            "cannot compose maps of `{}` and `{}`",
                            h1.name, h2.name
                        )))
                    }
                };
                // λ ↦ c2(k2 · c1(k1 λ)) = c2(k2) c12(k1) c12(λ)
                let c2 = |z: C64| if h2.conj { z.conj() } else { z };
                let c12 = |z: C64| if h1.conj != h2.conj { z.conj() } else { z };
                let k = c2(h2.factor) * c12(h1.factor);
                let s1 = if h2.conj { -1.0 } else { 1.0 };
                let angle = s1 * h2.angle + if h1.conj != h2.conj { -h1.angle } else { h1.angle };
                let map = if name.is_empty() { String::new() } else { format!("{name}->({}+{}*i)*{name}", k.re, k.im) };
                Some(HAction { map, conj: h1.conj != h2.conj, angle: Some(angle) })
            }
        };
        let t = SymmetryTransform { f, g, h, mu_steps: self.mu_steps.max(inner.mu_steps) };
        t.validate()?;
        Ok(t)
    }

    /// Human-readable `ĥλ` for parameter `name`.
    fn lambda_label(&self) -> Result<(String, String)> {
        Ok(match self.param_map()? {
            None => ("lambda".into(), "lambda".into()),
            Some(h) => {
                let plain = if h.name.is_empty() { "lambda".to_string() } else { h.name.clone() };
                let mapped = if h.name.is_empty() { plain.clone() } else { h.expr.clone() };
                let mapped = if h.conj { format!("conj({mapped})") } else { mapped };
                (plain, mapped)
            }
        })
    }
}

fn affine_from_expr(src: &str) -> Result<GAction> {
    let e = Expr::parse(src)?;
    if let Some(v) = e.variables().into_iter().find(|v| v != "z") {
        return Err(Error::UnsupportedAction(format!("g refers to `{v}`")));
    }
    let at = |x: C64| -> Result<C64> {
        let mut env = BTreeMap::new();
        env.insert("z".to_string(), x);
        e.eval(&env)
    };
    let b = at(C64::new(0.0, 0.0))?;
    let a = at(unit())? - b;
    for probe in [C64::new(2.0, 0.0), C64::new(-0.7, 1.3), C64::new(0.3, -2.1)] {
        let v = at(probe)?;
        if (v - (a * probe + b)).norm() > 1e-12 * v.norm().max(1.0) {
            return Err(Error::UnsupportedAction(format!("g = `{src}` is not affine")));
        }
    }
    Ok(GAction { a, b, conj: false, angle: None })
}

/// Sample points for the symmetry check: an irregular spread around the
/// singularities at several radii.
fn sample_points(l: &RationalIntegrand, samples: usize) -> Vec<C64> {
    let c = l.centroid();
    let scale = l.scale().max(1.0);
    (0..samples)
        .map(|k| {
            let r = scale * (0.37 + 0.61 * ((k * 7 % 11) as f64 / 11.0) + 0.9 * (k % 3) as f64);
            c + C64::from_polar(r, 0.4123 + 2.399963 * k as f64)
        })
        .collect()
}

/// Check `a²R(ĝz, ĥλ) = R(z, λ)` (conjugated on the left when `ĝ` is
/// antilinear) on `samples` points.
pub fn check_is_symmetry(l: &RationalIntegrand, t: &SymmetryTransform, samples: usize) -> Result<bool> {
    if samples < 8 {
        return Err(Error::InvalidInput("at least 8 samples are needed".into()));
    }
    let g = t.affine()?;
    if t.f_is_conj()? != g.conj {
        return Err(Error::UnsupportedAction("f and g must agree on conjugation".into()));
    }
    let lt = l.with_params(t.map_params(l.params())?)?;
    for z in sample_points(l, samples) {
        if l.distance_to_pole(z) < 1e-6 * l.scale() || lt.distance_to_pole(g.apply(z)) < 1e-6 * l.scale() {
            continue;
        }
        let rhs = l.eval(z)?;
        let mut lhs = g.a * g.a * lt.eval(g.apply(z))?;
        if g.conj {
            lhs = lhs.conj();
        }
        if (lhs - rhs).norm() > SYMMETRY_TOL * rhs.norm().max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of a numerical F-matrix relation check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FRelationReport {
    /// `max |LHS − RHS|` entrywise.
    pub residual: f64,
    pub p_sigma: Sigma,
    /// Phase integral from `z̃₀` to `ĝ⁻¹z₀(ĥλ)` along the homotopy path.
    #[serde(with = "crate::serde_c64")]
    pub omega: C64,
    /// Raw oracle matrix along `ĝγ` for the transformed parameters.
    pub transformed: ConnectionMatrix,
    pub lhs: ConnectionMatrix,
    pub rhs: ConnectionMatrix,
    /// Oracle matrix along `γ`.
    pub original: ConnectionMatrix,
}

impl FRelationReport {
    /// Forms read off the raw transformed and original matrices.
    pub fn forms(&self) -> (Option<StokesForm>, Option<StokesForm>) {
        (classify_form(&self.transformed), classify_form(&self.original))
    }
}

/// Limiting form of an F-matrix across one Stokes domain, if it has one.
pub fn classify_form(m: &ConnectionMatrix) -> Option<StokesForm> {
    [StokesForm::S, StokesForm::ST]
        .into_iter()
        .filter_map(|f| extract_stokes_constant(m, f).ok().map(|e| (f, e.residual)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(f, _)| f)
}

/// Which way a detour passes a singular joint: the arc must contain
/// (or avoid) the direction `angle` seen from the joint.
#[derive(Debug, Clone, Copy)]
struct Side {
    angle: f64,
    contain: bool,
}

fn arc_contains(t_in: f64, turn: f64, angle: f64) -> bool {
    if turn >= 0.0 {
        (angle - t_in).rem_euclid(TAU) < turn
    } else {
        (t_in - angle).rem_euclid(TAU) < -turn
    }
}

/// Concatenate two paths. When the joint sits on a singular point of `l`,
/// go around it on a tiny circle, on the side given by `side` or else along
/// the shorter arc.
fn join_around(l: &RationalIntegrand, first: &PathSpec, second: &PathSpec, side: Option<Side>) -> Result<PathSpec> {
    let joint = first.end();
    let scale = l.scale().max(joint.norm()).max(1.0);
    let singular = l.singular_points().iter().any(|p| (p - joint).norm() <= 1e-12 * scale);
    if !singular {
        return first.concat(second);
    }
    let a = first.vertices();
    let b = second.vertices();
    let before = a[a.len() - 2];
    let after = b[1];
    let rho = (DETOUR_RADIUS * scale).min(0.1 * (before - joint).norm()).min(0.1 * (after - joint).norm());
    let t_in = (before - joint).arg();
    let mut turn = (after - joint).arg() - t_in;
    turn = (turn + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
    match side {
        Some(side) => {
            let t_out = t_in + turn;
            let near = |t: f64| {
                let d = (side.angle - t).rem_euclid(TAU);
                d.min(TAU - d) < 1e-6
            };
            if near(t_in) || near(t_out) {
                return Err(Error::HomotopyAmbiguous(format!(
                    "a singular point reaches {joint} along the path itself"
                )));
            }
            if arc_contains(t_in, turn, side.angle) != side.contain {
                turn -= turn.signum() * TAU;
            }
        }
        None if (turn.abs() - std::f64::consts::PI).abs() < 1e-9 => {
            return Err(Error::HomotopyAmbiguous(format!(
                "paths join straight through the singular point {joint}; the side is undetermined"
            )));
        }
        None => {}
    }
    let mut w: Vec<C64> = a[..a.len() - 1].to_vec();
    let n = ((turn.abs() / 0.3).ceil() as usize).max(1);
    for k in 0..=n {
        w.push(joint + C64::from_polar(rho, t_in + turn * k as f64 / n as f64));
    }
    w.extend_from_slice(&b[1..]);
    w.dedup();
    Ok(PathSpec::open(w)?.with_clearance(first.clearance().min(second.clearance())))
}

fn reversed_open(p: &PathSpec) -> Result<PathSpec> {
    let mut v = p.vertices();
    v.reverse();
    Ok(PathSpec::open(v)?.with_clearance(p.clearance()))
}

fn maybe_join(
    l: &RationalIntegrand,
    a: Option<PathSpec>,
    b: Option<PathSpec>,
    side: Option<Side>,
) -> Result<Option<PathSpec>> {
    Ok(match (a, b) {
        (Some(a), Some(b)) => Some(join_around(l, &a, &b, side)?),
        (a, None) => a,
        (None, b) => b,
    })
}

/// Singular points of `R(·, ĥ_cont(μ)λ)` pulled back by `ĝ_cont(μ)`, with the
/// basepoint trajectory, on the μ grid.
struct Sweep {
    basepoints: Vec<C64>,
    singular: Vec<Vec<C64>>,
}

fn sweep(l: &RationalIntegrand, t: &SymmetryTransform, z0: &Expr) -> Result<Sweep> {
    let g = t.affine()?;
    let n = t.mu_steps as usize;
    let mut basepoints = Vec::with_capacity(n + 1);
    let mut singular: Vec<Vec<C64>> = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let mu = j as f64 / n as f64;
        let params = t.params_at(mu, l.params())?;
        let lm = l.with_params(params.clone())?;
        basepoints.push(g.inverse_at(mu, z0.eval(&params)?));
        let mut pts: Vec<C64> = lm.singular_points().iter().map(|&p| g.inverse_at(mu, p)).collect();
        if let Some(prev) = singular.last() {
            if pts.len() != prev.len() {
                return Err(Error::HomotopyAmbiguous(format!("singular points merge near μ = {mu:.4}")));
            }
            // follow each point by continuity
            let mut ordered = Vec::with_capacity(pts.len());
            for &p in prev {
                let k = (0..pts.len()).min_by(|&i, &j| (pts[i] - p).norm().total_cmp(&(pts[j] - p).norm())).unwrap();
                ordered.push(pts.swap_remove(k));
            }
            pts = ordered;
        }
        singular.push(pts);
    }
    Ok(Sweep { basepoints, singular })
}

/// Reject homotopies along which the basepoint runs into a singular point,
/// singular points collide, or the supplied path winds differently from the
/// basepoint trajectory around a singular point that stays put.
fn validate_homotopy(
    l: &RationalIntegrand,
    t: &SymmetryTransform,
    z0: &Expr,
    z0_tilde: C64,
    target: C64,
    hom: Option<&PathSpec>,
) -> Result<Sweep> {
    let sw = sweep(l, t, z0)?;
    let scale = l.scale().max(1.0);
    let thr = COLLISION_TOL * scale;
    let n = sw.basepoints.len() - 1;
    let followed: Option<usize> = sw.singular[0].iter().position(|p| (p - sw.basepoints[0]).norm() <= thr);
    for j in 1..=n {
        let mu = j as f64 / n as f64;
        let s = &sw.singular[j];
        for a in 0..s.len() {
            for b in a + 1..s.len() {
                if j < n && (s[a] - s[b]).norm() < thr {
                    return Err(Error::HomotopyAmbiguous(format!("singular points collide near μ = {mu:.4}")));
                }
            }
            if Some(a) == followed {
                continue;
            }
            let d0 = sw.basepoints[j - 1] - sw.singular[j - 1][a];
            let d1 = sw.basepoints[j] - s[a];
            let interior = j < n || segment_distance(C64::new(0.0, 0.0), d0, d1) > (d1.norm() * 0.5).max(thr);
            if interior && segment_distance(C64::new(0.0, 0.0), d0, d1) < thr && !(j == n && d1.norm() < thr) {
                return Err(Error::HomotopyAmbiguous(format!(
                    "basepoint runs into the singular point {} near μ = {mu:.4}",
                    s[a]
                )));
            }
        }
    }

    // closed curve: basepoint trajectory, then back along the supplied path
    let mut curve = sw.basepoints.clone();
    if (target - *curve.last().unwrap()).norm() > thr {
        curve.push(target);
    }
    match hom {
        Some(h) => {
            let mut v = h.vertices();
            v.reverse();
            curve.extend(v);
        }
        None => curve.push(z0_tilde),
    }
    curve.push(sw.basepoints[0]);
    curve.dedup();
    for (k, p0) in sw.singular[0].iter().enumerate() {
        let stationary = sw.singular.iter().all(|s| (s[k] - p0).norm() < thr);
        if !stationary {
            continue;
        }
        let on_curve = curve.windows(2).any(|w| segment_distance(*p0, w[0], w[1]) < thr);
        if on_curve {
            continue;
        }
        let mut total = 0.0;
        for w in curve.windows(2) {
            total += ((w[1] - p0) / (w[0] - p0)).arg();
        }
        let winding = (total / TAU).round() as i64;
        if winding != 0 {
            return Err(Error::HomotopyAmbiguous(format!(
                "homotopy path winds {winding} times around {p0} relative to the basepoint trajectory"
            )));
        }
    }
    Ok(sw)
}

/// Side of the detour at the joint `joint` of the lead (leaving in
/// direction `lead_dir`) and the homotopy path. The singular point that
/// ends up on the joint drags the lead along each time it crosses it, so
/// the detour avoids its final approach direction when it never crossed
/// and wraps through it after one crossing.
fn joint_side(sw: &Sweep, joint: C64, lead_dir: f64, thr: f64) -> Result<Option<Side>> {
    let n = sw.singular.len() - 1;
    let Some(k) = sw.singular[n].iter().position(|p| (p - joint).norm() < thr) else {
        return Ok(None);
    };
    let mut psi: Option<(f64, f64)> = None; // (first, running)
    for s in &sw.singular {
        let d = s[k] - joint;
        if d.norm() < thr {
            continue;
        }
        let a = d.arg();
        psi = Some(match psi {
            None => {
                let first = lead_dir + (a - lead_dir).rem_euclid(TAU);
                (first, first)
            }
            Some((first, run)) => {
                let step = (a - run + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
                (first, run + step)
            }
        });
    }
    let Some((_, end)) = psi else { return Ok(None) };
    let crossings = ((end - lead_dir) / TAU).floor() as i64;
    if crossings.abs() > 1 {
        return Err(Error::HomotopyAmbiguous(format!(
            "a singular point winds {crossings} times around {joint} across the lead"
        )));
    }
    Ok(Some(Side { angle: end, contain: crossings != 0 }))
}

/// Numerical check of the F-matrix relation
/// `P_σ κ(F_{q,z₀}[ĝγ, ĥλ]) P_σ = W[Ω] F_{q,z̃₀}[γ, λ] W[−Ω]`, where `κ` is
/// entrywise conjugation for antilinear `T` and `Ω` is the phase integral
/// from `z̃₀` to `ĝ⁻¹z₀(ĥλ)` along `hom`.
///
/// `z0` is the basepoint formula in the parameters; `hom` may be omitted
/// when `z̃₀` already equals `ĝ⁻¹z₀(ĥλ)`. Both branch sheets are fixed from
/// infinity at the start of the respective path.
pub fn verify_fmatrix_relation(
    l: &RationalIntegrand,
    t: &SymmetryTransform,
    gamma: &PathSpec,
    z0: &Expr,
    z0_tilde: C64,
    hom: Option<&PathSpec>,
    opts: &OracleOptions,
) -> Result<FRelationReport> {
    t.validate()?;
    if !check_is_symmetry(l, t, 16)? {
        return Err(Error::InvalidInput("transform is not a symmetry of the problem".into()));
    }
    let g = t.affine()?;
    let params_t = t.map_params(l.params())?;
    let lt = l.with_params(params_t.clone())?;
    let target = g.inverse(z0.eval(&params_t)?);
    let scale = l.scale().max(target.norm()).max(1.0);

    match hom {
        Some(h) => {
            if (h.start() - z0_tilde).norm() > 1e-9 * scale || (h.end() - target).norm() > 1e-9 * scale {
                return Err(Error::InvalidInput(format!("homotopy path must run from {z0_tilde} to {target}")));
            }
        }
        None => {
            if (target - z0_tilde).norm() > 1e-9 * scale {
                return Err(Error::InvalidInput(format!("a homotopy path from {z0_tilde} to {target} is required")));
            }
        }
    }
    let sw = validate_homotopy(l, t, z0, z0_tilde, target, hom)?;

    // original side
    let sheet = BranchSheet::from_infinity(l.clone(), gamma.start())?;
    let lead = if z0_tilde == gamma.start() { None } else { Some(PathSpec::segment(z0_tilde, gamma.start())?) };
    let opts_r = OracleOptions { lead: lead.clone(), ..opts.clone() };
    let original = exact_fmatrix_with(&sheet, gamma, z0_tilde, &opts_r)?;
    let ext_start = original.path.start();
    let lead_ext = if ext_start == gamma.start() {
        lead
    } else {
        let step = PathSpec::segment(gamma.start(), ext_start)?;
        Some(match lead {
            Some(l0) => l0.concat(&step)?,
            None => step,
        })
    };

    let side = joint_side(&sw, z0_tilde, (gamma.start() - z0_tilde).arg(), COLLISION_TOL * l.scale().max(1.0))?;

    // Ω along the homotopy path, on the sheet reached from the path start
    let omega = match hom {
        None => C64::new(0.0, 0.0),
        Some(h) => {
            let back = lead_ext.as_ref().map(reversed_open).transpose()?;
            let full = maybe_join(l, back.clone(), Some(h.clone()), side)?.unwrap();
            let all = |p: &PathSpec| -> Result<C64> {
                let track = sheet.track(p)?;
                integrate_track_range(&track, 0..p.segments().len(), 0.01 * opts.tol)
            };
            // the shared stretch along the lead cancels
            all(&full)? - back.as_ref().map(all).transpose()?.unwrap_or_default()
        }
    };

    // transformed side
    let path_t = original.path.map(|z| g.apply(z)).map_err(|e| Error::PathClash(e.to_string()))?;
    path_t.check_clearance(&lt.singular_points()).map_err(|e| Error::PathClash(e.to_string()))?;
    let lead_src = maybe_join(l, hom.map(reversed_open).transpose()?, lead_ext, side)?;
    let lead_t = lead_src.map(|p| p.map(|z| g.apply(z))).transpose()?;
    let basepoint_t = lead_t.as_ref().map_or(path_t.start(), |p| p.start());
    let sheet_t = BranchSheet::from_infinity(lt.clone(), path_t.start())?;
    let opts_t = OracleOptions { lead: lead_t, auto_advance: false, ..opts.clone() };
    let transformed = exact_fmatrix_with(&sheet_t, &path_t, basepoint_t, &opts_t)?;

    // P_σ from the action on q at the common start
    let q = sheet.value_at(ext_start)?;
    let qt = sheet_t.anchor_value();
    let mut ratio = g.a * qt;
    if g.conj {
        ratio = ratio.conj();
    }
    ratio /= q;
    // linear: ±iω keeps its sign when a·q̂ = q; antilinear flips it
    let same = if (ratio - 1.0).norm() < 1e-6 {
        true
    } else if (ratio + 1.0).norm() < 1e-6 {
        false
    } else {
        return Err(Error::InvalidInput(format!("transform maps q to {ratio}·q rather than ±q")));
    };
    let p_sigma = if same != g.conj { Sigma::Identity } else { Sigma::Swap };

    let p = p_sigma.matrix();
    let kf = if g.conj { transformed.matrix.conj() } else { transformed.matrix.clone() };
    let lhs = &(&p * &kf) * &p;
    let rhs = &(&w_matrix(omega) * &original.matrix) * &w_matrix(-omega);
    Ok(FRelationReport {
        residual: lhs.max_abs_diff(&rhs),
        p_sigma,
        omega,
        transformed: transformed.matrix,
        lhs,
        rhs,
        original: original.matrix,
    })
}

/// A named constant evaluated at a parameter expression, possibly
/// conjugated and negated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantRef {
    pub name: String,
    pub argument: String,
    #[serde(default)]
    pub conjugated: bool,
    #[serde(default)]
    pub negated: bool,
}

impl fmt::Display for ConstantRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = format!("{}({})", self.name, self.argument);
        if self.conjugated {
            s = format!("conj({s})");
        }
        if self.negated {
            s = format!("-{s}");
        }
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// General transformation with a variable change.
    Gensym,
    /// Antilinear transformation.
    Cnjgtn,
    /// Parameter map alone: a functional equation.
    Func,
}

/// Scalar relation `lhs = rhs · phase_factor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesConstantRelation {
    pub lhs: ConstantRef,
    pub rhs: ConstantRef,
    /// `e^{∓2iΩ}`.
    #[serde(with = "crate::serde_c64")]
    pub phase_factor: C64,
    #[serde(with = "crate::serde_c64")]
    pub omega: C64,
    /// `-1` for `e^{-2iΩ}` (an `S` form), `+1` for `e^{+2iΩ}` (`Sᵀ`).
    pub phase_sign: i32,
    pub form: StokesForm,
    pub provenance: Provenance,
    pub transform: SymmetryTransform,
}

impl fmt::Display for StokesConstantRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)?;
        if self.omega != C64::new(0.0, 0.0) {
            let sign = if self.phase_sign < 0 { "-" } else { "" };
            write!(f, " * exp({sign}2i*({}{:+}i))", self.omega.re, self.omega.im)?;
        }
        Ok(())
    }
}

impl StokesConstantRelation {
    /// `lhs` side value from the raw constant `s(ĥλ)`.
    pub fn lhs_value(&self, s: C64) -> C64 {
        let v = if self.lhs.conjugated { s.conj() } else { s };
        if self.lhs.negated {
            -v
        } else {
            v
        }
    }

    /// Relative mismatch of the relation for the given constants.
    pub fn residual(&self, s_transformed: C64, s_original: C64) -> f64 {
        let rhs = s_original * self.phase_factor;
        (self.lhs_value(s_transformed) - rhs).norm() / rhs.norm().max(1.0)
    }

    /// Same constant, same argument, conjugated and negated, unit factor:
    /// the form `s*(λ) = −s(λ)` for real `λ`.
    pub fn is_self_conjugate(&self) -> bool {
        self.provenance == Provenance::Cnjgtn
            && self.lhs.name == self.rhs.name
            && self.lhs.conjugated
            && self.lhs.negated
            && (self.phase_factor - 1.0).norm() < 1e-12
    }
}

/// A Stokes domain as seen by a relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainRef {
    pub name: String,
    pub form: StokesForm,
}

/// Domain crossed by `ĝγ` (left) and by `γ` (right).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainPair {
    pub transformed: DomainRef,
    pub original: DomainRef,
}

/// Scalar relation between effective Stokes constants implied by `t`,
/// given `P_σ` and `Ω` (the phase integral from `z̃₀` to `ĝ⁻¹z₀(ĥλ)`).
pub fn derive_constant_relation(
    t: &SymmetryTransform,
    pair: &DomainPair,
    sigma: Sigma,
    omega: C64,
) -> Result<StokesConstantRelation> {
    t.validate()?;
    let g = t.affine()?;
    let antilinear = g.conj;
    let lhs_form = match (sigma, pair.transformed.form) {
        (Sigma::Identity, f) => f,
        (Sigma::Swap, StokesForm::S) => StokesForm::ST,
        (Sigma::Swap, StokesForm::ST) => StokesForm::S,
    };
    if lhs_form != pair.original.form {
        return Err(Error::HandednessMismatch(format!(
            "{} ({}) maps to {lhs_form} but {} is {}",
            pair.transformed.name, pair.transformed.form, pair.original.name, pair.original.form
        )));
    }
    let phase_sign = if pair.original.form == StokesForm::S { -1 } else { 1 };
    let phase_factor = (C64::new(0.0, 2.0 * phase_sign as f64) * omega).exp();
    let (plain, mapped) = t.lambda_label()?;
    let provenance = if antilinear {
        Provenance::Cnjgtn
    } else if g.is_identity() {
        Provenance::Func
    } else {
        Provenance::Gensym
    };
    Ok(StokesConstantRelation {
        lhs: ConstantRef {
            name: pair.transformed.name.clone(),
            argument: mapped,
            conjugated: antilinear,
            negated: antilinear,
        },
        rhs: ConstantRef { name: pair.original.name.clone(), argument: plain, conjugated: false, negated: false },
        phase_factor,
        omega,
        phase_sign,
        form: pair.original.form,
        provenance,
        transform: t.clone(),
    })
}

/// For a self-conjugate relation `s*(λ) = −s(λ)` at real `λ`: whether each
/// supplied value is purely imaginary to `1e-6` relative.
pub fn purely_imaginary_check(relation: &StokesConstantRelation, s_values: &BTreeMap<String, C64>) -> Result<bool> {
    if !relation.is_self_conjugate() {
        return Err(Error::NotApplicable(format!("`{relation}` is not a self-conjugate relation")));
    }
    Ok(s_values.values().all(|s| s.re.abs() < 1e-6 * s.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn weber(delta: C64) -> RationalIntegrand {
        crate::weber::weber_integrand(delta).unwrap()
    }

    fn rot() -> SymmetryTransform {
        SymmetryTransform::from_json(
            r#"{"f":"1","g":{"a":[0,1],"b":[0,0],"conj":false},"h":{"map":"delta->i*delta","conj":false},"mu_steps":64}"#,
        )
        .unwrap()
    }

    #[test]
    fn symmetry_checks() {
        let l = weber(c64(1.0, 0.0));
        assert!(check_is_symmetry(&l, &rot(), 16).unwrap());
        assert!(check_is_symmetry(&l, &SymmetryTransform::conjugation(), 16).unwrap());
        let scale = SymmetryTransform { g: GSpec::Expr("2*z".into()), ..SymmetryTransform::identity() };
        assert!(!check_is_symmetry(&l, &scale, 16).unwrap());
        let square = SymmetryTransform { g: GSpec::Expr("z^2".into()), ..SymmetryTransform::identity() };
        assert!(matches!(check_is_symmetry(&l, &square, 16), Err(Error::UnsupportedAction(_))));
        let fz = SymmetryTransform { f: "z".into(), ..SymmetryTransform::identity() };
        assert!(matches!(check_is_symmetry(&l, &fz, 16), Err(Error::UnsupportedAction(_))));
        assert!(check_is_symmetry(&l, &rot(), 4).is_err());
    }

    #[test]
    fn h_must_be_linear() {
        let t = SymmetryTransform {
            h: Some(HAction { map: "delta->delta^2".into(), conj: false, angle: None }),
            ..SymmetryTransform::identity()
        };
        assert!(matches!(t.validate(), Err(Error::UnsupportedAction(_))));
        let z = SymmetryTransform { g: GSpec::Affine(GAction { a: c64(0.0, 0.0), ..GAction::default() }), ..t };
        assert!(z.validate().is_err());
    }

    #[test]
    fn conjugation_twice_is_linear_identity() {
        let c = SymmetryTransform::conjugation();
        let cc = c.then(&c).unwrap();
        assert!(!cc.is_antilinear().unwrap());
        let p = BTreeMap::from([("delta".to_string(), c64(0.3, 0.7))]);
        assert_eq!(cc.map_params(&p).unwrap(), p);
        assert_eq!(cc.map_point(c64(1.5, -2.0)).unwrap(), c64(1.5, -2.0));
        let pair = DomainPair {
            transformed: DomainRef { name: "s_3/2".into(), form: StokesForm::S },
            original: DomainRef { name: "s_3/2".into(), form: StokesForm::S },
        };
        let r = derive_constant_relation(&cc, &pair, Sigma::Identity, C64::new(0.0, 0.0)).unwrap();
        let id = derive_constant_relation(&SymmetryTransform::identity(), &pair, Sigma::Identity, C64::new(0.0, 0.0))
            .unwrap();
        assert_eq!(r.lhs, id.lhs);
        assert_eq!(r.rhs, id.rhs);
        assert_eq!(r.phase_factor, c64(1.0, 0.0));
    }

    #[test]
    fn rotation_composes() {
        let r2 = rot().then(&rot()).unwrap();
        assert!((r2.map_point(c64(1.0, 0.0)).unwrap() - c64(-1.0, 0.0)).norm() < 1e-15);
        let p = BTreeMap::from([("delta".to_string(), c64(1.0, 0.0))]);
        assert!((r2.map_params(&p).unwrap()["delta"] - c64(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn handedness_mismatch() {
        let pair = DomainPair {
            transformed: DomainRef { name: "a".into(), form: StokesForm::S },
            original: DomainRef { name: "b".into(), form: StokesForm::ST },
        };
        let r = derive_constant_relation(&SymmetryTransform::identity(), &pair, Sigma::Identity, C64::new(0.0, 0.0));
        assert!(matches!(r, Err(Error::HandednessMismatch(_))));
    }

    #[test]
    fn purely_imaginary_needs_self_conjugate() {
        let pair = DomainPair {
            transformed: DomainRef { name: "s_3/2".into(), form: StokesForm::ST },
            original: DomainRef { name: "s_3/2".into(), form: StokesForm::S },
        };
        let rel = derive_constant_relation(&SymmetryTransform::conjugation(), &pair, Sigma::Swap, C64::new(0.0, 0.0))
            .unwrap();
        let vals = |s: C64| BTreeMap::from([("x".to_string(), s)]);
        assert!(purely_imaginary_check(&rel, &vals(c64(0.0, 2f64.sqrt()))).unwrap());
        assert!(!purely_imaginary_check(&rel, &vals(c64(1.0, 1.0))).unwrap());
        let id =
            derive_constant_relation(&SymmetryTransform::identity(), &pair, Sigma::Swap, C64::new(0.0, 0.0)).unwrap();
        assert!(matches!(purely_imaginary_check(&id, &vals(c64(0.0, 1.0))), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn json_shape() {
        let t = rot();
        let back: SymmetryTransform = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(SymmetryTransform::from_json(r#"{"f":"1","bogus":1}"#).is_err());
    }
}

//! The Weber (parabolic-cylinder) reference problem `y'' + (z² − δ²) y = 0`:
//! closed-form effective Stokes constant, scattering coefficients, the
//! `p`-function and oracle crossings of the four Stokes domains.
//!
//! Sheet conventions: `q ~ +z` at infinity, `ω(δ) = −iπδ²/2` is the phase
//! integral from `δ` to `−δ` above the cut, and the constants are indexed by
//! their Stokes direction `θ = kπ/2`, `k ∈ {3/2, 1/2, −1/2, −3/2}`.

mod gamma;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

pub use gamma::gamma_complex;

use crate::algebra::{evaluate_word, Bindings, ConnectionMatrix, Factor, OperatorWord};
use crate::cplane::{arc_points, Coef, Expr, PathSpec, RationalIntegrand, RationalSpec};
use crate::oracle::{
    exact_fmatrix_with, extract_stokes_constant, ExactFResult, OracleOptions, StokesExtraction, StokesForm,
};
use crate::phase::BranchSheet;
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// `z² − δ²` as a rational integrand with parameter `delta`.
pub fn weber_integrand(delta: C64) -> Result<RationalIntegrand> {
    let spec = RationalSpec {
        num: vec![Coef::Expr(Expr::parse("-delta^2")?), Coef::Num(C64::new(0.0, 0.0)), Coef::Num(C64::new(1.0, 0.0))],
        den: vec![Coef::Num(C64::new(1.0, 0.0))],
    };
    RationalIntegrand::new(spec, BTreeMap::from([("delta".to_string(), delta)]))
}

/// `ω(δ) = −iπδ²/2`.
pub fn weber_omega(delta: C64) -> C64 {
    -I * PI * delta * delta / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeberInstance {
    delta: C64,
    omega: C64,
    integrand: RationalIntegrand,
}

impl WeberInstance {
    pub fn new(delta: C64) -> Result<Self> {
        if !delta.re.is_finite() || !delta.im.is_finite() {
            return Err(Error::NonFinite(delta));
        }
        Ok(Self { delta, omega: weber_omega(delta), integrand: weber_integrand(delta)? })
    }

    pub fn delta(&self) -> C64 {
        self.delta
    }

    pub fn omega(&self) -> C64 {
        self.omega
    }

    pub fn integrand(&self) -> &RationalIntegrand {
        &self.integrand
    }

    /// Coalesced turning points at `δ = 0`.
    pub fn is_degenerate(&self) -> bool {
        self.delta == C64::new(0.0, 0.0)
    }
}

/// `s_{3/2}(δ)` on the principal branch of `log(iδ²)`.
pub fn s_three_halves(delta: C64) -> Result<C64> {
    s_three_halves_on_sheet(delta, None)
}

/// `s_{3/2}(δ) = i x^{x/2} p(x)` with `x = iδ²` and
/// `log x = Log x + 2πi·sheet`. Without a sheet, `x` on the negative real
/// axis is rejected.
pub fn s_three_halves_on_sheet(delta: C64, sheet: Option<i64>) -> Result<C64> {
    let x = I * delta * delta;
    Ok(I * x_power(x, sheet)? * p_function(x)?)
}

/// `x^{x/2}` with the chosen logarithm branch; `0^0 = 1`.
fn x_power(x: C64, sheet: Option<i64>) -> Result<C64> {
    if x == C64::new(0.0, 0.0) {
        return Ok(C64::new(1.0, 0.0));
    }
    let on_seam = x.re < 0.0 && x.im.abs() <= 1e-14 * x.norm();
    let k = match sheet {
        Some(k) => k,
        None if on_seam => return Err(Error::BranchSeam(x)),
        None => 0,
    };
    // on the seam the argument is taken as +π
    let arg = if on_seam { PI } else { x.arg() };
    let log = C64::new(x.norm().ln(), arg + 2.0 * PI * k as f64);
    Ok((x / 2.0 * log).exp())
}

/// `p(x) = √(2π) (2e)^{−x/2} / Γ(1/2 + x/2)`.
pub fn p_function(x: C64) -> Result<C64> {
    let g = gamma_complex(0.5 + x / 2.0)?;
    let u = (-x / 2.0 * (2.0 * std::f64::consts::E).ln()).exp();
    Ok((2.0 * PI).sqrt() * u / g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResult {
    #[serde(rename = "R", with = "crate::serde_c64")]
    pub r_coeff: C64,
    #[serde(rename = "T", with = "crate::serde_c64")]
    pub t_coeff: C64,
    #[serde(rename = "s_3_2", with = "crate::serde_c64")]
    pub s_value: C64,
}

impl ScatteringResult {
    /// `|R|² + |T|² − 1`.
    pub fn flux_residual(&self) -> f64 {
        (self.r_coeff.norm_sqr() + self.t_coeff.norm_sqr() - 1.0).abs()
    }
}

/// Reflection and transmission built from `s_{3/2}`.
pub fn scattering(delta: C64) -> Result<ScatteringResult> {
    let s = s_three_halves(delta)?;
    if s.norm() == 0.0 {
        return Err(Error::DegenerateInput(format!("s_3/2({delta}) vanishes")));
    }
    let omega = weber_omega(delta);
    Ok(ScatteringResult { r_coeff: 1.0 / s, t_coeff: I * (-I * omega).exp() / s, s_value: s })
}

/// The four effective Stokes constants of the Weber problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeberConstants {
    #[serde(rename = "s_3_2", with = "crate::serde_c64")]
    pub s_3_2: C64,
    #[serde(rename = "s_1_2", with = "crate::serde_c64")]
    pub s_1_2: C64,
    #[serde(rename = "s_-1_2", with = "crate::serde_c64")]
    pub s_m1_2: C64,
    #[serde(rename = "s_-3_2", with = "crate::serde_c64")]
    pub s_m3_2: C64,
}

impl WeberConstants {
    pub fn get(&self, d: Domain) -> C64 {
        match d {
            Domain::ThreeHalves => self.s_3_2,
            Domain::Half => self.s_1_2,
            Domain::MinusHalf => self.s_m1_2,
            Domain::MinusThreeHalves => self.s_m3_2,
        }
    }

    pub fn set(&mut self, d: Domain, v: C64) {
        match d {
            Domain::ThreeHalves => self.s_3_2 = v,
            Domain::Half => self.s_1_2 = v,
            Domain::MinusHalf => self.s_m1_2 = v,
            Domain::MinusThreeHalves => self.s_m3_2 = v,
        }
    }
}

/// All four constants from the closed form: `s_{-1/2} = s_{3/2}` and
/// `s_{1/2}(δ) = s_{-3/2}(δ) = s_{3/2}(−iδ)`.
pub fn closed_form_constants(delta: C64) -> Result<WeberConstants> {
    let a = s_three_halves(delta)?;
    let b = s_three_halves(-I * delta)?;
    Ok(WeberConstants { s_3_2: a, s_1_2: b, s_m1_2: a, s_m3_2: b })
}

/// Residuals of `s_{1/2} = s_{-3/2}`, `s_{3/2} = s_{-1/2}` and
/// `s_{1/2} s_{3/2} + e^{−2iω} + 1 = 0`.
pub fn verify_webtrad(delta: C64, s: &WeberConstants) -> [f64; 3] {
    let omega = weber_omega(delta);
    [
        (s.s_1_2 - s.s_m3_2).norm(),
        (s.s_3_2 - s.s_m1_2).norm(),
        (s.s_1_2 * s.s_3_2 + (-2.0 * I * omega).exp() + 1.0).norm(),
    ]
}

/// The loop word `C² S[s_{3/2}] W[ω] Sᵀ[s_{1/2}] S[s_{-1/2}] W[ω] Sᵀ[s_{-3/2}]`.
pub fn loop_word() -> OperatorWord {
    OperatorWord::from_factors(vec![
        Factor::c(2),
        Factor::s("s_3_2"),
        Factor::w("omega"),
        Factor::st("s_1_2"),
        Factor::s("s_-1_2"),
        Factor::w("omega"),
        Factor::st("s_-3_2"),
    ])
    .expect("two-dimensional word")
}

/// Value of [`loop_word`]; identity when the constants are consistent.
pub fn loop_product(delta: C64, s: &WeberConstants) -> Result<ConnectionMatrix> {
    let mut b = Bindings::new();
    b.insert("s_3_2".into(), s.s_3_2);
    b.insert("s_1_2".into(), s.s_1_2);
    b.insert("s_-1_2".into(), s.s_m1_2);
    b.insert("s_-3_2".into(), s.s_m3_2);
    b.insert("omega".into(), weber_omega(delta));
    evaluate_word(&loop_word(), &b)
}

/// One of the four Stokes domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    #[serde(rename = "s_3_2")]
    ThreeHalves,
    #[serde(rename = "s_1_2")]
    Half,
    #[serde(rename = "s_-1_2")]
    MinusHalf,
    #[serde(rename = "s_-3_2")]
    MinusThreeHalves,
}

impl Domain {
    pub const ALL: [Domain; 4] = [Domain::ThreeHalves, Domain::Half, Domain::MinusHalf, Domain::MinusThreeHalves];

    /// `k` in `θ = kπ/2`.
    pub fn index(self) -> f64 {
        match self {
            Domain::ThreeHalves => 1.5,
            Domain::Half => 0.5,
            Domain::MinusHalf => -0.5,
            Domain::MinusThreeHalves => -1.5,
        }
    }

    pub fn direction(self) -> f64 {
        self.index() * FRAC_PI_2
    }

    pub fn form(self) -> StokesForm {
        match self {
            Domain::ThreeHalves | Domain::MinusHalf => StokesForm::S,
            Domain::Half | Domain::MinusThreeHalves => StokesForm::ST,
        }
    }

    /// `−δ` on the left, `δ` on the right.
    pub fn basepoint(self, delta: C64) -> C64 {
        if self.direction().cos() < 0.0 {
            -delta
        } else {
            delta
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Domain::ThreeHalves => "s_3_2",
            Domain::Half => "s_1_2",
            Domain::MinusHalf => "s_-1_2",
            Domain::MinusThreeHalves => "s_-3_2",
        }
    }
}

impl std::str::FromStr for Domain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.replace(['/', '{', '}'], "_");
        Domain::ALL
            .into_iter()
            .find(|d| d.label() == t || d.label().trim_start_matches("s_") == t)
            .ok_or_else(|| Error::InvalidInput(format!("unknown Weber domain {s:?}")))
    }
}

/// Oracle setup for crossing one Stokes domain counterclockwise.
#[derive(Debug, Clone)]
pub struct Crossing {
    pub domain: Domain,
    pub path: PathSpec,
    pub basepoint: C64,
    pub sheet: BranchSheet,
    pub form: StokesForm,
}

/// Radius at which crossing paths leave the anti-Stokes rays.
const OUTER_RADIUS: f64 = 8.0;
const ARC_CHORDS: usize = 16;

/// In along the anti-Stokes ray at `θ − π/4`, a short arc around the
/// turning points, out along the ray at `θ + π/4`.
pub fn crossing(instance: &WeberInstance, domain: Domain) -> Result<Crossing> {
    let theta = domain.direction();
    let (t0, t1) = (theta - FRAC_PI_4, theta + FRAC_PI_4);
    let inner = (2.0 * instance.delta.norm()).max(1.5);
    let origin = C64::new(0.0, 0.0);
    let mut w = vec![C64::from_polar(OUTER_RADIUS, t0)];
    w.extend(arc_points(origin, inner, t0, t1, ARC_CHORDS));
    w.push(C64::from_polar(OUTER_RADIUS, t1));
    let path = PathSpec::open(w)?;
    let sheet = BranchSheet::from_infinity(instance.integrand.clone(), path.start())?;
    Ok(Crossing { domain, path, basepoint: domain.basepoint(instance.delta), sheet, form: domain.form() })
}

/// Oracle F-matrix across `domain` and the constant read off it.
pub fn oracle_constant(
    instance: &WeberInstance,
    domain: Domain,
    opts: &OracleOptions,
) -> Result<(StokesExtraction, ExactFResult)> {
    let c = crossing(instance, domain)?;
    let f = exact_fmatrix_with(&c.sheet, &c.path, c.basepoint, opts)?;
    let e = extract_stokes_constant(&f.matrix, c.form)?;
    Ok((e, f))
}

/// All four constants from the oracle.
pub fn oracle_constants(instance: &WeberInstance, opts: &OracleOptions) -> Result<WeberConstants> {
    let zero = C64::new(0.0, 0.0);
    let mut out = WeberConstants { s_3_2: zero, s_1_2: zero, s_m1_2: zero, s_m3_2: zero };
    for d in Domain::ALL {
        out.set(d, oracle_constant(instance, d, opts)?.0.s);
    }
    Ok(out)
}

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::expr::Expr;
use super::poly::{cancel_common, require_nonzero, Poly, Root};
use crate::{Error, Result, C64};

/// Default coincidence tolerance for cancelling common zeros and poles.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// One polynomial coefficient: a literal `[re, im]` or an expression in the
/// problem parameters (`"-delta^2"`).
#[derive(Debug, Clone, PartialEq)]
pub enum Coef {
    Num(C64),
    Expr(Expr),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoefRepr {
    Num([f64; 2]),
    Real(f64),
    Expr(String),
}

impl Serialize for Coef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Coef::Num(z) => CoefRepr::Num([z.re, z.im]).serialize(s),
            Coef::Expr(e) => CoefRepr::Expr(e.source().to_string()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Coef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match CoefRepr::deserialize(d)? {
            CoefRepr::Num([re, im]) => Ok(Coef::Num(C64::new(re, im))),
            CoefRepr::Real(re) => Ok(Coef::Num(C64::new(re, 0.0))),
            CoefRepr::Expr(s) => Expr::parse(&s).map(Coef::Expr).map_err(serde::de::Error::custom),
        }
    }
}

impl From<C64> for Coef {
    fn from(z: C64) -> Self {
        Coef::Num(z)
    }
}

impl Coef {
    pub fn eval(&self, params: &BTreeMap<String, C64>) -> Result<C64> {
        match self {
            Coef::Num(z) => Ok(*z),
            Coef::Expr(e) => e.eval(params),
        }
    }
}

/// Coefficient lists of `R = num/den`, ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalSpec {
    pub num: Vec<Coef>,
    #[serde(default = "unit_den")]
    pub den: Vec<Coef>,
}

fn unit_den() -> Vec<Coef> {
    vec![Coef::Num(C64::new(1.0, 0.0))]
}

/// Zeros and poles of `R` with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Singularities {
    #[serde(with = "roots_json")]
    pub zeros: Vec<Root>,
    #[serde(with = "roots_json")]
    pub poles: Vec<Root>,
}

mod roots_json {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct R {
        z: [f64; 2],
        order: u32,
    }

    pub fn serialize<S: Serializer>(v: &[Root], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(|r| R { z: [r.z.re, r.z.im], order: r.order }).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Root>, D::Error> {
        Ok(Vec::<R>::deserialize(d)?
            .into_iter()
            .map(|r| Root { z: C64::new(r.z[0], r.z[1]), order: r.order })
            .collect())
    }
}

/// Squared phase integrand `R(z, λ) = num(z)/den(z)` with bound parameters.
#[derive(Debug, Clone)]
pub struct RationalIntegrand {
    spec: RationalSpec,
    params: BTreeMap<String, C64>,
    num: Poly,
    den: Poly,
    sing: Singularities,
}

impl PartialEq for RationalIntegrand {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.params == other.params
    }
}

impl RationalIntegrand {
    pub fn new(spec: RationalSpec, params: BTreeMap<String, C64>) -> Result<Self> {
        let num: Vec<C64> = spec.num.iter().map(|c| c.eval(&params)).collect::<Result<_>>()?;
        let den: Vec<C64> = spec.den.iter().map(|c| c.eval(&params)).collect::<Result<_>>()?;
        Self::build(spec, params, Poly::new(num), Poly::new(den))
    }

    /// Literal coefficients, no parameters.
    pub fn from_coeffs(num: Vec<C64>, den: Vec<C64>) -> Result<Self> {
        let spec = RationalSpec {
            num: num.iter().map(|&z| Coef::Num(z)).collect(),
            den: den.iter().map(|&z| Coef::Num(z)).collect(),
        };
        Self::build(spec, BTreeMap::new(), Poly::new(num), Poly::new(den))
    }

    pub fn polynomial(coeffs: Vec<C64>) -> Result<Self> {
        Self::from_coeffs(coeffs, vec![C64::new(1.0, 0.0)])
    }

    fn build(spec: RationalSpec, params: BTreeMap<String, C64>, num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("denominator is identically zero".into()));
        }
        for c in num.coeffs().iter().chain(den.coeffs()) {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::InvalidInput("non-finite coefficient".into()));
            }
        }
        let sing = if num.is_zero() {
            Singularities { zeros: Vec::new(), poles: den.roots() }
        } else {
            let mut zeros = num.roots();
            let mut poles = den.roots();
            cancel_common(&mut zeros, &mut poles, COINCIDENCE_TOL);
            Singularities { zeros, poles }
        };
        Ok(Self { spec, params, num, den, sing })
    }

    /// Same coefficient formulas with new parameter values.
    pub fn with_params(&self, params: BTreeMap<String, C64>) -> Result<Self> {
        Self::new(self.spec.clone(), params)
    }

    pub fn spec(&self) -> &RationalSpec {
        &self.spec
    }

    pub fn params(&self) -> &BTreeMap<String, C64> {
        &self.params
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == 0
    }

    /// Growth exponent `n` in `R ~ A zⁿ` at infinity.
    pub fn growth_degree(&self) -> i64 {
        self.num.degree() as i64 - self.den.degree() as i64
    }

    /// Leading coefficient `A` in `R ~ A zⁿ`.
    pub fn leading_coefficient(&self) -> C64 {
        self.num.leading() / self.den.leading()
    }

    pub fn singularities(&self) -> &Singularities {
        &self.sing
    }

    pub fn zeros(&self) -> &[Root] {
        &self.sing.zeros
    }

    pub fn poles(&self) -> &[Root] {
        &self.sing.poles
    }

    pub fn singular_points(&self) -> Vec<C64> {
        self.sing.zeros.iter().chain(&self.sing.poles).map(|r| r.z).collect()
    }

    /// Characteristic length: largest singularity modulus, at least 1.
    pub fn scale(&self) -> f64 {
        self.singular_points().iter().map(|z| z.norm()).fold(1.0, f64::max)
    }

    /// Typical spacing between singular points (used for default clearances).
    pub fn spacing(&self) -> f64 {
        let pts = self.singular_points();
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.min((pts[i] - pts[j]).norm());
            }
        }
        if best.is_finite() && best > 0.0 {
            best
        } else {
            self.scale()
        }
    }

    pub fn centroid(&self) -> C64 {
        let pts = self.singular_points();
        if pts.is_empty() {
            C64::new(0.0, 0.0)
        } else {
            pts.iter().sum::<C64>() / pts.len() as f64
        }
    }

    pub fn distance_to_singularity(&self, z: C64) -> f64 {
        self.singular_points().iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn distance_to_pole(&self, z: C64) -> f64 {
        self.sing.poles.iter().map(|p| (z - p.z).norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn eval_unchecked(&self, z: C64) -> C64 {
        self.num.eval(z) / self.den.eval(z)
    }

    /// `R(z)`; fails with `PoleHit` at (numerically) a pole.
    pub fn eval(&self, z: C64) -> Result<C64> {
        let d = self.den.eval(z);
        let near_pole = self.sing.poles.iter().any(|p| (z - p.z).norm() <= 1e-13 * p.z.norm().max(1.0));
        if d.norm() == 0.0 || near_pole {
            return Err(Error::PoleHit(z));
        }
        Ok(self.num.eval(z) / d)
    }

    /// `[R, R', R'']` at `z` from the exact rational derivatives.
    pub fn eval_d2(&self, z: C64) -> Result<[C64; 3]> {
        let [n0, n1, n2] = self.num.eval_d2(z);
        let [d0, d1, d2] = self.den.eval_d2(z);
        if d0.norm() == 0.0 {
            return Err(Error::PoleHit(z));
        }
        let r = n0 / d0;
        let r1 = (n1 - r * d1) / d0;
        let r2 = (n2 - 2.0 * r1 * d1 - r * d2) / d0;
        Ok([r, r1, r2])
    }
}

/// Zeros and poles of `R`, common factors cancelled at `coincidence_tol`.
pub fn find_zeros_poles_tol(r: &RationalIntegrand, coincidence_tol: f64) -> Result<Singularities> {
    require_nonzero(r.num(), "numerator")?;
    let mut zeros = r.num().roots();
    let mut poles = r.den().roots();
    cancel_common(&mut zeros, &mut poles, coincidence_tol);
    Ok(Singularities { zeros, poles })
}

pub fn find_zeros_poles(r: &RationalIntegrand) -> Result<Singularities> {
    find_zeros_poles_tol(r, COINCIDENCE_TOL)
}

pub fn evaluate(r: &RationalIntegrand, z: C64) -> Result<C64> {
    r.eval(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn weber(delta: f64) -> RationalIntegrand {
        let spec: RationalSpec =
            serde_json::from_str(r#"{"num": ["-delta^2", [0,0], [1,0]], "den": [[1,0]]}"#).unwrap();
        let params = [("delta".to_string(), c64(delta, 0.0))].into_iter().collect();
        RationalIntegrand::new(spec, params).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(weber(1.0).eval(c64(2.0, 0.0)).unwrap(), c64(3.0, 0.0));
        let fig1 = RationalIntegrand::from_coeffs(
            vec![c64(1.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)],
            vec![c64(0.0, 0.0), c64(1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(fig1.eval(c64(1.0, 0.0)).unwrap(), c64(0.0, 0.0));
        assert!(matches!(fig1.eval(c64(0.0, 0.0)), Err(Error::PoleHit(_))));
        let quartic = RationalIntegrand::polynomial(vec![
            c64(-1.0, 0.0),
            c64(0.0, 0.0),
            c64(0.0, 0.0),
            c64(0.0, 0.0),
            c64(1.0, 0.0),
        ])
        .unwrap();
        assert!(quartic.eval(c64(0.0, 1.0)).unwrap().norm() < 1e-15);
    }

    #[test]
    fn singularities_of_examples() {
        let s = find_zeros_poles(&weber(1.0)).unwrap();
        assert_eq!(s.zeros.len(), 2);
        assert!(s.poles.is_empty());
        // -z + g²/z with g = 2: (4 - z²)/z
        let fig1 = RationalIntegrand::from_coeffs(
            vec![c64(4.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)],
            vec![c64(0.0, 0.0), c64(1.0, 0.0)],
        )
        .unwrap();
        let s = find_zeros_poles(&fig1).unwrap();
        assert_eq!(s.zeros.len(), 2);
        assert_eq!(s.poles.len(), 1);
        assert!(s.poles[0].z.norm() < 1e-14);
        assert!(s.zeros.iter().all(|r| (r.z.norm() - 2.0).abs() < 1e-12));
    }

    #[test]
    fn cancellation() {
        // (z-1)(z+1) / (z-1)
        let r = RationalIntegrand::from_coeffs(
            vec![c64(-1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)],
            vec![c64(-1.0, 0.0), c64(1.0, 0.0)],
        )
        .unwrap();
        let s = find_zeros_poles(&r).unwrap();
        assert_eq!(s.zeros.len(), 1);
        assert!(s.poles.is_empty());
    }

    #[test]
    fn degenerate_numerator() {
        let r = RationalIntegrand::polynomial(vec![c64(0.0, 0.0)]).unwrap();
        assert!(matches!(find_zeros_poles(&r), Err(Error::DegenerateInput(_))));
        assert!(RationalIntegrand::from_coeffs(vec![c64(1.0, 0.0)], vec![c64(0.0, 0.0)]).is_err());
    }

    #[test]
    fn rational_derivatives() {
        let r = RationalIntegrand::from_coeffs(
            vec![c64(1.0, 0.5), c64(0.0, 0.0), c64(-1.0, 0.0)],
            vec![c64(0.3, 0.0), c64(1.0, 0.0)],
        )
        .unwrap();
        let z = c64(0.7, 0.4);
        let [v, d1, d2] = r.eval_d2(z).unwrap();
        let h = 1e-4;
        let fd1 = (r.eval_unchecked(z + h) - r.eval_unchecked(z - h)) / (2.0 * h);
        let fd2 = (r.eval_unchecked(z + h) - 2.0 * v + r.eval_unchecked(z - h)) / (h * h);
        assert!((d1 - fd1).norm() < 1e-7);
        assert!((d2 - fd2).norm() < 1e-5);
    }
}

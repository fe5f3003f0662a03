//! Branch-tracked phase integrand `q = √R`, phase integrals, the validity
//! parameter `ε` and the base solutions `y± = q^{-1/2} e^{±iω}`.

mod track;

use serde::{Deserialize, Serialize};

use track::nearest_sign;
pub use track::Track;

use crate::cplane::quad::integrate_segments;
use crate::cplane::{PathSpec, RationalIntegrand};
use crate::{Error, Result, C64};

/// Default `|ε|` threshold for matching points.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 1e-8;

/// Relative floor for phase-integral quadrature.
const PHASE_REL_TOL: f64 = 4e-15;

/// A chosen branch of `q` fixed by its value at an anchor point.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSheet {
    integrand: RationalIntegrand,
    anchor: C64,
    anchor_value: C64,
    anchor_sqrt: C64,
}

impl BranchSheet {
    /// `value` must square to `R(anchor)` to 1e-12 relative.
    pub fn new(integrand: RationalIntegrand, anchor: C64, value: C64) -> Result<Self> {
        let r = integrand.eval(anchor)?;
        if r.norm() == 0.0 || integrand.distance_to_singularity(anchor) <= 1e-12 * integrand.scale() {
            return Err(Error::SingularPoint(anchor));
        }
        if (value * value - r).norm() > 1e-12 * r.norm() {
            return Err(Error::InvalidInput(format!("anchor value {value} does not square to R({anchor}) = {r}")));
        }
        Ok(Self { integrand, anchor, anchor_value: value, anchor_sqrt: value.sqrt() })
    }

    /// Principal square root at the anchor.
    pub fn principal(integrand: RationalIntegrand, anchor: C64) -> Result<Self> {
        let r = integrand.eval(anchor)?;
        Self::new(integrand, anchor, r.sqrt())
    }

    /// Branch that behaves like `√A · z^{n/2}` (principal powers) at large
    /// `|z|` in the direction of `z` from the singularity centroid, continued
    /// radially inward to `z`.
    pub fn from_infinity(integrand: RationalIntegrand, z: C64) -> Result<Self> {
        let c = integrand.centroid();
        let dir = z - c;
        if dir.norm() == 0.0 {
            return Err(Error::InvalidInput("from_infinity needs a point away from the centroid".into()));
        }
        let far_r = 1e3 * integrand.scale().max(dir.norm());
        let far = c + dir / dir.norm() * far_r;
        let n = integrand.growth_degree() as f64;
        let asym = integrand.leading_coefficient().sqrt() * (far.ln() * (n / 2.0)).exp();
        let q_far = nearest_sign(integrand.eval(far)?.sqrt(), asym);
        let far_sheet = Self::new(integrand, far, q_far)?;
        far_sheet.continue_along(&PathSpec::segment(far, z)?)
    }

    pub fn integrand(&self) -> &RationalIntegrand {
        &self.integrand
    }

    pub fn anchor(&self) -> C64 {
        self.anchor
    }

    pub fn anchor_value(&self) -> C64 {
        self.anchor_value
    }

    /// Continued `√q` at the anchor (principal unless set by continuation).
    pub fn anchor_sqrt(&self) -> C64 {
        self.anchor_sqrt
    }

    /// Opposite sign of `q` (the `√q` prefactor is rotated by `i`).
    pub fn negated(&self) -> Self {
        Self {
            integrand: self.integrand.clone(),
            anchor: self.anchor,
            anchor_value: -self.anchor_value,
            anchor_sqrt: self.anchor_sqrt * C64::new(0.0, 1.0),
        }
    }

    fn anchor_index(&self, path: &PathSpec) -> Result<usize> {
        let scale = path.waypoints().iter().map(|z| z.norm()).fold(1.0, f64::max);
        path.waypoints()
            .iter()
            .position(|w| (w - self.anchor).norm() <= 1e-12 * scale)
            .ok_or(Error::SheetUnreachable { anchor: self.anchor })
    }

    /// Continue `q` along `path`; the anchor must be one of its waypoints.
    pub fn track(&self, path: &PathSpec) -> Result<Track> {
        let i = self.anchor_index(path)?;
        Track::build(&self.integrand, path, i, self.anchor_value, self.anchor_sqrt)
    }

    /// The same branch re-anchored at the end of `path`.
    pub fn continue_along(&self, path: &PathSpec) -> Result<Self> {
        let tr = self.track(path)?;
        let end = path.end();
        let q = tr.end_q();
        let mut s = Self::new(self.integrand.clone(), end, q)?;
        s.anchor_sqrt = tr.end_sqrt_q();
        Ok(s)
    }

    /// `q` at `z`, continued along the straight segment from the anchor.
    pub fn value_at(&self, z: C64) -> Result<C64> {
        if z == self.anchor {
            return Ok(self.anchor_value);
        }
        Ok(self.track(&PathSpec::segment(self.anchor, z)?)?.end_q())
    }
}

/// Phase integral `ω = ∫ q dz` along a recorded path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseValue {
    #[serde(with = "crate::serde_c64")]
    pub omega: C64,
    #[serde(with = "crate::serde_c64")]
    pub basepoint: C64,
    #[serde(with = "crate::serde_c64")]
    pub endpoint: C64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<PathSpec>,
    #[serde(skip)]
    pub err_estimate: f64,
}

/// `∫ q dz` along `track`'s path with the tracked branch.
pub(crate) fn integrate_track(track: &Track, tol: f64) -> Result<(C64, f64)> {
    let segments = track.path().segments();
    let q = integrate_segments(&segments, |seg, t, z| track.q(seg, t, z), tol, PHASE_REL_TOL)?;
    Ok((q.value, q.err_estimate))
}

/// `∫ q dz` over segments `range` of `track` only.
pub(crate) fn integrate_track_range(track: &Track, range: std::ops::Range<usize>, tol: f64) -> Result<C64> {
    let all = track.path().segments();
    let off = range.start;
    let segments = &all[range];
    if segments.is_empty() {
        return Ok(C64::new(0.0, 0.0));
    }
    let q = integrate_segments(segments, |seg, t, z| track.q(seg + off, t, z), tol, PHASE_REL_TOL)?;
    Ok(q.value)
}

pub fn phase_integral(sheet: &BranchSheet, path: &PathSpec, tol: f64) -> Result<PhaseValue> {
    if !crate::cplane::quad::is_positive(tol) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let track = sheet.track(path)?;
    let (omega, err) = integrate_track(&track, tol)?;
    Ok(PhaseValue { omega, basepoint: path.start(), endpoint: path.end(), path: Some(path.clone()), err_estimate: err })
}

/// `ε = (5/16) R'²/R³ − (1/4) R''/R²`, the lowest-order validity parameter.
pub fn epsilon_of(integrand: &RationalIntegrand, z: C64) -> Result<C64> {
    if integrand.distance_to_singularity(z) <= 1e-12 * integrand.scale() {
        return Err(Error::SingularPoint(z));
    }
    let [r, r1, r2] = integrand.eval_d2(z).map_err(|_| Error::SingularPoint(z))?;
    if r.norm() == 0.0 {
        return Err(Error::SingularPoint(z));
    }
    Ok(r1 * r1 * (5.0 / 16.0) / (r * r * r) - r2 * 0.25 / (r * r))
}

pub fn epsilon(sheet: &BranchSheet, z: C64) -> Result<C64> {
    epsilon_of(&sheet.integrand, z)
}

/// Values and derivatives of the two base solutions at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisValues {
    #[serde(with = "crate::serde_c64")]
    pub y_plus: C64,
    #[serde(with = "crate::serde_c64")]
    pub y_plus_deriv: C64,
    #[serde(with = "crate::serde_c64")]
    pub y_minus: C64,
    #[serde(with = "crate::serde_c64")]
    pub y_minus_deriv: C64,
}

impl BasisValues {
    /// From `q`, continued `√q`, `ω` and `R'` at the point.
    pub fn from_parts(q: C64, sq: C64, omega: C64, r_prime: C64) -> Self {
        let i = C64::new(0.0, 1.0);
        let log_term = -r_prime / (4.0 * q * q);
        let y_plus = (i * omega).exp() / sq;
        let y_minus = (-i * omega).exp() / sq;
        Self {
            y_plus,
            y_plus_deriv: (i * q + log_term) * y_plus,
            y_minus,
            y_minus_deriv: (-i * q + log_term) * y_minus,
        }
    }

    pub fn wronskian(&self) -> C64 {
        self.y_plus * self.y_minus_deriv - self.y_minus * self.y_plus_deriv
    }
}

/// `y± = q^{-1/2} e^{±iω}` and derivatives at the endpoint of `omega`.
/// `q^{1/2}` is continued along the recorded path from the sheet anchor.
pub fn basis_values(sheet: &BranchSheet, omega: &PhaseValue, z: C64, threshold: f64) -> Result<BasisValues> {
    let scale = z.norm().max(1.0);
    if (z - omega.endpoint).norm() > 1e-12 * scale {
        return Err(Error::InvalidInput(format!("basis point {z} is not the phase endpoint {}", omega.endpoint)));
    }
    let eps = epsilon(sheet, z)?.norm();
    if eps > threshold {
        return Err(Error::ValidityViolation { z, eps, threshold });
    }
    let (q, sq) = match &omega.path {
        Some(p) => {
            let tr = sheet.track(p)?;
            (tr.end_q(), tr.end_sqrt_q())
        }
        None if z == sheet.anchor => (sheet.anchor_value, sheet.anchor_sqrt),
        None => {
            let tr = sheet.track(&PathSpec::segment(sheet.anchor, z)?)?;
            (tr.end_q(), tr.end_sqrt_q())
        }
    };
    let [_, r1, _] = sheet.integrand.eval_d2(z)?;
    Ok(BasisValues::from_parts(q, sq, omega.omega, r1))
}

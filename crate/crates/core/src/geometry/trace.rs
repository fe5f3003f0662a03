//! Stokes and anti-Stokes line tracing by fixed-step RK4 along the unit
//! direction field of `q dz`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cplane::RationalIntegrand;
use crate::{Error, Result, C64};

/// Step limit near singular points as a fraction of their distance.
const NEAR_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    /// `Re[q dz] = 0`
    Stokes,
    /// `Im[q dz] = 0`
    #[serde(alias = "anti-stokes", alias = "anti_stokes")]
    Antistokes,
}

impl std::str::FromStr for LineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stokes" => Ok(LineKind::Stokes),
            "antistokes" | "anti-stokes" | "anti_stokes" => Ok(LineKind::Antistokes),
            _ => Err(Error::InvalidInput(format!("unknown line kind {s:?}"))),
        }
    }
}

/// A traced polyline and the singular point it emanates from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracedLine {
    #[serde(with = "crate::serde_c64")]
    pub origin: C64,
    #[serde(with = "crate::serde_c64::vec")]
    pub points: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Truncation radius; defaults to `max(3·max|singularity|, 5)`.
    pub radius: Option<f64>,
    pub max_steps: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { radius: None, max_steps: 200_000 }
    }
}

pub fn default_radius(integrand: &RationalIntegrand) -> f64 {
    let m = integrand.singular_points().iter().map(|z| z.norm()).fold(0.0, f64::max);
    (3.0 * m).max(5.0)
}

/// Local launch angles at a singular point of order `m` (negative for
/// poles) where `R ≈ a (z − z₀)^m`.
pub fn launch_angles(a: C64, m: i32, kind: LineKind) -> Vec<f64> {
    let p = m + 2;
    if p == 0 {
        return Vec::new();
    }
    let target = match kind {
        LineKind::Stokes => PI / 2.0,
        LineKind::Antistokes => 0.0,
    };
    (0..p.abs()).map(|k| ((target - a.arg() / 2.0 + k as f64 * PI) * 2.0 / p as f64).rem_euclid(2.0 * PI)).collect()
}

/// Leading coefficient `a` of `R ≈ a (z − z₀)^m` near a singular point.
fn local_coefficient(integrand: &RationalIntegrand, z0: C64, m: i32, probe: f64) -> C64 {
    // average over a few directions to suppress the next-order term
    let n = 8;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        let dz = C64::from_polar(probe, 2.0 * PI * k as f64 / n as f64 + 0.1);
        acc += integrand.eval_unchecked(z0 + dz) / dz.powi(m);
    }
    acc / n as f64
}

fn direction(integrand: &RationalIntegrand, z: C64, kind: LineKind, prev: C64) -> C64 {
    let q = integrand.eval_unchecked(z).sqrt();
    let u = match kind {
        LineKind::Stokes => C64::new(0.0, 1.0) * q.conj(),
        LineKind::Antistokes => q.conj(),
    };
    let n = u.norm();
    if n == 0.0 || !n.is_finite() {
        return prev;
    }
    let u = u / n;
    if (u - prev).norm_sqr() <= (u + prev).norm_sqr() {
        u
    } else {
        -u
    }
}

/// Pull `zn` back onto the level set through `z` of `Re ω` (Stokes) or
/// `Im ω` (anti-Stokes), using Simpson's rule for `ω` over the chord.
fn project(integrand: &RationalIntegrand, z: C64, zn: C64, kind: LineKind) -> C64 {
    let q0 = integrand.eval_unchecked(z).sqrt();
    let align = |q: C64, r: C64| if (q - r).norm_sqr() <= (q + r).norm_sqr() { q } else { -q };
    let qm = align(integrand.eval_unchecked((z + zn) / 2.0).sqrt(), q0);
    let q1 = align(integrand.eval_unchecked(zn).sqrt(), qm);
    let dw = (zn - z) * (q0 + 4.0 * qm + q1) / 6.0;
    let a = q1.norm();
    if a == 0.0 || !dw.re.is_finite() || !dw.im.is_finite() {
        return zn;
    }
    match kind {
        LineKind::Stokes => zn - q1.conj() / a * (dw.re / a),
        LineKind::Antistokes => zn - C64::new(0.0, 1.0) * q1.conj() / a * (dw.im / a),
    }
}

/// Trace every line of `kind` from every zero and pole.
pub fn trace_lines(integrand: &RationalIntegrand, kind: LineKind, opts: &TraceOptions) -> Result<Vec<TracedLine>> {
    let radius = opts.radius.unwrap_or_else(|| default_radius(integrand));
    let sing: Vec<(C64, i32)> = integrand
        .zeros()
        .iter()
        .map(|r| (r.z, r.order as i32))
        .chain(integrand.poles().iter().map(|r| (r.z, -(r.order as i32))))
        .collect();
    if sing.iter().any(|(z, _)| z.norm() >= radius) {
        return Err(Error::InvalidInput(format!("truncation radius {radius} does not enclose all singularities")));
    }
    let mut lines = Vec::new();
    for &(z0, m) in &sing {
        let others: Vec<C64> = sing.iter().map(|s| s.0).filter(|&p| p != z0).collect();
        let near = others.iter().map(|p| (p - z0).norm()).fold(f64::INFINITY, f64::min);
        let start_r = (1e-4 * radius).min(0.01 * near);
        let a = local_coefficient(integrand, z0, m, start_r);
        for theta in launch_angles(a, m, kind) {
            lines.push(trace_one(integrand, z0, theta, start_r, &others, kind, radius, opts.max_steps)?);
        }
    }
    Ok(lines)
}

#[allow(clippy::too_many_arguments)]
fn trace_one(
    integrand: &RationalIntegrand,
    z0: C64,
    theta: f64,
    start_r: f64,
    others: &[C64],
    kind: LineKind,
    radius: f64,
    max_steps: usize,
) -> Result<TracedLine> {
    let scale = radius;
    let clearance = 1e-3 * scale;
    let mut u = C64::from_polar(1.0, theta);
    let mut z = z0 + u * start_r;
    let mut pts = vec![z0, z];
    let mut travelled = start_r;
    for _ in 0..max_steps {
        let d_other = others.iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min);
        if d_other < clearance {
            let p = *others.iter().min_by(|a, b| (z - *a).norm().total_cmp(&(z - *b).norm())).unwrap();
            pts.push(p);
            return Ok(TracedLine { origin: z0, points: pts });
        }
        let d_self = (z - z0).norm();
        if d_self < clearance && travelled > 10.0 * clearance {
            pts.push(z0);
            return Ok(TracedLine { origin: z0, points: pts });
        }
        let h = (0.01 * scale).min(NEAR_FRACTION * d_other.min(d_self));
        if h < 1e-12 * scale {
            return Err(Error::TraceStall(z));
        }
        let k1 = direction(integrand, z, kind, u);
        let k2 = direction(integrand, z + k1 * (h / 2.0), kind, k1);
        let k3 = direction(integrand, z + k2 * (h / 2.0), kind, k2);
        let k4 = direction(integrand, z + k3 * h, kind, k3);
        let zn = z + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
        let zn = project(integrand, z, zn, kind);
        u = direction(integrand, zn, kind, k4);
        travelled += (zn - z).norm();
        if zn.norm() >= radius {
            // clip to the truncation circle
            let (a, b) = (z, zn);
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (a + (b - a) * mid).norm() < radius {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            pts.push(project(integrand, a, a + (b - a) * hi, kind));
            return Ok(TracedLine { origin: z0, points: pts });
        }
        z = zn;
        pts.push(z);
    }
    Err(Error::TraceStall(z))
}

/// Anti-Stokes wedge at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wedge {
    pub index: usize,
    /// Asymptotic anti-Stokes direction inside the wedge.
    pub direction: f64,
    /// Bounding asymptotic Stokes directions.
    pub from: f64,
    pub to: f64,
}

fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Asymptotic directions at infinity where `A z^n` makes `q dz` real
/// (anti-Stokes) or imaginary (Stokes); `n` is the growth degree.
pub fn asymptotic_directions(integrand: &RationalIntegrand, kind: LineKind) -> Vec<f64> {
    let p = integrand.growth_degree() + 2;
    if p <= 0 {
        return Vec::new();
    }
    let target = match kind {
        LineKind::Stokes => PI / 2.0,
        LineKind::Antistokes => 0.0,
    };
    let arg_a = integrand.leading_coefficient().arg();
    let mut v: Vec<f64> = (0..p).map(|k| wrap((target - arg_a / 2.0 + k as f64 * PI) * 2.0 / p as f64)).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// The `n + 2` anti-Stokes wedges of growth degree `n`.
pub fn wedges(integrand: &RationalIntegrand) -> Vec<Wedge> {
    let dirs = asymptotic_directions(integrand, LineKind::Antistokes);
    let p = dirs.len() as f64;
    dirs.iter()
        .enumerate()
        .map(|(index, &direction)| Wedge {
            index,
            direction,
            from: wrap(direction - PI / p),
            to: wrap(direction + PI / p),
        })
        .collect()
}

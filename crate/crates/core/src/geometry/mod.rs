//! Stokes geometry: traced Stokes / anti-Stokes lines, wedges at infinity,
//! dominance of the base solutions, and traditional or effective diagrams
//! with JSON and SVG output.

mod svg;
mod trace;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use trace::{
    asymptotic_directions, default_radius, launch_angles, trace_lines, wedges, LineKind, TraceOptions, TracedLine,
    Wedge,
};

use crate::cplane::path::segment_distance;
use crate::cplane::{PathSpec, RationalIntegrand, Singularities};
use crate::phase::{phase_integral, BranchSheet, PhaseValue};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dominance {
    Plus,
    Minus,
}

/// Relative tolerance below which the probe is considered to sit on an
/// anti-Stokes line.
pub const DOMINANCE_TOL: f64 = 1e-3;

/// Which base solution grows along the local Stokes direction pointing away
/// from the basepoint of `omega`.
pub fn classify_dominance(probe: C64, sheet: &BranchSheet, omega: &PhaseValue) -> Result<Dominance> {
    let q = sheet.value_at(probe)?;
    // Re(iω) decreases along v = i·conj(q), i.e. |y₋| grows along v
    let v = C64::new(0.0, 1.0) * q.conj();
    let outward = probe - omega.basepoint;
    let proj = (v.conj() * outward).re;
    if proj.abs() < DOMINANCE_TOL * v.norm() * outward.norm() || outward.norm() == 0.0 {
        return Err(Error::AmbiguousDominance(probe));
    }
    Ok(if proj > 0.0 { Dominance::Minus } else { Dominance::Plus })
}

/// Traditional Stokes diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesDiagram {
    pub singularities: Singularities,
    pub stokes: Vec<TracedLine>,
    pub antistokes: Vec<TracedLine>,
    pub wedges: Vec<Wedge>,
    /// Radial cuts from each odd-order singular point to the truncation circle.
    #[serde(default)]
    pub cuts: Vec<TracedLine>,
    pub radius: f64,
}

impl StokesDiagram {
    pub fn trace(integrand: &RationalIntegrand, opts: &TraceOptions) -> Result<Self> {
        let radius = opts.radius.unwrap_or_else(|| default_radius(integrand));
        let opts = TraceOptions { radius: Some(radius), ..*opts };
        let c = integrand.centroid();
        let cuts = integrand
            .zeros()
            .iter()
            .chain(integrand.poles())
            .filter(|r| r.order % 2 == 1)
            .map(|r| {
                let d = r.z - c;
                let dir = if d.norm() > 1e-12 { d / d.norm() } else { C64::new(-1.0, 0.0) };
                // from z along dir to the circle |w| = radius
                let b = (dir.conj() * r.z).re;
                let t = -b + (b * b + radius * radius - r.z.norm_sqr()).max(0.0).sqrt();
                TracedLine { origin: r.z, points: vec![r.z, r.z + dir * t] }
            })
            .collect();
        Ok(Self {
            singularities: integrand.singularities().clone(),
            stokes: trace_lines(integrand, LineKind::Stokes, &opts)?,
            antistokes: trace_lines(integrand, LineKind::Antistokes, &opts)?,
            wedges: wedges(integrand),
            cuts,
            radius,
        })
    }

    pub fn lines(&self, kind: LineKind) -> &[TracedLine] {
        match kind {
            LineKind::Stokes => &self.stokes,
            LineKind::Antistokes => &self.antistokes,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_svg(&self) -> String {
        svg::render(self, None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveLine {
    pub label: String,
    #[serde(with = "crate::serde_c64")]
    pub basepoint: C64,
    #[serde(with = "crate::serde_c64::vec")]
    pub points: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseAnnotation {
    #[serde(with = "crate::serde_c64")]
    pub from: C64,
    #[serde(with = "crate::serde_c64")]
    pub to: C64,
    #[serde(with = "crate::serde_c64")]
    pub omega: C64,
}

/// Effective diagram: one line per Stokes domain from its basepoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveStokesDiagram {
    pub base: StokesDiagram,
    pub effective_lines: Vec<EffectiveLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation_path: Option<PathSpec>,
    /// Stokes direction (radians, as text) → constant name.
    pub constant_labels: BTreeMap<String, String>,
    pub phase_annotations: Vec<PhaseAnnotation>,
}

/// `s_k` for Stokes direction `θ = k·2π/(n+2)`, with half-integers written
/// as fractions (`s_3/2`).
pub fn constant_label(theta: f64, growth: i64) -> String {
    let k = theta / (2.0 * PI / (growth + 2) as f64);
    let twice = (2.0 * k).round();
    if (2.0 * k - twice).abs() < 1e-9 {
        let t = twice as i64;
        if t % 2 == 0 {
            format!("s_{}", t / 2)
        } else {
            format!("s_{t}/2")
        }
    } else {
        format!("s_{k:.3}")
    }
}

impl EffectiveStokesDiagram {
    /// Empty effective diagram over `base`.
    pub fn new(base: StokesDiagram) -> Self {
        Self {
            base,
            effective_lines: Vec::new(),
            continuation_path: None,
            constant_labels: BTreeMap::new(),
            phase_annotations: Vec::new(),
        }
    }

    /// Default construction: for each asymptotic Stokes direction a line
    /// from the zero lying furthest in that direction out to the truncation
    /// circle; consecutive distinct basepoints are annotated with `ω`.
    pub fn with_default_lines(integrand: &RationalIntegrand, base: StokesDiagram) -> Result<Self> {
        let mut d = Self::new(base);
        let zeros: Vec<C64> = integrand.zeros().iter().map(|r| r.z).collect();
        let growth = integrand.growth_degree();
        for theta in asymptotic_directions(integrand, LineKind::Stokes) {
            let dir = C64::from_polar(1.0, theta);
            let bp = zeros
                .iter()
                .copied()
                .max_by(|a, b| (dir.conj() * a).re.total_cmp(&(dir.conj() * b).re))
                .unwrap_or(C64::new(0.0, 0.0));
            let label = constant_label(theta, growth);
            d.add_line(&label, bp, dir * d.base.radius)?;
            d.constant_labels.insert(format!("{theta:.6}"), label);
        }
        let bps: Vec<C64> = d.effective_lines.iter().map(|l| l.basepoint).collect();
        for w in bps.windows(2) {
            if (w[0] - w[1]).norm() > 1e-9 {
                if let Ok(a) = annotate(integrand, w[0], w[1]) {
                    if !d.phase_annotations.iter().any(|p| p.from == a.from && p.to == a.to) {
                        d.phase_annotations.push(a);
                    }
                }
            }
        }
        Ok(d)
    }

    /// Add a straight effective line from `basepoint` to `attach`.
    pub fn add_line(&mut self, label: &str, basepoint: C64, attach: C64) -> Result<()> {
        if basepoint == attach {
            return Err(Error::InvalidInput("effective line has zero length".into()));
        }
        self.effective_lines.push(EffectiveLine {
            label: label.to_string(),
            basepoint,
            points: vec![basepoint, attach],
        });
        Ok(())
    }

    pub fn with_continuation_path(mut self, path: PathSpec) -> Self {
        self.continuation_path = Some(path);
        self
    }

    /// Effective lines must not cross each other or the continuation path
    /// (shared basepoints excepted).
    pub fn check_non_crossing(&self) -> Result<()> {
        let segs = |pts: &[C64]| pts.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>();
        for (i, a) in self.effective_lines.iter().enumerate() {
            for b in &self.effective_lines[i + 1..] {
                for &(p, q) in &segs(&a.points) {
                    for &(r, s) in &segs(&b.points) {
                        if segments_cross(p, q, r, s) {
                            return Err(Error::PathClash(format!("effective lines {} and {} cross", a.label, b.label)));
                        }
                    }
                }
            }
            if let Some(g) = &self.continuation_path {
                for &(p, q) in &segs(&a.points) {
                    for (r, s) in g.segments() {
                        if segments_cross(p, q, r, s) {
                            return Err(Error::PathClash(format!(
                                "effective line {} crosses the continuation path more than at its end",
                                a.label
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_svg(&self) -> String {
        svg::render(&self.base, Some(self))
    }
}

fn annotate(integrand: &RationalIntegrand, a: C64, b: C64) -> Result<PhaseAnnotation> {
    let mid = (a + b) / 2.0;
    let sheet = BranchSheet::principal(integrand.clone(), mid)?;
    let path = PathSpec::open(vec![a, mid, b])?;
    let w = phase_integral(&sheet, &path, 1e-10)?;
    Ok(PhaseAnnotation { from: a, to: b, omega: w.omega })
}

fn cross2(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Proper intersection of two segments; touching at endpoints does not count.
fn segments_cross(p: C64, q: C64, r: C64, s: C64) -> bool {
    let scale = [p, q, r, s].iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    let shared = [p, q].iter().any(|&x| (x - r).norm() < tol || (x - s).norm() < tol);
    if shared {
        // collinear overlap is still a clash
        let d = segment_distance(if (p - r).norm() < tol || (p - s).norm() < tol { q } else { p }, r, s);
        return d < tol && (q - p).norm() > tol;
    }
    let d1 = cross2(q - p, r - p);
    let d2 = cross2(q - p, s - p);
    let d3 = cross2(s - r, p - r);
    let d4 = cross2(s - r, q - r);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return true;
    }
    segment_distance(r, p, q) < tol
        || segment_distance(s, p, q) < tol
        || segment_distance(p, r, s) < tol
        || segment_distance(q, r, s) < tol
}

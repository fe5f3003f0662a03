//! SVG rendering: anti-Stokes solid, Stokes dashed, zeros as dots, poles as
//! stars, effective lines bold, the continuation path with an arrow head.

use std::fmt::Write;

use super::{EffectiveStokesDiagram, StokesDiagram};
use crate::C64;

const SIZE: f64 = 600.0;

struct Frame {
    radius: f64,
}

impl Frame {
    fn x(&self, z: C64) -> f64 {
        (z.re / self.radius + 1.0) * SIZE / 2.0
    }
    fn y(&self, z: C64) -> f64 {
        (1.0 - z.im / self.radius) * SIZE / 2.0
    }
    fn points(&self, pts: &[C64]) -> String {
        pts.iter().map(|&z| format!("{:.2},{:.2}", self.x(z), self.y(z))).collect::<Vec<_>>().join(" ")
    }
}

fn star(cx: f64, cy: f64, r: f64) -> String {
    (0..10)
        .map(|k| {
            let rr = if k % 2 == 0 { r } else { 0.45 * r };
            let t = std::f64::consts::PI * (k as f64 / 5.0 - 0.5);
            format!("{:.2},{:.2}", cx + rr * t.cos(), cy + rr * t.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub(super) fn render(d: &StokesDiagram, eff: Option<&EffectiveStokesDiagram>) -> String {
    let f = Frame { radius: d.radius * 1.05 };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    s.push_str(
        "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"8\" markerHeight=\"8\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\"/></marker></defs>\n",
    );
    let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let centre = C64::new(0.0, 0.0);
    let _ = writeln!(
        s,
        r##"<circle class="truncation" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="#bbb" stroke-width="0.5"/>"##,
        f.x(centre),
        f.y(centre),
        d.radius / f.radius * SIZE / 2.0
    );
    for w in &d.wedges {
        let tip = C64::from_polar(d.radius, w.direction);
        let _ = writeln!(
            s,
            r##"<line class="wedge" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#9cf" stroke-width="0.5" stroke-dasharray="1,3"/>"##,
            f.x(tip * 0.92),
            f.y(tip * 0.92),
            f.x(tip),
            f.y(tip)
        );
    }
    for c in &d.cuts {
        let _ = writeln!(
            s,
            r##"<polyline class="cut" points="{}" fill="none" stroke="#c66" stroke-width="0.8" stroke-dasharray="2,2"/>"##,
            f.points(&c.points)
        );
    }
    let dimmed = eff.is_some();
    let (op_a, op_s) = if dimmed { (0.35, 0.35) } else { (1.0, 1.0) };
    for l in &d.antistokes {
        let _ = writeln!(
            s,
            r#"<polyline class="antistokes" points="{}" fill="none" stroke="black" stroke-width="1" opacity="{op_a}"/>"#,
            f.points(&l.points)
        );
    }
    for l in &d.stokes {
        let _ = writeln!(
            s,
            r#"<polyline class="stokes" points="{}" fill="none" stroke="black" stroke-width="1" stroke-dasharray="6,4" opacity="{op_s}"/>"#,
            f.points(&l.points)
        );
    }
    if let Some(e) = eff {
        for l in &e.effective_lines {
            let _ = writeln!(
                s,
                r#"<polyline class="effective" points="{}" fill="none" stroke="black" stroke-width="3" stroke-dasharray="10,5"/>"#,
                f.points(&l.points)
            );
            let end = *l.points.last().unwrap();
            let _ = writeln!(
                s,
                r#"<text class="label" x="{:.2}" y="{:.2}" font-size="14">{}</text>"#,
                f.x(end * 0.9),
                f.y(end * 0.9),
                l.label
            );
        }
        if let Some(g) = &e.continuation_path {
            let _ = writeln!(
                s,
                r##"<polyline class="continuation" points="{}" fill="none" stroke="#06c" stroke-width="1.5" marker-end="url(#arrow)"/>"##,
                f.points(&g.vertices())
            );
        }
        for a in &e.phase_annotations {
            let m = (a.from + a.to) / 2.0;
            let _ = writeln!(
                s,
                r#"<text class="phase" x="{:.2}" y="{:.2}" font-size="11">ω = {:.4}{:+.4}i</text>"#,
                f.x(m),
                f.y(m) - 6.0,
                a.omega.re,
                a.omega.im
            );
        }
    }
    for z in &d.singularities.zeros {
        let _ = writeln!(s, r#"<circle class="zero" cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#, f.x(z.z), f.y(z.z));
    }
    for p in &d.singularities.poles {
        let _ = writeln!(s, r#"<polygon class="pole" points="{}" fill="black"/>"#, star(f.x(p.z), f.y(p.z), 7.0));
    }
    s.push_str("</svg>\n");
    s
}

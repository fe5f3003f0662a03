use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Oriented piecewise-linear path.
///
/// Closed paths list each vertex once; the closing segment from the last
/// waypoint back to the first is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathJson", into = "PathJson")]
pub struct PathSpec {
    waypoints: Vec<C64>,
    closed: bool,
    clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathJson {
    #[serde(with = "crate::serde_c64::vec")]
    pub waypoints: Vec<C64>,
    #[serde(default)]
    pub closed: bool,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub clearance: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl TryFrom<PathJson> for PathSpec {
    type Error = Error;
    fn try_from(j: PathJson) -> Result<Self> {
        PathSpec::new(j.waypoints, j.closed).map(|p| p.with_clearance(j.clearance))
    }
}

impl From<PathSpec> for PathJson {
    fn from(p: PathSpec) -> Self {
        PathJson { waypoints: p.waypoints, closed: p.closed, clearance: p.clearance }
    }
}

/// Distance from `p` to the segment `a -> b`.
pub fn segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

impl PathSpec {
    pub fn new(waypoints: Vec<C64>, closed: bool) -> Result<Self> {
        if waypoints.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("path waypoints must be finite".into()));
        }
        if closed && waypoints.len() < 3 {
            return Err(Error::InvalidInput("closed path needs at least 3 waypoints".into()));
        }
        if waypoints.len() < 2 {
            return Err(Error::InvalidInput("path needs at least 2 waypoints".into()));
        }
        for w in waypoints.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidInput(format!("repeated consecutive waypoint {}", w[0])));
            }
        }
        if closed && waypoints.first() == waypoints.last() {
            return Err(Error::InvalidInput("closed path must not repeat its first waypoint at the end".into()));
        }
        Ok(Self { waypoints, closed, clearance: 0.0 })
    }

    pub fn open(waypoints: Vec<C64>) -> Result<Self> {
        Self::new(waypoints, false)
    }

    pub fn segment(a: C64, b: C64) -> Result<Self> {
        Self::new(vec![a, b], false)
    }

    pub fn with_clearance(mut self, clearance: f64) -> Self {
        self.clearance = clearance.max(0.0);
        self
    }

    /// Closed polygonal circle with `n` vertices, counterclockwise from angle 0.
    pub fn circle(centre: C64, r: f64, n: usize) -> Result<Self> {
        let n = n.max(3);
        let pts = (0..n).map(|k| centre + C64::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64)).collect();
        Self::new(pts, true)
    }

    pub fn waypoints(&self) -> &[C64] {
        &self.waypoints
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    pub fn start(&self) -> C64 {
        self.waypoints[0]
    }

    pub fn end(&self) -> C64 {
        if self.closed {
            self.waypoints[0]
        } else {
            *self.waypoints.last().unwrap()
        }
    }

    pub fn segments(&self) -> Vec<(C64, C64)> {
        let mut s: Vec<(C64, C64)> = self.waypoints.windows(2).map(|w| (w[0], w[1])).collect();
        if self.closed {
            s.push((*self.waypoints.last().unwrap(), self.waypoints[0]));
        }
        s
    }

    /// Vertices in traversal order, with the start repeated at the end for closed paths.
    pub fn vertices(&self) -> Vec<C64> {
        let mut v = self.waypoints.clone();
        if self.closed {
            v.push(self.waypoints[0]);
        }
        v
    }

    pub fn length(&self) -> f64 {
        self.segments().iter().map(|(a, b)| (b - a).norm()).sum()
    }

    pub fn reversed(&self) -> Self {
        let mut w = self.waypoints.clone();
        if self.closed {
            w[1..].reverse();
        } else {
            w.reverse();
        }
        Self { waypoints: w, closed: self.closed, clearance: self.clearance }
    }

    /// Open concatenation `self` then `other`. The joint must coincide to
    /// `1e-12` relative.
    pub fn concat(&self, other: &PathSpec) -> Result<Self> {
        let a = self.vertices();
        let b = other.vertices();
        let joint = *a.last().unwrap();
        let scale = joint.norm().max(1.0);
        if (joint - b[0]).norm() > 1e-12 * scale {
            return Err(Error::InvalidInput(format!("paths do not join: {} vs {}", joint, b[0])));
        }
        let mut w = a;
        w.extend_from_slice(&b[1..]);
        w.dedup();
        Ok(Self { waypoints: w, closed: false, clearance: self.clearance.min(other.clearance) })
    }

    /// Image of the path under a point map. Orientation follows the map.
    pub fn map(&self, f: impl Fn(C64) -> C64) -> Result<Self> {
        let w: Vec<C64> = self.waypoints.iter().map(|&z| f(z)).collect();
        Self::new(w, self.closed).map(|p| p.with_clearance(self.clearance))
    }

    /// Split every segment so no piece is longer than `max_len`.
    pub fn densified(&self, max_len: f64) -> Self {
        let mut w = vec![self.waypoints[0]];
        for (a, b) in self.segments() {
            let n = ((b - a).norm() / max_len).ceil().max(1.0) as usize;
            for k in 1..=n {
                w.push(a + (b - a) * (k as f64 / n as f64));
            }
        }
        if self.closed {
            w.pop();
        }
        Self { waypoints: w, closed: self.closed, clearance: self.clearance }
    }

    pub fn min_distance(&self, p: C64) -> f64 {
        self.segments().iter().map(|&(a, b)| segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// Check that every segment keeps at least `clearance` from each point.
    /// Points that coincide with the path's own start or end are exempt, so
    /// that integrals may begin or end at a turning point.
    pub fn check_clearance(&self, points: &[C64]) -> Result<()> {
        let scale = self.waypoints.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for &p in points {
            let exempt = (p - self.start()).norm() <= 1e-12 * scale || (p - self.end()).norm() <= 1e-12 * scale;
            if exempt {
                continue;
            }
            let d = self.min_distance(p);
            if d < self.clearance || d <= 1e-12 * scale {
                return Err(Error::ClearanceViolation { point: p, distance: d, clearance: self.clearance });
            }
        }
        Ok(())
    }

    /// Winding number of a closed path (or an open path closed by a chord)
    /// about `p`.
    pub fn winding_number(&self, p: C64) -> i64 {
        let v = self.vertices();
        let mut total = 0.0;
        let mut pts = v.clone();
        if !self.closed {
            pts.push(v[0]);
        }
        for w in pts.windows(2) {
            total += ((w[1] - p) / (w[0] - p)).arg();
        }
        (total / std::f64::consts::TAU).round() as i64
    }
}

/// Waypoints along a circular arc from angle `t0` to `t1` (both included),
/// using `n` chords.
pub fn arc_points(centre: C64, r: f64, t0: f64, t1: f64, n: usize) -> Vec<C64> {
    let n = n.max(1);
    (0..=n).map(|k| centre + C64::from_polar(r, t0 + (t1 - t0) * k as f64 / n as f64)).collect()
}

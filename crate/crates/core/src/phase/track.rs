//! Small-step analytic continuation of `q = √R` (and of `√q`, needed for the
//! `q^{-1/2}` prefactor) along piecewise-linear paths.

use crate::cplane::{PathSpec, RationalIntegrand};
use crate::{Error, Result, C64};

/// Fraction of the distance to the nearest singular point allowed per step.
const STEP_FRACTION: f64 = 0.25;
/// Relative distance at which an endpoint is treated as sitting on a
/// singular point.
const ENDPOINT_SNAP: f64 = 1e-13;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub t: f64,
    pub z: C64,
    pub q: C64,
    pub sq: C64,
}

#[derive(Debug, Clone)]
pub(crate) struct SegTrack {
    pub a: C64,
    pub b: C64,
    /// sorted by ascending `t`, first at `t = 0`, last at `t = 1`
    pub nodes: Vec<Node>,
}

/// Continuous branch of `q` (and `√q`) along a path.
#[derive(Debug, Clone)]
pub struct Track {
    path: PathSpec,
    pub(crate) segs: Vec<SegTrack>,
    integrand: RationalIntegrand,
}

pub(crate) fn nearest_sign(r: C64, reference: C64) -> C64 {
    if (r - reference).norm_sqr() <= (r + reference).norm_sqr() {
        r
    } else {
        -r
    }
}

fn branch_values(integrand: &RationalIntegrand, z: C64, q_ref: C64, sq_ref: C64) -> Result<(C64, C64)> {
    let r = integrand.eval(z)?;
    let q = nearest_sign(r.sqrt(), q_ref);
    let sq = nearest_sign(q.sqrt(), sq_ref);
    Ok((q, sq))
}

impl Track {
    /// Track along `path`, starting from waypoint `anchor_index` where
    /// `q = q0` and `√q = sq0`.
    pub(crate) fn build(
        integrand: &RationalIntegrand,
        path: &PathSpec,
        anchor_index: usize,
        q0: C64,
        sq0: C64,
    ) -> Result<Self> {
        let segments = path.segments();
        let sing = integrand.singular_points();
        let scale = integrand.scale().max(path.waypoints().iter().map(|z| z.norm()).fold(0.0, f64::max));
        for (k, &(a, b)) in segments.iter().enumerate() {
            let first = k == 0;
            let last = k + 1 == segments.len();
            for &p in &sing {
                let d = crate::cplane::path::segment_distance(p, a, b);
                let at_start = first && (p - a).norm() <= ENDPOINT_SNAP * scale;
                let at_end = last && (p - b).norm() <= ENDPOINT_SNAP * scale;
                if at_start || at_end {
                    continue;
                }
                if d < path.clearance().max(1e-10 * scale) {
                    return Err(Error::BranchAmbiguity(p));
                }
            }
        }
        let mut segs: Vec<SegTrack> = segments.iter().map(|&(a, b)| SegTrack { a, b, nodes: Vec::new() }).collect();

        // forward from the anchor
        let (mut q, mut sq) = (q0, sq0);
        for seg in segs.iter_mut().skip(anchor_index) {
            seg.nodes = walk(integrand, &sing, scale, seg.a, seg.b, q, sq)?;
            let last = seg.nodes.last().unwrap();
            q = last.q;
            sq = last.sq;
        }
        // backward from the anchor
        let (mut q, mut sq) = (q0, sq0);
        for seg in segs.iter_mut().take(anchor_index).rev() {
            let mut nodes = walk(integrand, &sing, scale, seg.b, seg.a, q, sq)?;
            for n in nodes.iter_mut() {
                n.t = 1.0 - n.t;
            }
            nodes.reverse();
            q = nodes[0].q;
            sq = nodes[0].sq;
            seg.nodes = nodes;
        }
        Ok(Self { path: path.clone(), segs, integrand: integrand.clone() })
    }

    pub fn path(&self) -> &PathSpec {
        &self.path
    }

    pub fn integrand(&self) -> &RationalIntegrand {
        &self.integrand
    }

    pub fn start_q(&self) -> C64 {
        self.segs[0].nodes[0].q
    }

    pub fn start_sqrt_q(&self) -> C64 {
        self.segs[0].nodes[0].sq
    }

    pub fn end_q(&self) -> C64 {
        self.segs.last().unwrap().nodes.last().unwrap().q
    }

    pub fn end_sqrt_q(&self) -> C64 {
        self.segs.last().unwrap().nodes.last().unwrap().sq
    }

    /// `(q, √q)` at waypoint `i` (for closed paths `i == len` is the end).
    pub fn at_vertex(&self, i: usize) -> (C64, C64) {
        if i < self.segs.len() {
            let n = self.segs[i].nodes[0];
            (n.q, n.sq)
        } else {
            let n = *self.segs.last().unwrap().nodes.last().unwrap();
            (n.q, n.sq)
        }
    }

    fn reference(&self, seg: usize, t: f64) -> &Node {
        let nodes = &self.segs[seg].nodes;
        let i = nodes.partition_point(|n| n.t <= t);
        if i == 0 {
            &nodes[0]
        } else if i >= nodes.len() {
            nodes.last().unwrap()
        } else {
            let (lo, hi) = (&nodes[i - 1], &nodes[i]);
            let (near, far) = if t - lo.t <= hi.t - t { (lo, hi) } else { (hi, lo) };
            // a node sitting on a zero of R carries no sign information
            if near.q.norm() < 1e-3 * far.q.norm() {
                far
            } else {
                near
            }
        }
    }

    /// `q` at parameter `t` of segment `seg` (point `z`).
    pub fn q(&self, seg: usize, t: f64, z: C64) -> Result<C64> {
        let r = self.reference(seg, t);
        Ok(nearest_sign(self.integrand.eval(z)?.sqrt(), r.q))
    }

    /// `(q, √q)` at parameter `t` of segment `seg`.
    pub fn q_sq(&self, seg: usize, t: f64, z: C64) -> Result<(C64, C64)> {
        let r = self.reference(seg, t);
        branch_values(&self.integrand, z, r.q, r.sq)
    }

    /// All continuation nodes in path order as `(z, q)`.
    pub fn nodes(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        self.segs.iter().enumerate().flat_map(|(k, s)| s.nodes.iter().skip(usize::from(k > 0)).map(|n| (n.z, n.q)))
    }
}

/// Walk from `a` (where `q`, `√q` are known) to `b`; returned node `t` is
/// measured from `a`.
fn walk(
    integrand: &RationalIntegrand,
    sing: &[C64],
    scale: f64,
    a: C64,
    b: C64,
    q0: C64,
    sq0: C64,
) -> Result<Vec<Node>> {
    let len = (b - a).norm();
    let mut nodes = vec![Node { t: 0.0, z: a, q: q0, sq: sq0 }];
    let (mut q, mut sq) = (q0, sq0);
    let mut t = 0.0;
    let end_singular = sing.iter().any(|&p| (p - b).norm() <= ENDPOINT_SNAP * scale);
    let mut guard = 0usize;
    while t < 1.0 {
        guard += 1;
        if guard > 2_000_000 {
            return Err(Error::BranchAmbiguity(a + (b - a) * t));
        }
        let z = a + (b - a) * t;
        let d = sing.iter().map(|&p| (z - p).norm()).fold(f64::INFINITY, f64::min);
        let remaining = (1.0 - t) * len;
        if end_singular && remaining <= ENDPOINT_SNAP * scale * 10.0 {
            // final jump onto a zero of R; q there is (numerically) zero
            let r = integrand.eval(b)?;
            if !r.re.is_finite() || !r.im.is_finite() {
                return Err(Error::SingularPoint(b));
            }
            let qn = nearest_sign(r.sqrt(), q);
            let sqn = nearest_sign(qn.sqrt(), sq);
            nodes.push(Node { t: 1.0, z: b, q: qn, sq: sqn });
            return Ok(nodes);
        }
        let step = (STEP_FRACTION * d).min(remaining);
        if step <= 1e-15 * scale {
            return Err(Error::BranchAmbiguity(z));
        }
        let tn = if step >= remaining { 1.0 } else { t + step / len };
        let zn = if tn == 1.0 { b } else { a + (b - a) * tn };
        let (qn, sqn) = branch_values(integrand, zn, q, sq)?;
        q = qn;
        sq = sqn;
        t = tn;
        nodes.push(Node { t, z: zn, q, sq });
    }
    Ok(nodes)
}

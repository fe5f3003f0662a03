//! Globally adaptive Gauss–Kronrod (7/15) quadrature along piecewise-linear
//! complex paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::path::PathSpec;
use crate::{Error, Result, C64};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Maximum number of subintervals kept by the adaptive scheme.
pub const MAX_INTERVALS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    #[serde(with = "crate::serde_c64")]
    pub value: C64,
    pub err_estimate: f64,
}

struct Piece {
    seg: usize,
    t0: f64,
    t1: f64,
    value: C64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk15<F>(f: &mut F, seg: usize, a: C64, b: C64, t0: f64, t1: f64) -> Result<(C64, f64)>
where
    F: FnMut(usize, f64, C64) -> Result<C64>,
{
    let c = 0.5 * (t0 + t1);
    let h = 0.5 * (t1 - t0);
    let dz = (b - a) * h;
    let mut eval = |t: f64| -> Result<C64> {
        let z = a + (b - a) * t;
        let v = f(seg, t, z)?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite(z));
        }
        Ok(v)
    };
    let fc = eval(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = eval(c - x)? + eval(c + x)?;
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let value = kron * dz;
    let err = ((kron - gauss) * dz).norm();
    Ok((value, err))
}

/// Integrate `f(segment, t, z) dz` along `segments`, where `z = a + (b-a) t`
/// on segment `(a, b)` and `t ∈ [0, 1]`. Stops when the summed error estimate
/// is below `max(abs_tol, rel_tol·|value|)`.
pub fn integrate_segments<F>(segments: &[(C64, C64)], mut f: F, abs_tol: f64, rel_tol: f64) -> Result<Quadrature>
where
    F: FnMut(usize, f64, C64) -> Result<C64>,
{
    if !is_positive(abs_tol) && !is_positive(rel_tol) {
        return Err(Error::InvalidInput("quadrature tolerance must be positive".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut frozen_value = C64::new(0.0, 0.0);
    let mut frozen_err = 0.0;
    for (i, &(a, b)) in segments.iter().enumerate() {
        if a == b {
            continue;
        }
        let (value, err) = gk15(&mut f, i, a, b, 0.0, 1.0)?;
        heap.push(Piece { seg: i, t0: 0.0, t1: 1.0, value, err });
    }
    let mut iter = 0usize;
    let mut live_value = C64::new(0.0, 0.0);
    let mut live_err = 0.0;
    loop {
        if iter.is_multiple_of(64) {
            // periodic exact resummation keeps the running totals honest
            live_value = heap.iter().map(|p| p.value).sum();
            live_err = heap.iter().map(|p| p.err).sum();
        }
        iter += 1;
        let value = frozen_value + live_value;
        let err = frozen_err + live_err.max(0.0);
        let target = abs_tol.max(rel_tol * value.norm());
        if err <= target {
            let value = frozen_value + heap.iter().map(|p| p.value).sum::<C64>();
            return Ok(Quadrature { value, err_estimate: err });
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::MaxRefinement { tol: target, estimate: err });
        };
        if heap.len() + 2 > MAX_INTERVALS {
            return Err(Error::MaxRefinement { tol: target, estimate: err });
        }
        live_value -= worst.value;
        live_err -= worst.err;
        let mid = 0.5 * (worst.t0 + worst.t1);
        if mid <= worst.t0 || mid >= worst.t1 || (worst.t1 - worst.t0) < 1e-15 {
            // cannot split further in double precision; accept this piece as is
            frozen_value += worst.value;
            frozen_err += worst.err;
            if frozen_err > target {
                return Err(Error::MaxRefinement { tol: target, estimate: err });
            }
            continue;
        }
        let (a, b) = segments[worst.seg];
        let (v1, e1) = gk15(&mut f, worst.seg, a, b, worst.t0, mid)?;
        let (v2, e2) = gk15(&mut f, worst.seg, a, b, mid, worst.t1)?;
        live_value += v1 + v2;
        live_err += e1 + e2;
        heap.push(Piece { seg: worst.seg, t0: worst.t0, t1: mid, value: v1, err: e1 });
        heap.push(Piece { seg: worst.seg, t0: mid, t1: worst.t1, value: v2, err: e2 });
    }
}

/// `∫ f(z) dz` along `path` to absolute tolerance `tol`.
pub fn contour_integrate<F>(mut f: F, path: &PathSpec, tol: f64) -> Result<Quadrature>
where
    F: FnMut(C64) -> C64,
{
    if !is_positive(tol) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    integrate_segments(&path.segments(), |_, _, z| Ok(f(z)), tol, 0.0)
}

/// False for NaN as well as for non-positive values.
pub(crate) fn is_positive(x: f64) -> bool {
    x > 0.0
}

//! Dormand–Prince 5(4) in double precision, used as a cross-check of the
//! series integrator.

use super::taylor::State;
use crate::cplane::RationalIntegrand;
use crate::{Error, Result, C64};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

type Vec4 = [C64; 4];

fn rhs(integrand: &RationalIntegrand, a: C64, dz: C64, t: f64, y: &Vec4) -> Result<Vec4> {
    let z = a + dz * t;
    let r = integrand.eval(z).map_err(|_| Error::StiffnessFailure(z))?;
    Ok([dz * y[1], -dz * r * y[0], dz * y[3], -dz * r * y[2]])
}

fn axpy(y: &Vec4, k: &[Vec4], w: &[f64], h: f64) -> Vec4 {
    let mut out = *y;
    for (kj, &wj) in k.iter().zip(w) {
        if wj != 0.0 {
            for i in 0..4 {
                out[i] += kj[i] * (h * wj);
            }
        }
    }
    out
}

/// Integrate along straight segments with relative/absolute tolerance `tol`.
pub(crate) fn propagate(
    integrand: &RationalIntegrand,
    segments: &[(C64, C64)],
    state: State<C64>,
    tol: f64,
) -> Result<State<C64>> {
    let mut y: Vec4 = [state[0][0], state[1][0], state[0][1], state[1][1]];
    let tol = 0.1 * tol;
    for &(a, b) in segments {
        let dz = b - a;
        let kappa = integrand.eval(a).map(|r| r.norm().sqrt()).unwrap_or(1.0) + 1.0;
        let mut h = (0.1 / (kappa * dz.norm())).min(1.0);
        let mut t = 0.0;
        let mut k1 = rhs(integrand, a, dz, t, &y)?;
        while t < 1.0 {
            if t + h > 1.0 {
                h = 1.0 - t;
            }
            if h < 1e-14 {
                return Err(Error::StiffnessFailure(a + dz * t));
            }
            let mut k: Vec<Vec4> = vec![k1];
            for s in 1..7 {
                let ys = axpy(&y, &k, &A[s][..s], h);
                k.push(rhs(integrand, a, dz, t + C[s] * h, &ys)?);
            }
            let y_new = axpy(&y, &k[..6], &A[6][..6], h);
            let err = axpy(&[C64::new(0.0, 0.0); 4], &k, &E, h);
            let scale = y.iter().chain(&y_new).map(|v| v.norm()).fold(0.0, f64::max);
            let en = err.iter().map(|e| e.norm()).fold(0.0, f64::max) / (tol * (1.0 + scale));
            if !en.is_finite() {
                return Err(Error::StiffnessFailure(a + dz * t));
            }
            if en <= 1.0 {
                t += h;
                y = y_new;
                k1 = k[6];
            }
            let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        }
    }
    Ok([[y[0], y[2]], [y[1], y[3]]])
}

use nalgebra::DMatrix;

use crate::{Error, Result, C64};

/// Dense complex polynomial, coefficients in ascending degree.
///
/// Trailing (leading-degree) zeros are trimmed on construction so that
/// `coeffs.last()` is always nonzero unless the polynomial is identically zero,
/// in which case `coeffs` is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
}

/// A root together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub z: C64,
    pub order: u32,
}

impl Poly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first two derivatives at `z` in one Horner sweep.
    pub fn eval_d2(&self, z: C64) -> [C64; 3] {
        let zero = C64::new(0.0, 0.0);
        let (mut p, mut d1, mut d2) = (zero, zero, zero);
        for &c in self.coeffs.iter().rev() {
            d2 = d2 * z + d1;
            d1 = d1 * z + p;
            p = p * z + c;
        }
        [p, d1, d2 * 2.0]
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect())
    }

    /// Roots with multiplicities. Eigenvalues of the companion matrix are
    /// refined by Newton's method and then clustered; a cluster of `m`
    /// eigenvalues is reported as one root of order `m`, refined on the
    /// `(m-1)`-th derivative.
    pub fn roots(&self) -> Vec<Root> {
        let n = self.degree();
        if self.is_zero() || n == 0 {
            return Vec::new();
        }
        let lead = self.leading();
        let monic: Vec<C64> = self.coeffs.iter().map(|c| c / lead).collect();

        // factor out exact zeros at the origin first
        let mut zeros_at_origin = 0usize;
        while monic[zeros_at_origin] == C64::new(0.0, 0.0) {
            zeros_at_origin += 1;
        }
        let reduced = &monic[zeros_at_origin..];
        let m = reduced.len() - 1;

        let mut raw: Vec<C64> = Vec::with_capacity(n);
        if m == 1 {
            raw.push(-reduced[0]);
        } else if m > 1 {
            let mut comp = DMatrix::<C64>::zeros(m, m);
            for i in 1..m {
                comp[(i, i - 1)] = C64::new(1.0, 0.0);
            }
            for i in 0..m {
                comp[(i, m - 1)] = -reduced[i];
            }
            let Some(ev) = comp.schur().eigenvalues() else {
                return Vec::new();
            };
            raw.extend(ev.iter().copied());
        }
        for r in raw.iter_mut() {
            *r = newton(self, *r, 3);
        }

        let size = raw.iter().map(|r| r.norm()).fold(1.0, f64::max);
        let cluster_tol = 1e-5 * size;
        let mut used = vec![false; raw.len()];
        let mut out: Vec<Root> = Vec::new();
        if zeros_at_origin > 0 {
            out.push(Root { z: C64::new(0.0, 0.0), order: zeros_at_origin as u32 });
        }
        for i in 0..raw.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let mut members = vec![raw[i]];
            for j in i + 1..raw.len() {
                if !used[j] && (raw[j] - raw[i]).norm() < cluster_tol {
                    used[j] = true;
                    members.push(raw[j]);
                }
            }
            let order = members.len() as u32;
            let centre = members.iter().sum::<C64>() / order as f64;
            let z = if order == 1 {
                centre
            } else {
                let mut d = self.clone();
                for _ in 1..order {
                    d = d.derivative();
                }
                newton(&d, centre, 4)
            };
            out.push(Root { z, order });
        }
        out.sort_by(|a, b| a.z.re.partial_cmp(&b.z.re).unwrap().then(a.z.im.partial_cmp(&b.z.im).unwrap()));
        out
    }
}

fn newton(p: &Poly, mut z: C64, iters: usize) -> C64 {
    for _ in 0..iters {
        let [v, d, _] = p.eval_d2(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = v / d;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        let next = z - step;
        if p.eval(next).norm() > v.norm() {
            break;
        }
        z = next;
    }
    z
}

/// Cancel common roots of `num` and `den` closer than `tol` (relative to the
/// root magnitude, floored at 1).
pub fn cancel_common(zeros: &mut Vec<Root>, poles: &mut Vec<Root>, tol: f64) {
    for z in zeros.iter_mut() {
        for p in poles.iter_mut() {
            if z.order == 0 || p.order == 0 {
                continue;
            }
            let scale = z.z.norm().max(1.0);
            if (z.z - p.z).norm() < tol * scale {
                let k = z.order.min(p.order);
                z.order -= k;
                p.order -= k;
            }
        }
    }
    zeros.retain(|r| r.order > 0);
    poles.retain(|r| r.order > 0);
}

/// Polynomial shifted to centre `c`: coefficients of `p(c + t)` in powers of `t`.
pub fn taylor_shift(coeffs: &[C64], c: C64) -> Vec<C64> {
    let mut a = coeffs.to_vec();
    let n = a.len();
    for k in 0..n {
        for j in (k..n - 1).rev() {
            let t = a[j + 1] * c;
            a[j] += t;
        }
    }
    a
}

pub(crate) fn require_nonzero(p: &Poly, what: &str) -> Result<()> {
    if p.is_zero() {
        Err(Error::DegenerateInput(format!("{what} polynomial is identically zero")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    #[test]
    fn quartic_roots() {
        let p = Poly::new(vec![c64(-16.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        let r = p.roots();
        assert_eq!(r.len(), 4);
        for want in [c64(2.0, 0.0), c64(-2.0, 0.0), c64(0.0, 2.0), c64(0.0, -2.0)] {
            assert!(r.iter().any(|x| (x.z - want).norm() < 1e-12 && x.order == 1), "{want}");
        }
    }

    #[test]
    fn double_root() {
        // (z - 1)^2 (z + 2)
        let p = Poly::new(vec![c64(2.0, 0.0), c64(-3.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        let r = p.roots();
        assert_eq!(r.len(), 2);
        let d = r.iter().find(|x| x.order == 2).unwrap();
        assert!((d.z - c64(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn shift_matches_eval() {
        let p = Poly::new(vec![c64(1.0, 2.0), c64(-0.5, 0.0), c64(0.0, 3.0), c64(2.0, -1.0)]);
        let c = c64(0.3, -1.2);
        let s = Poly::new(taylor_shift(p.coeffs(), c));
        let t = c64(0.7, 0.1);
        assert!((s.eval(t) - p.eval(c + t)).norm() < 1e-12);
    }

    #[test]
    fn eval_d2_matches_derivatives() {
        let p = Poly::new(vec![c64(1.0, 0.0), c64(0.0, 1.0), c64(2.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.5)]);
        let z = c64(0.4, 0.9);
        let [v, d1, d2] = p.eval_d2(z);
        assert!((v - p.eval(z)).norm() < 1e-14);
        assert!((d1 - p.derivative().eval(z)).norm() < 1e-13);
        assert!((d2 - p.derivative().derivative().eval(z)).norm() < 1e-13);
    }
}

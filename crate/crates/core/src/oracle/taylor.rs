//! Power-series stepping for `D(z) y'' + N(z) y = 0`, generic over the
//! working precision.

use super::field::Field;
use crate::C64;

/// Two solutions side by side: `state[0]` holds `y`, `state[1]` holds `y'`,
/// one column per solution.
pub(crate) type State<F> = [[F; 2]; 2];

pub(crate) struct SeriesStepper<F: Field> {
    num: Vec<F>,
    den: Vec<F>,
    bits: usize,
    eps: f64,
    max_terms: usize,
    window: usize,
}

fn shifted<F: Field>(coeffs: &[F], c: &F) -> Vec<F> {
    let mut a = coeffs.to_vec();
    let n = a.len();
    for k in 0..n {
        for j in (k..n.saturating_sub(1)).rev() {
            let t = a[j + 1].mul(c);
            a[j] = a[j].add(&t);
        }
    }
    a
}

impl<F: Field> SeriesStepper<F> {
    pub fn new(num: &[C64], den: &[C64], bits: usize) -> Self {
        let eps = if bits <= 53 { 0.5 * f64::EPSILON } else { (-(bits as f64)).exp2() };
        Self {
            num: num.iter().map(|&c| F::from_c64(c, bits)).collect(),
            den: den.iter().map(|&c| F::from_c64(c, bits)).collect(),
            bits,
            eps,
            max_terms: 80 + bits,
            // terms may vanish in runs as long as the recurrence depth
            window: num.len().max(den.len()) + 2,
        }
    }

    pub fn lift(&self, z: C64) -> F {
        F::from_c64(z, self.bits)
    }

    /// Advance `state` from `from` to `to`; `None` if the series does not
    /// converge within the term budget.
    pub fn step(&self, from: C64, to: C64, state: &State<F>) -> Option<State<F>> {
        let bits = self.bits;
        let c = self.lift(from);
        let h = self.lift(to).sub(&c);
        let n = shifted(&self.num, &c);
        let d = shifted(&self.den, &c);
        let mut hp = self.lift(C64::new(1.0, 0.0));
        let mut nt = Vec::with_capacity(n.len());
        let mut dt = Vec::with_capacity(d.len());
        let h2 = h.mul(&h);
        for j in 0..n.len().max(d.len()) {
            if j < d.len() {
                dt.push(d[j].mul(&hp));
            }
            if j < n.len() {
                nt.push(n[j].mul(&hp).mul(&h2));
            }
            hp = hp.mul(&h);
        }
        if dt[0].magnitude() == 0.0 {
            return None;
        }

        let mut out = state.clone();
        for col in 0..2 {
            let y0 = state[0][col].clone();
            let y1 = state[1][col].mul(&h);
            let mut b: Vec<F> = vec![y0.clone(), y1.clone()];
            let mut sum = y0.add(&y1);
            let mut dsum = y1.clone();
            let mut biggest = y0.magnitude().max(y1.magnitude());
            let mut quiet = 0usize;
            let mut converged = false;
            for k in 0..self.max_terms {
                // coefficient of s^k in D y_ss + h² N y
                let mut acc = self.lift(C64::new(0.0, 0.0));
                for (j, dj) in dt.iter().enumerate().skip(1) {
                    if j > k {
                        break;
                    }
                    let m = (k - j + 2) as f64 * (k - j + 1) as f64;
                    acc = acc.add(&dj.mul(&b[k - j + 2]).mul_real(m, bits));
                }
                for (j, nj) in nt.iter().enumerate() {
                    if j > k {
                        break;
                    }
                    acc = acc.add(&nj.mul(&b[k - j]));
                }
                let m = (k + 2) as f64 * (k + 1) as f64;
                let next = self.lift(C64::new(0.0, 0.0)).sub(&acc).div(&dt[0].mul_real(m, bits));
                let mag = next.magnitude();
                if !mag.is_finite() {
                    return None;
                }
                sum = sum.add(&next);
                dsum = dsum.add(&next.mul_real((k + 2) as f64, bits));
                b.push(next);
                biggest = biggest.max(mag);
                if mag * (k + 3) as f64 <= self.eps * biggest {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
                if quiet >= self.window && k + 2 >= self.window {
                    converged = true;
                    break;
                }
            }
            if !converged || biggest > 1e12 * (y0.magnitude() + y1.magnitude()).max(f64::MIN_POSITIVE) {
                return None;
            }
            out[0][col] = sum;
            out[1][col] = dsum.div(&h);
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::field::MpComplex;

    fn one<F: Field>(s: &SeriesStepper<F>) -> State<F> {
        let o = s.lift(C64::new(1.0, 0.0));
        let z = s.lift(C64::new(0.0, 0.0));
        [[o.clone(), z.clone()], [z, o]]
    }

    #[test]
    fn plane_waves() {
        // y'' + y = 0: cos and sin
        let s = SeriesStepper::<C64>::new(&[C64::new(1.0, 0.0)], &[C64::new(1.0, 0.0)], 53);
        let st = s.step(C64::new(0.0, 0.0), C64::new(2.0, 0.0), &one(&s)).unwrap();
        assert!((st[0][0] - C64::new(2f64.cos(), 0.0)).norm() < 1e-14);
        assert!((st[0][1] - C64::new(2f64.sin(), 0.0)).norm() < 1e-14);
        assert!((st[1][0] + C64::new(2f64.sin(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn airy_wronskian_in_mp() {
        // y'' - z y = 0 across a complex step, Wronskian stays 1
        let s = SeriesStepper::<MpComplex>::new(&[C64::new(0.0, 0.0), C64::new(-1.0, 0.0)], &[C64::new(1.0, 0.0)], 160);
        let st = s.step(C64::new(0.3, 0.1), C64::new(1.1, 0.9), &one(&s)).unwrap();
        let w = st[0][0].mul(&st[1][1]).sub(&st[0][1].mul(&st[1][0]));
        let dev = w.sub(&s.lift(C64::new(1.0, 0.0)));
        assert!(dev.to_c64().norm() < 1e-40);
    }
}

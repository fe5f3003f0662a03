//! Complex arithmetic in the working precision of the Taylor integrator.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

use crate::C64;

type Real = FBig<HalfEven, 2>;

/// Minimal complex field used by the series integrator.
pub(crate) trait Field: Clone {
    /// Exact conversion of a double into the working precision `bits`.
    fn from_c64(z: C64, bits: usize) -> Self;
    fn to_c64(&self) -> C64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn mul_real(&self, k: f64, bits: usize) -> Self;

    /// Rough modulus for convergence tests.
    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }
}

impl Field for C64 {
    fn from_c64(z: C64, _: usize) -> Self {
        z
    }
    fn to_c64(&self) -> C64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn mul_real(&self, k: f64, _: usize) -> Self {
        self * k
    }
}

/// Binary floating-point complex number of fixed precision.
#[derive(Clone, Debug)]
pub(crate) struct MpComplex {
    re: Real,
    im: Real,
}

fn real(x: f64, bits: usize) -> Real {
    // every finite double is exactly representable
    Real::try_from(x).expect("finite double").with_precision(bits).value()
}

impl Field for MpComplex {
    fn from_c64(z: C64, bits: usize) -> Self {
        Self { re: real(z.re, bits), im: real(z.im, bits) }
    }
    fn to_c64(&self) -> C64 {
        C64::new(self.re.to_f64().value(), self.im.to_f64().value())
    }
    fn add(&self, o: &Self) -> Self {
        Self { re: &self.re + &o.re, im: &self.im + &o.im }
    }
    fn sub(&self, o: &Self) -> Self {
        Self { re: &self.re - &o.re, im: &self.im - &o.im }
    }
    fn mul(&self, o: &Self) -> Self {
        Self { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }
    fn div(&self, o: &Self) -> Self {
        let den = &o.re * &o.re + &o.im * &o.im;
        let re = (&self.re * &o.re + &self.im * &o.im) / &den;
        let im = (&self.im * &o.re - &self.re * &o.im) / &den;
        Self { re, im }
    }
    fn mul_real(&self, k: f64, bits: usize) -> Self {
        let k = real(k, bits);
        Self { re: &self.re * &k, im: &self.im * &k }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mp_keeps_digits_beyond_double() {
        let bits = 200;
        let third = MpComplex::from_c64(C64::new(1.0, 0.0), bits).div(&MpComplex::from_c64(C64::new(3.0, 0.0), bits));
        let tiny = MpComplex::from_c64(C64::new(1e-30, 0.0), bits);
        // (1/3 + 1e-30) - 1/3 survives only with extended precision
        let back = third.add(&tiny).sub(&third);
        assert!((back.to_c64().re - 1e-30).abs() < 1e-40);
        let z = MpComplex::from_c64(C64::new(1.0, 2.0), bits);
        let w = MpComplex::from_c64(C64::new(-0.5, 0.25), bits);
        let p = z.mul(&w).div(&w);
        assert!((p.to_c64() - C64::new(1.0, 2.0)).norm() < 1e-15);
    }
}

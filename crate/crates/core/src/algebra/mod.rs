//! Connection-matrix calculus: generators, symbolic operator words and
//! their canonical reduction.

mod matrix;
mod word;

pub use matrix::{c_power, lambda, p_sigma, permutation, s_matrix, st_matrix, w_diag, w_matrix, ConnectionMatrix};
pub use word::{
    commute_sw, evaluate_word, make_generator, reduce_to_canonical, Bindings, CanonicalSide, Factor, GeneratorKind,
    OperatorWord, Phase, Scalar,
};

use crate::{Error, Result, C64};

/// `W[shift] · F · W[-shift]` (basepoint change).
pub fn conjugate_basepoint(f: &ConnectionMatrix, omega_shift: C64) -> Result<ConnectionMatrix> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
    }
    Ok(&(&w_matrix(omega_shift) * f) * &w_matrix(-omega_shift))
}

/// n-dimensional basepoint change with one phase per component.
pub fn conjugate_basepoint_diag(f: &ConnectionMatrix, shifts: &[C64]) -> Result<ConnectionMatrix> {
    if f.dim() != shifts.len() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: shifts.len() });
    }
    let neg: Vec<C64> = shifts.iter().map(|s| -s).collect();
    Ok(&(&w_diag(shifts) * f) * &w_diag(&neg))
}

/// `P_σ F P_σ` (sign change of `q`).
pub fn conjugate_sign_change(f: &ConnectionMatrix) -> Result<ConnectionMatrix> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
    }
    let p = p_sigma();
    Ok(&(&p * f) * &p)
}

/// `P⁻¹ F P` for a general permutation.
pub fn conjugate_permutation(f: &ConnectionMatrix, perm: &[usize]) -> Result<ConnectionMatrix> {
    let p = permutation(perm)?;
    if p.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: p.dim() });
    }
    Ok(&(&p.inverse()? * f) * &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    #[test]
    fn generator_examples() {
        let s = s_matrix(c64(2.0, 1.0));
        assert_eq!(s.rows(), vec![vec![c64(1.0, 0.0), c64(0.0, 0.0)], vec![c64(2.0, 1.0), c64(1.0, 0.0)]]);
        assert_eq!(w_matrix(c64(0.0, 0.0)), ConnectionMatrix::identity(2));
        let c2 = &c_power(1) * &c_power(1);
        assert!(c2.max_abs_diff(&ConnectionMatrix::identity(2).scale(c64(-1.0, 0.0))) == 0.0);
        assert_eq!(c_power(2), c2);
        assert!((c_power(1).det() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn conjugations() {
        let s = c64(0.3, -1.1);
        let w = c64(0.7, 0.2);
        let f = s_matrix(s);
        let g = conjugate_basepoint(&f, w).unwrap();
        let i = c64(0.0, 1.0);
        assert!(g.max_abs_diff(&s_matrix(s * (-2.0 * i * w).exp())) < 1e-14);
        assert!((g.det() - f.det()).norm() < 1e-14);
        assert!(
            conjugate_basepoint(&ConnectionMatrix::identity(2), w)
                .unwrap()
                .max_abs_diff(&ConnectionMatrix::identity(2))
                < 1e-15
        );

        assert_eq!(conjugate_sign_change(&f).unwrap(), st_matrix(s));
        assert!(conjugate_sign_change(&w_matrix(w)).unwrap().max_abs_diff(&w_matrix(-w)) < 1e-15);
        assert_eq!(conjugate_sign_change(&conjugate_sign_change(&f).unwrap()).unwrap(), f);
    }

    #[test]
    fn n_dimensional() {
        let f = lambda(&[c64(1.0, 0.0), c64(2.0, 0.0), c64(0.0, 3.0)]);
        let g = conjugate_permutation(&f, &[1, 2, 0]).unwrap();
        assert!((g.det() - f.det()).norm() < 1e-12);
        let h = conjugate_basepoint_diag(&f, &[c64(0.1, 0.0), c64(0.2, 0.0), c64(0.3, 0.0)]).unwrap();
        assert!(h.max_abs_diff(&f) < 1e-15);
        assert!(permutation(&[0, 0]).is_err());
    }
}

use std::ops::Mul;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result, C64};

/// Dense `n×n` complex connection matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrix {
    m: DMatrix<C64>,
}

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

impl ConnectionMatrix {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: r.len() });
            }
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn new2(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self { m: DMatrix::from_row_slice(2, 2, &[a, b, c, d]) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.m[(i, j)]).collect()).collect()
    }

    pub fn det(&self) -> C64 {
        if self.dim() == 2 {
            self.m[(0, 0)] * self.m[(1, 1)] - self.m[(0, 1)] * self.m[(1, 0)]
        } else {
            self.m.clone().determinant()
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        self.m
            .clone()
            .try_inverse()
            .map(|m| Self { m })
            .ok_or_else(|| Error::DegenerateInput("singular connection matrix".into()))
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self { m: self.m.map(|z| z.conj()) }
    }

    pub fn scale(&self, k: C64) -> Self {
        Self { m: &self.m * k }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.m.iter().zip(other.m.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, psi: &[C64]) -> Result<Vec<C64>> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: psi.len() });
        }
        Ok((0..self.dim()).map(|i| (0..self.dim()).map(|j| self.m[(i, j)] * psi[j]).sum()).collect())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(Self { m: &self.m * &other.m })
    }
}

impl Mul for &ConnectionMatrix {
    type Output = ConnectionMatrix;
    fn mul(self, rhs: Self) -> ConnectionMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in product");
        ConnectionMatrix { m: &self.m * &rhs.m }
    }
}

impl Mul for ConnectionMatrix {
    type Output = ConnectionMatrix;
    fn mul(self, rhs: Self) -> ConnectionMatrix {
        &self * &rhs
    }
}

impl Serialize for ConnectionMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::serde_c64::matrix::serialize(&self.rows(), s)
    }
}

impl<'de> Deserialize<'de> for ConnectionMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = crate::serde_c64::matrix::deserialize(d)?;
        Self::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// `S[s] = [[1, 0], [s, 1]]`.
pub fn s_matrix(s: C64) -> ConnectionMatrix {
    ConnectionMatrix::new2(ONE, ZERO, s, ONE)
}

/// `Sᵀ[s] = [[1, s], [0, 1]]`.
pub fn st_matrix(s: C64) -> ConnectionMatrix {
    ConnectionMatrix::new2(ONE, s, ZERO, ONE)
}

/// `W[ω] = diag(e^{iω}, e^{-iω})`.
pub fn w_matrix(omega: C64) -> ConnectionMatrix {
    ConnectionMatrix::new2((I * omega).exp(), ZERO, ZERO, (-I * omega).exp())
}

/// `diag(e^{iω_1}, …, e^{iω_n})`.
pub fn w_diag(omegas: &[C64]) -> ConnectionMatrix {
    let n = omegas.len();
    ConnectionMatrix { m: DMatrix::from_fn(n, n, |i, j| if i == j { (I * omegas[i]).exp() } else { ZERO }) }
}

/// `C^k` with `C = [[0, -i], [-i, 0]]` (so `C² = -I`, `C⁴ = I`).
pub fn c_power(k: i32) -> ConnectionMatrix {
    let c = ConnectionMatrix::new2(ZERO, -I, -I, ZERO);
    match k.rem_euclid(4) {
        0 => ConnectionMatrix::identity(2),
        1 => c,
        2 => ConnectionMatrix::identity(2).scale(-ONE),
        _ => c.scale(-ONE),
    }
}

/// Sign-change permutation `P_σ = [[0, 1], [1, 0]]`.
pub fn p_sigma() -> ConnectionMatrix {
    ConnectionMatrix::new2(ZERO, ONE, ONE, ZERO)
}

/// Permutation matrix sending basis vector `j` to `perm[j]`.
pub fn permutation(perm: &[usize]) -> Result<ConnectionMatrix> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidInput(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(ConnectionMatrix { m: DMatrix::from_fn(n, n, |i, j| if perm[j] == i { ONE } else { ZERO }) })
}

pub fn lambda(diag: &[C64]) -> ConnectionMatrix {
    let n = diag.len();
    ConnectionMatrix { m: DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO }) }
}

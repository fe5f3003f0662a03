use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::matrix::{c_power, lambda, p_sigma, permutation, s_matrix, st_matrix, w_diag, w_matrix, ConnectionMatrix};
use crate::{Error, Result, C64};

/// Named values for symbolic labels (`"s_3/2"`, `"omega"`).
pub type Bindings = BTreeMap<String, C64>;

/// A numeric value or a symbolic name resolved through [`Bindings`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(#[serde(with = "crate::serde_c64")] C64),
    Name(String),
}

impl From<C64> for Scalar {
    fn from(z: C64) -> Self {
        Scalar::Num(z)
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Name(s.to_string())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Num(z) => write!(f, "{z}"),
            Scalar::Name(n) => f.write_str(n),
        }
    }
}

impl Scalar {
    fn resolve(&self, b: &Bindings) -> Option<C64> {
        match self {
            Scalar::Num(z) => Some(*z),
            Scalar::Name(n) => b.get(n).copied(),
        }
    }
}

/// Payload of a reconnection factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Phase {
    /// `W[ω]` for dim 2.
    Value { omega: Scalar },
    /// `diag(e^{iω_k})` for dim n.
    Diagonal { omegas: Vec<Scalar> },
    /// `W[to, from]` whose phase integral has not been computed yet.
    Path {
        #[serde(with = "crate::serde_c64")]
        from: C64,
        #[serde(with = "crate::serde_c64")]
        to: C64,
    },
}

/// One symbolic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum Factor {
    S {
        s: Scalar,
    },
    #[serde(rename = "ST", alias = "S^T")]
    ST {
        s: Scalar,
    },
    W {
        #[serde(flatten)]
        phase: Phase,
    },
    C {
        #[serde(default = "one")]
        power: i32,
    },
    P {
        perm: Vec<usize>,
    },
    #[serde(rename = "Lambda")]
    Lambda {
        diag: Vec<Scalar>,
    },
}

fn one() -> i32 {
    1
}

impl Factor {
    pub fn s(s: impl Into<Scalar>) -> Self {
        Factor::S { s: s.into() }
    }

    pub fn st(s: impl Into<Scalar>) -> Self {
        Factor::ST { s: s.into() }
    }

    pub fn w(omega: impl Into<Scalar>) -> Self {
        Factor::W { phase: Phase::Value { omega: omega.into() } }
    }

    pub fn c(power: i32) -> Self {
        Factor::C { power }
    }

    /// Dimension this factor pins down, if any.
    fn intrinsic_dim(&self) -> Option<usize> {
        match self {
            Factor::W { phase: Phase::Diagonal { omegas } } => Some(omegas.len()),
            Factor::P { perm } => Some(perm.len()),
            Factor::Lambda { diag } => Some(diag.len()),
            _ => None,
        }
    }

    fn matrix(&self, dim: usize, b: &Bindings) -> Result<ConnectionMatrix> {
        let need2 = || -> Result<()> {
            if dim != 2 {
                Err(Error::DimensionMismatch { expected: 2, got: dim })
            } else {
                Ok(())
            }
        };
        let constant =
            |s: &Scalar| s.resolve(b).ok_or_else(|| Error::InvalidInput(format!("unbound Stokes constant `{s}`")));
        let phase = |s: &Scalar| s.resolve(b).ok_or_else(|| Error::UnresolvedPhase(s.to_string()));
        match self {
            Factor::S { s } => {
                need2()?;
                Ok(s_matrix(constant(s)?))
            }
            Factor::ST { s } => {
                need2()?;
                Ok(st_matrix(constant(s)?))
            }
            Factor::W { phase: Phase::Value { omega } } => {
                need2()?;
                Ok(w_matrix(phase(omega)?))
            }
            Factor::W { phase: Phase::Diagonal { omegas } } => {
                let v: Vec<C64> = omegas.iter().map(phase).collect::<Result<_>>()?;
                Ok(w_diag(&v))
            }
            Factor::W { phase: Phase::Path { from, to } } => Err(Error::UnresolvedPhase(format!("W[{to}, {from}]"))),
            Factor::C { power } => {
                need2()?;
                Ok(c_power(*power))
            }
            Factor::P { perm } => permutation(perm),
            Factor::Lambda { diag } => {
                let v: Vec<C64> = diag.iter().map(constant).collect::<Result<_>>()?;
                Ok(lambda(&v))
            }
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::S { s } => write!(f, "S[{s}]"),
            Factor::ST { s } => write!(f, "S^T[{s}]"),
            Factor::W { phase: Phase::Value { omega } } => write!(f, "W[{omega}]"),
            Factor::W { phase: Phase::Diagonal { omegas } } => {
                let parts: Vec<String> = omegas.iter().map(|o| o.to_string()).collect();
                write!(f, "W[{}]", parts.join(", "))
            }
            Factor::W { phase: Phase::Path { from, to } } => write!(f, "W[{to}, {from}]"),
            Factor::C { power } => write!(f, "C^{power}"),
            Factor::P { perm } => write!(f, "P{perm:?}"),
            Factor::Lambda { diag } => {
                let parts: Vec<String> = diag.iter().map(|o| o.to_string()).collect();
                write!(f, "Λ[{}]", parts.join(", "))
            }
        }
    }
}

/// Product of generators in written order; the rightmost factor acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorWord {
    dim: usize,
    factors: Vec<Factor>,
}

impl OperatorWord {
    pub fn new(dim: usize, factors: Vec<Factor>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        for f in &factors {
            if let Some(d) = f.intrinsic_dim() {
                if d != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: d });
                }
            }
        }
        Ok(Self { dim, factors })
    }

    /// Dimension inferred from the factors (2 unless a factor fixes it).
    pub fn from_factors(factors: Vec<Factor>) -> Result<Self> {
        let dim = factors.iter().find_map(|f| f.intrinsic_dim()).unwrap_or(2);
        Self::new(dim, factors)
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, factors: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }
}

impl fmt::Display for OperatorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("I");
        }
        let parts: Vec<String> = self.factors.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join("·"))
    }
}

impl Serialize for OperatorWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.factors.serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let factors = Vec::<Factor>::deserialize(d)?;
        Self::from_factors(factors).map_err(serde::de::Error::custom)
    }
}

/// Generator kinds accepted by [`make_generator`].
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    S(C64),
    ST(C64),
    W(C64),
    WDiag(Vec<C64>),
    C(i32),
    P(Vec<usize>),
    Lambda(Vec<C64>),
}

pub fn make_generator(kind: GeneratorKind, dim: usize) -> Result<ConnectionMatrix> {
    let two = |m: ConnectionMatrix| {
        if dim == 2 {
            Ok(m)
        } else {
            Err(Error::DimensionMismatch { expected: 2, got: dim })
        }
    };
    let sized = |m: ConnectionMatrix| {
        if m.dim() == dim {
            Ok(m)
        } else {
            Err(Error::DimensionMismatch { expected: dim, got: m.dim() })
        }
    };
    let m = match kind {
        GeneratorKind::S(s) => two(s_matrix(s))?,
        GeneratorKind::ST(s) => two(st_matrix(s))?,
        GeneratorKind::W(w) => two(w_matrix(w))?,
        GeneratorKind::C(k) => two(c_power(k))?,
        GeneratorKind::WDiag(w) => sized(w_diag(&w))?,
        GeneratorKind::P(p) if dim == 2 && p == [1, 0] => p_sigma(),
        GeneratorKind::P(p) => sized(permutation(&p)?)?,
        GeneratorKind::Lambda(d) => sized(lambda(&d))?,
    };
    Ok(m)
}

pub fn evaluate_word(word: &OperatorWord, bindings: &Bindings) -> Result<ConnectionMatrix> {
    let mut acc = ConnectionMatrix::identity(word.dim);
    for f in &word.factors {
        acc = &acc * &f.matrix(word.dim, bindings)?;
    }
    Ok(acc)
}

/// `s''` with `S[s']·W[ω] = W[ω]·S[s'']` (or the `Sᵀ` analogue).
pub fn commute_sw(s: C64, omega: C64, transpose: bool) -> C64 {
    let i = C64::new(0.0, 1.0);
    if transpose {
        s * (-2.0 * i * omega).exp()
    } else {
        s * (2.0 * i * omega).exp()
    }
}

/// Where the reconnection factor sits in the canonical two-factor word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalSide {
    /// `S[s]·W[Ω]`
    StokesFirst,
    /// `W[Ω]·S[s]`
    PhaseFirst,
}

/// Collapse a same-handed word of Stokes and reconnection factors to a
/// single Stokes factor and a single reconnection factor.
pub fn reduce_to_canonical(word: &OperatorWord, bindings: &Bindings, side: CanonicalSide) -> Result<OperatorWord> {
    if word.dim != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: word.dim });
    }
    let has_s = word.factors.iter().any(|f| matches!(f, Factor::S { .. }));
    let has_st = word.factors.iter().any(|f| matches!(f, Factor::ST { .. }));
    if has_s && has_st {
        return Err(Error::MixedHandedness);
    }
    let transpose = has_st;
    let i = C64::new(0.0, 1.0);
    // fold from the right: the accumulated suffix is S[s]·W[total]
    let mut s = C64::new(0.0, 0.0);
    let mut total = C64::new(0.0, 0.0);
    for f in word.factors.iter().rev() {
        match f {
            Factor::S { s: a } | Factor::ST { s: a } => {
                let a =
                    a.resolve(bindings).ok_or_else(|| Error::InvalidInput(format!("unbound Stokes constant `{a}`")))?;
                s += a;
            }
            Factor::W { phase: Phase::Value { omega } } => {
                let w = omega.resolve(bindings).ok_or_else(|| Error::UnresolvedPhase(omega.to_string()))?;
                // W[ω]·S[s] = S[s e^{-2iω}]·W[ω]; Sᵀ picks up e^{+2iω}
                let k = if transpose { 2.0 } else { -2.0 };
                s *= (k * i * w).exp();
                total += w;
            }
            Factor::W { phase: Phase::Path { from, to } } => {
                return Err(Error::UnresolvedPhase(format!("W[{to}, {from}]")));
            }
            other => {
                return Err(Error::InvalidInput(format!("{other} must be moved out of the word before reduction")))
            }
        }
    }
    let stokes = |v: C64| if transpose { Factor::st(v) } else { Factor::s(v) };
    let factors = match side {
        CanonicalSide::StokesFirst => vec![stokes(s), Factor::w(total)],
        CanonicalSide::PhaseFirst => vec![Factor::w(total), stokes(commute_sw(s, total, transpose))],
    };
    OperatorWord::new(2, factors)
}

//! Phase-integral (WKBJ) analysis of second-order linear ODEs
//! `y'' + R(z, λ) y = 0` in the complex plane.
//!
//! The crate is organised bottom-up:
//!
//! - [`cplane`]: rational integrands, root finding, piecewise-linear paths and
//!   adaptive contour quadrature.
//! - [`phase`]: branch-tracked phase integrand `q = √R`, phase integrals `ω`,
//!   the validity parameter `ε` and the base solutions `y± = q^{-1/2} e^{±iω}`.
//! - [`algebra`]: the connection-matrix calculus (`S`, `Sᵀ`, `W`, `C`, `P_σ`,
//!   `Λ`), symbolic operator words and their canonical reduction.
//! - [`geometry`]: Stokes / anti-Stokes line tracing, wedges, dominance and
//!   diagram output (JSON and SVG).
//! - [`oracle`]: exact F-matrices from direct integration of the ODE along
//!   complex paths, Stokes-constant extraction and monodromy.
//! - [`symmetry`]: symmetry transformations `{f̂, ĝ, ĥ}` and numerical
//!   verification of the induced relations.
//! - [`weber`]: the parabolic-cylinder reference problem `R = z² − δ²`.

pub mod algebra;
pub mod cplane;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod phase;
pub mod serde_c64;
pub mod symmetry;
pub mod weber;

pub use error::{Error, Result};

/// Double-precision complex number used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Shorthand constructor.
#[inline]
pub const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

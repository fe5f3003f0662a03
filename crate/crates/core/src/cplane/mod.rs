//! Complex-plane substrate: polynomials, rational integrands, paths and
//! contour quadrature.

pub mod expr;
pub mod path;
pub mod poly;
pub mod quad;
pub mod rational;

pub use expr::Expr;
pub use path::{arc_points, PathSpec};
pub use poly::{Poly, Root};
pub use quad::{contour_integrate, Quadrature};
pub use rational::{evaluate, find_zeros_poles, Coef, RationalIntegrand, RationalSpec, Singularities};

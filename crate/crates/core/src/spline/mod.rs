//! Knot vectors, B-spline basis evaluation and the tensor-product surface
//! that is closed (periodic) in the circumferential direction.

mod knots;
mod surface;

pub use knots::{BasisEval, KnotKind, KnotVector};
pub use surface::{Sensitivity, SplineSurface};

/// Slack allowed when a parameter sits just outside a knot domain.
pub const DOMAIN_TOL: f64 = 1e-12;

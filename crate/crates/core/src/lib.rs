//! Deformable periodic B-spline template fitting for heart-valve point clouds.
//!
//! A template surface, open along the leaflet (axial) direction and closed
//! around the annulus (circumferential direction), is deformed by moving its
//! control points to minimize a weighted sum of point-cloud fidelity terms
//! (one-sided Chamfer, Hausdorff, annulus Chamfer) and surface regularizers
//! (tangent orthogonality, tangent-point repulsion, normal deviation).

pub mod error;
pub mod geometry;
pub mod gradients;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod optim;
pub mod pipeline;
pub mod spatial;
pub mod spline;
pub mod synth;
pub mod vec3;

pub use error::{Error, Result};
pub use vec3::Vec3;

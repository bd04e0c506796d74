//! Template construction, similarity pre-alignment and warm-started
//! multi-frame fitting.

mod template;

pub use template::{make_template, TemplateSpec};

pub(crate) use template::greville;

use nalgebra::{Matrix3, Rotation3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SampleGrid;
use crate::losses::PointCloud;
use crate::optim::{fit_single, FitConfig, FitResult};
use crate::spline::SplineSurface;
use crate::vec3::Vec3;

/// Sample grid used to summarize a surface during alignment.
pub const ALIGN_SAMPLES: (usize, usize) = (40, 120);

/// `p -> scale * R (p - from) + to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub from: Vec3,
    pub to: Vec3,
    pub scale: f64,
    pub rotation: [[f64; 3]; 3],
}

impl Similarity {
    pub fn identity() -> Self {
        Self {
            from: Vec3::ZERO,
            to: Vec3::ZERO,
            scale: 1.0,
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let d = p - self.from;
        let r = &self.rotation;
        let rd = Vec3::new(
            r[0][0] * d.x + r[0][1] * d.y + r[0][2] * d.z,
            r[1][0] * d.x + r[1][1] * d.y + r[1][2] * d.z,
            r[2][0] * d.x + r[2][1] * d.y + r[2][2] * d.z,
        );
        rd * self.scale + self.to
    }

    /// Net translation `apply(0)`.
    pub fn translation(&self) -> Vec3 {
        self.apply(Vec3::ZERO)
    }
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().fold(Vec3::ZERO, |a, p| a + *p) / points.len() as f64
}

fn rms_radius(points: &[Vec3], c: Vec3) -> f64 {
    (points.iter().map(|p| (*p - c).norm_squared()).sum::<f64>() / points.len() as f64).sqrt()
}

/// Smallest-variance principal direction, if it is well separated from the
/// other two.
fn plane_normal(points: &[Vec3]) -> Option<Vec3> {
    if points.len() < 3 {
        return None;
    }
    let c = centroid(points);
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::new(p.x - c.x, p.y - c.y, p.z - c.z);
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (lo, mid, hi) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
    if !(hi > 0.0) || mid <= 1e-12 * hi || mid - lo <= 1e-6 * hi {
        return None;
    }
    let v = eig.eigenvectors.column(order[0]);
    Some(Vec3::new(v[0], v[1], v[2]))
}

/// Similarity transform taking `surface` onto `cloud`: centroids and RMS
/// radii are matched, and the annulus-plane normals aligned by the smallest
/// rotation.
///
/// The surface is summarized by its samples on a 40 x 120 grid (its
/// annulus-edge row stands in for the annulus when the cloud is labeled).
pub fn prealign_transform(surface: &SplineSurface, cloud: &PointCloud) -> Result<Similarity> {
    let grid = SampleGrid::new(surface, ALIGN_SAMPLES.0, ALIGN_SAMPLES.1)?;
    let samples = grid.evaluate(surface)?;
    let sc = centroid(&samples.points);
    let cc = cloud.centroid();
    let s_rms = rms_radius(&samples.points, sc);
    let c_rms = cloud.rms_radius();
    if !(c_rms > 0.0) {
        return Err(Error::Alignment("all cloud points coincide".into()));
    }
    if !(s_rms > 0.0) {
        return Err(Error::Alignment("surface collapses to a point".into()));
    }
    let annulus = cloud.annulus_points();
    let (cloud_ref, surf_ref) = if annulus.len() >= 3 {
        (annulus, samples.boundary_points())
    } else {
        (cloud.points().to_vec(), samples.points.clone())
    };
    let mut rotation = Similarity::identity().rotation;
    match (plane_normal(&cloud_ref), plane_normal(&surf_ref)) {
        (Some(mut nc), Some(ns)) => {
            if nc.dot(ns) < 0.0 {
                nc = -nc;
            }
            let a = Vector3::new(ns.x, ns.y, ns.z);
            let b = Vector3::new(nc.x, nc.y, nc.z);
            let rot = Rotation3::rotation_between(&a, &b).unwrap_or_else(Rotation3::identity);
            let m = rot.matrix();
            for (i, row) in rotation.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = m[(i, j)];
                }
            }
        }
        _ => log::warn!("orientation undetermined; aligning position and scale only"),
    }
    Ok(Similarity { from: sc, to: cc, scale: c_rms / s_rms, rotation })
}

/// Applies [`prealign_transform`] to the control points.
pub fn affine_prealign(surface: &SplineSurface, cloud: &PointCloud) -> Result<SplineSurface> {
    let t = prealign_transform(surface, cloud)?;
    Ok(surface.map_control(|p| t.apply(p)))
}

/// Labeled point clouds in fitting order.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    frames: Vec<(String, PointCloud)>,
}

impl FrameSequence {
    pub fn new(frames: Vec<(String, PointCloud)>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::arg("frame sequence is empty"));
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[(String, PointCloud)] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prealign {
    None,
    #[default]
    FirstFrame,
    EveryFrame,
}

#[derive(Debug, Clone)]
pub struct FrameFit {
    pub label: String,
    pub initial: SplineSurface,
    pub result: FitResult,
}

/// A sequence fit that stopped at a failing frame.
#[derive(Debug)]
pub struct SequenceFailure {
    pub completed: Vec<FrameFit>,
    pub label: String,
    pub error: Error,
}

impl std::fmt::Display for SequenceFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "frame `{}` failed after {} completed frame(s): {}", self.label, self.completed.len(), self.error)
    }
}

impl std::error::Error for SequenceFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Fits every frame in order, starting each from the previous result.
pub fn fit_sequence(
    template: &SplineSurface,
    frames: &FrameSequence,
    config: &FitConfig,
    prealign: Prealign,
) -> std::result::Result<Vec<FrameFit>, SequenceFailure> {
    let mut done: Vec<FrameFit> = Vec::with_capacity(frames.len());
    let mut current = template.clone();
    for (r, (label, cloud)) in frames.frames().iter().enumerate() {
        log::info!("frame {} of {}: {label}", r + 1, frames.len());
        let align = match prealign {
            Prealign::None => false,
            Prealign::FirstFrame => r == 0,
            Prealign::EveryFrame => true,
        };
        let step = (|| {
            let initial = if align { affine_prealign(&current, cloud)? } else { current.clone() };
            let result = fit_single(&initial, cloud, config)?;
            Ok::<_, Error>((initial, result))
        })();
        match step {
            Ok((initial, result)) => {
                current = result.surface.clone();
                done.push(FrameFit { label: label.clone(), initial, result });
            }
            Err(error) => return Err(SequenceFailure { completed: done, label: label.clone(), error }),
        }
    }
    Ok(done)
}

#[cfg(test)]
mod tests;

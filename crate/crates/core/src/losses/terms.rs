use crate::error::{Error, Result};
use crate::geometry::SurfaceSamples;
use crate::spatial::{self, NnStrategy};
use crate::vec3::Vec3;

use super::{NormalPick, PointCloud};

fn mean_sq(nearest: &[spatial::Nearest]) -> f64 {
    nearest.iter().map(|n| n.dist_sq).sum::<f64>() / nearest.len() as f64
}

/// Mean squared distance from each cloud point to its nearest sample.
pub fn chamfer_one_sided(samples: &SurfaceSamples, cloud: &PointCloud) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::arg("no surface samples"));
    }
    let nn = spatial::nearest_all(cloud.points(), &samples.points, NnStrategy::Auto);
    Ok(mean_sq(&nn))
}

/// Sum of both directed mean squared nearest distances.
pub fn chamfer_symmetric(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg("Chamfer distance of an empty set"));
    }
    let ab = spatial::nearest_all(a, b, NnStrategy::Auto);
    let ba = spatial::nearest_all(b, a, NnStrategy::Auto);
    Ok(mean_sq(&ab) + mean_sq(&ba))
}

/// Larger of the two directed max-min distances (unsquared).
pub fn hausdorff(samples: &SurfaceSamples, cloud: &PointCloud) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::arg("no surface samples"));
    }
    let f = spatial::directed_max_min(cloud.points(), &samples.points, NnStrategy::Auto);
    let b = spatial::directed_max_min(&samples.points, cloud.points(), NnStrategy::Auto);
    Ok(f.dist_sq.max(b.dist_sq).sqrt())
}

/// Symmetric Chamfer between the annulus-edge samples and the annulus-tagged
/// points; zero when the cloud carries no annulus labels.
pub fn annulus_loss(samples: &SurfaceSamples, cloud: &PointCloud) -> Result<f64> {
    let annulus = cloud.annulus_points();
    if annulus.is_empty() {
        return Ok(0.0);
    }
    let edge = samples.boundary_points();
    if edge.is_empty() {
        return Err(Error::arg("samples have no boundary row"));
    }
    chamfer_symmetric(&edge, &annulus)
}

pub(crate) fn abs_cos(a: Vec3, b: Vec3) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).abs()
}

pub(crate) fn orthogonality_parts(samples: &SurfaceSamples) -> Result<(f64, usize)> {
    let mut sum = 0.0;
    let mut count = 0;
    for k in 0..samples.len() {
        if samples.valid[k] {
            sum += abs_cos(samples.tangents_u[k], samples.tangents_v[k]);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::AllDegenerate { count: samples.len() });
    }
    Ok((sum / count as f64, count))
}

/// Mean `|cos|` of the angle between the two tangents over valid samples.
pub fn orthogonality_energy(samples: &SurfaceSamples) -> Result<f64> {
    Ok(orthogonality_parts(samples)?.0)
}

/// Samples that take part in the tangent-point pairs.
pub fn tpe_active(samples: &SurfaceSamples, skip_boundary: bool) -> Vec<bool> {
    (0..samples.len()).map(|k| samples.valid[k] && !(skip_boundary && samples.boundary[k])).collect()
}

/// Maximum tangent-point ratio over ordered pairs of interior samples.
pub fn tangent_point_energy(samples: &SurfaceSamples, alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::arg(format!("tpe_alpha must be > 0, got {alpha}")));
    }
    if samples.len() < 2 {
        return Err(Error::arg("tangent-point energy needs at least two samples"));
    }
    let active = tpe_active(samples, true);
    let n = active.iter().filter(|a| **a).count();
    let m = if n * n >= spatial::BRUTE_FORCE_PAIRS {
        let tree = spatial::KdTree::build(&samples.points);
        spatial::tpe_max(&samples.points, &samples.normals, &active, alpha, &tree, None)
    } else {
        spatial::tpe_max_brute(&samples.points, &samples.normals, &active, alpha)
    };
    if m.capped {
        log::warn!("tangent-point energy capped: coincident samples {:?}", m.pair);
    }
    Ok(m.value)
}

pub(crate) fn normal_deviation_parts(samples: &SurfaceSamples) -> Result<(f64, NormalPick)> {
    let mut sum = 0.0;
    let mut count = 0;
    for k in 0..samples.len() {
        if samples.valid[k] {
            sum += samples.normals[k].z;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::AllDegenerate { count: samples.len() });
    }
    let mean = sum / count as f64;
    let mut best = (f64::NEG_INFINITY, 0, 0.0);
    for k in 0..samples.len() {
        if samples.valid[k] {
            let d = samples.normals[k].z - mean;
            if d.abs() > best.0 {
                best = (d.abs(), k, d);
            }
        }
    }
    let sign = if best.2 > 0.0 {
        1.0
    } else if best.2 < 0.0 {
        -1.0
    } else {
        0.0
    };
    Ok((best.0, NormalPick { sample: best.1, sign, valid_count: count }))
}

/// Largest deviation of a normal's z-component from the mean z-component.
pub fn normal_deviation_energy(samples: &SurfaceSamples) -> Result<f64> {
    Ok(normal_deviation_parts(samples)?.0)
}

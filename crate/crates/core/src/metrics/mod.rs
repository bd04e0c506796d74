//! Fit-quality measures: scaled nearest-neighbor distance (sNND) and a few
//! geometric diagnostics.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{surface_area, SampleGrid, SurfaceSamples, DEFAULT_SAMPLES};
use crate::losses::PointCloud;
use crate::spatial::{self, KdTree, NnStrategy};
use crate::spline::SplineSurface;
use crate::vec3::Vec3;

/// Sample grid used for sNND evaluation: the default grid refined three
/// times in each direction, so it contains every default sample.
pub const EVAL_SAMPLES: (usize, usize) = ((DEFAULT_SAMPLES.0 - 1) * 3 + 1, DEFAULT_SAMPLES.1 * 3);
/// Gauss-Legendre order per knot span for the surface area.
pub const AREA_QUADRATURE: usize = 4;
pub const DEFAULT_BINS: usize = 20;

/// Distance from every cloud point to its nearest sample over `sqrt(area)`.
pub fn snnd(cloud: &PointCloud, samples: &[Vec3], area: f64) -> Result<Vec<f64>> {
    if !(area.is_finite() && area > 0.0) {
        return Err(Error::arg(format!("surface area must be > 0, got {area}")));
    }
    if samples.is_empty() {
        return Err(Error::arg("no surface samples"));
    }
    let scale = area.sqrt();
    Ok(spatial::nearest_all(cloud.points(), samples, NnStrategy::Auto)
        .into_iter()
        .map(|n| n.dist_sq.sqrt() / scale)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnndReport {
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `bins + 1` uniform edges over `[0, max]`.
    pub bin_edges: Vec<f64>,
    /// Percentage of points per bin; the last bin is closed on the right.
    pub percentages: Vec<f64>,
    pub area: f64,
    pub sample_count: usize,
}

/// Summary statistics and histogram of sNND values.
pub fn snnd_report(values: Vec<f64>, area: f64, bins: usize) -> Result<SnndReport> {
    if values.is_empty() {
        return Err(Error::arg("no sNND values"));
    }
    if bins == 0 {
        return Err(Error::arg("histogram needs at least one bin"));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|k| max * k as f64 / bins as f64).collect();
    let mut counts = vec![0usize; bins];
    for &v in &values {
        let b = if max > 0.0 { ((v / max * bins as f64).floor() as usize).min(bins - 1) } else { 0 };
        counts[b] += 1;
    }
    let n = values.len() as f64;
    let percentages = counts.iter().map(|c| 100.0 * *c as f64 / n).collect();
    Ok(SnndReport { values, min, max, mean, bin_edges, percentages, area, sample_count: 0 })
}

/// sNND of `cloud` against `surface` on the default evaluation grid.
pub fn evaluate_fit(surface: &SplineSurface, cloud: &PointCloud) -> Result<SnndReport> {
    evaluate_fit_with(surface, cloud, EVAL_SAMPLES.0, EVAL_SAMPLES.1, DEFAULT_BINS)
}

pub fn evaluate_fit_with(
    surface: &SplineSurface,
    cloud: &PointCloud,
    n_u: usize,
    n_v: usize,
    bins: usize,
) -> Result<SnndReport> {
    let samples = SampleGrid::new(surface, n_u, n_v)?.evaluate(surface)?;
    let area = surface_area(surface, AREA_QUADRATURE)?;
    let values = snnd(cloud, &samples.points, area)?;
    let mut report = snnd_report(values, area, bins)?;
    report.sample_count = samples.len();
    Ok(report)
}

/// Smallest distance between samples more than `exclusion` grid steps
/// apart (Chebyshev distance in grid indices, circular around the seam).
/// Returns the distance and the two sample indices.
pub fn min_non_neighbor_distance(samples: &SurfaceSamples, exclusion: usize) -> (f64, usize, usize) {
    let (nu, nv) = (samples.n_u, samples.n_v);
    let tree = KdTree::build(&samples.points);
    let is_neighbor = |a: usize, b: usize| {
        let (ia, ja) = (a / nv, a % nv);
        let (ib, jb) = (b / nv, b % nv);
        let di = ia.abs_diff(ib);
        let dj = ja.abs_diff(jb);
        let dj = dj.min(nv - dj);
        di.max(dj) <= exclusion
    };
    let best = (0..nu * nv)
        .into_par_iter()
        .map(|a| {
            // grow the search radius until a non-neighbor shows up
            let mut r = 1e-3 * tree_extent(&samples.points);
            loop {
                let mut hit: Option<(f64, usize)> = None;
                tree.for_each_in_ball(samples.points[a], r * r, |b, p| {
                    if b != a && !is_neighbor(a, b) {
                        let d = (p - samples.points[a]).norm_squared();
                        if hit.map_or(true, |(hd, hb)| d < hd || (d == hd && b < hb)) {
                            hit = Some((d, b));
                        }
                    }
                });
                if let Some((d, b)) = hit {
                    return (d, a, b);
                }
                if r > 1e6 {
                    return (f64::INFINITY, a, a);
                }
                r *= 2.0;
            }
        })
        .reduce(|| (f64::INFINITY, usize::MAX, usize::MAX), |x, y| if (y.0, y.1) < (x.0, x.1) { y } else { x });
    (best.0.sqrt(), best.1, best.2)
}

fn tree_extent(points: &[Vec3]) -> f64 {
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        for a in 0..3 {
            lo.set(a, lo.get(a).min(p.get(a)));
            hi.set(a, hi.get(a).max(p.get(a)));
        }
    }
    (hi - lo).norm().max(f64::MIN_POSITIVE)
}

/// Mean `|cos|` between the two tangents over valid samples.
pub fn mean_abs_cos(samples: &SurfaceSamples) -> Result<f64> {
    crate::losses::orthogonality_energy(samples)
}

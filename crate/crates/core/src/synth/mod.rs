//! Synthetic ground truth: closing-valve surfaces, Poisson-disk clouds and
//! Gaussian noise.

use std::collections::HashMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::surface_jacobian;
use crate::losses::PointCloud;
use crate::pipeline::{make_template, TemplateSpec};
use crate::spline::SplineSurface;
use crate::vec3::Vec3;

/// One stage of the synthetic closing motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthStage {
    /// 0 = fully open, 1 = coapted.
    pub closure: f64,
    pub base: TemplateSpec,
    /// Displacement scale in length units.
    pub amplitude: f64,
    /// Upper bound on the inward displacement as a fraction of the local
    /// control radius.
    pub max_inward_fraction: f64,
    pub seed: u64,
}

impl Default for SynthStage {
    fn default() -> Self {
        Self { closure: 0.0, base: TemplateSpec::default(), amplitude: 1.0, max_inward_fraction: 0.85, seed: 0 }
    }
}

impl SynthStage {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.closure) {
            return Err(Error::arg(format!("closure must lie in [0, 1], got {}", self.closure)));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::arg(format!("amplitude must be >= 0, got {}", self.amplitude)));
        }
        if !(0.0..1.0).contains(&self.max_inward_fraction) {
            return Err(Error::arg("max_inward_fraction must lie in [0, 1)"));
        }
        self.base.validate()
    }

    /// Near-coaptation fixture whose leaflet tips almost meet at the axis.
    pub fn pinch(base: TemplateSpec, seed: u64) -> Self {
        Self { closure: 0.95, amplitude: 1.6 * base.radius, max_inward_fraction: 0.97, base, seed }
    }
}

/// Per-leaflet amplitude factors in `[0.85, 1.15]`.
fn leaflet_gains(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen_range(0.85..=1.15)).collect()
}

/// Template deformed by the closing motion of `stage`.
///
/// Each leaflet bulges inward and sags, most strongly at its centre and
/// free edge; the commissures stay put.
pub fn synth_valve_surface(stage: &SynthStage) -> Result<SplineSurface> {
    stage.validate()?;
    let template = make_template(&stage.base)?;
    let l = stage.base.leaflets;
    let gains = leaflet_gains(l, stage.seed);
    let sector = TAU / l as f64;
    let axial = crate::pipeline::greville(template.knots_axial());
    let c = stage.closure * stage.amplitude;
    let nc = template.n_circ_free();
    let mut out = template.clone();
    for (i, &ub) in axial.iter().enumerate() {
        for j in 0..nc {
            let p = template.control(i, j);
            let r = (p.x * p.x + p.y * p.y).sqrt();
            if r == 0.0 || c == 0.0 {
                continue;
            }
            let theta = p.y.atan2(p.x).rem_euclid(TAU);
            let k = ((theta / sector) as usize).min(l - 1);
            let lobe = 0.5 * (1.0 - (l as f64 * theta).cos());
            let a = c * gains[k] * lobe;
            let inward = (a * ub * ub).min(stage.max_inward_fraction * r);
            let down = 0.3 * a * ub;
            let radial = Vec3::new(p.x / r, p.y / r, 0.0);
            out.set_control(i, j, p - radial * inward - Vec3::new(0.0, 0.0, down));
        }
    }
    Ok(out)
}

/// Poisson-disk cloud and the separation radius it was drawn with.
#[derive(Debug, Clone)]
pub struct PoissonSample {
    pub cloud: PointCloud,
    pub radius: f64,
}

struct DartBoard {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
    points: Vec<Vec3>,
}

impl DartBoard {
    fn new(r: f64) -> Self {
        Self { cell: r, cells: HashMap::new(), points: Vec::new() }
    }

    fn key(&self, p: Vec3) -> (i64, i64, i64) {
        if !self.cell.is_finite() {
            return (0, 0, 0);
        }
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64, (p.z / self.cell).floor() as i64)
    }

    fn try_insert(&mut self, p: Vec3, r2: f64) -> bool {
        let (a, b, c) = self.key(p);
        for i in a.saturating_sub(1)..=a.saturating_add(1) {
            for j in b.saturating_sub(1)..=b.saturating_add(1) {
                for k in c.saturating_sub(1)..=c.saturating_add(1) {
                    if let Some(ids) = self.cells.get(&(i, j, k)) {
                        if ids.iter().any(|&id| (self.points[id] - p).norm_squared() < r2) {
                            return false;
                        }
                    }
                }
            }
        }
        self.cells.entry((a, b, c)).or_default().push(self.points.len());
        self.points.push(p);
        true
    }
}

/// Area element bound used for the acceptance test.
fn max_area_element(surface: &SplineSurface) -> Result<f64> {
    let (ua, ub) = surface.domain_axial();
    let (va, vb) = surface.domain_circ();
    let mut m: f64 = 0.0;
    for i in 0..=64 {
        for j in 0..256 {
            let u = ua + (ub - ua) * i as f64 / 64.0;
            let v = va + (vb - va) * j as f64 / 256.0;
            m = m.max(surface_jacobian(surface, u, v)?.cross().norm());
        }
    }
    Ok(1.1 * m)
}

fn throw_darts(surface: &SplineSurface, r: f64, darts: usize, jmax: f64, seed: u64) -> Result<Vec<Vec3>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ua, ub) = surface.domain_axial();
    let (va, vb) = surface.domain_circ();
    let mut board = DartBoard::new(r);
    let r2 = r * r;
    for _ in 0..darts {
        let u = rng.gen_range(ua..=ub);
        let v = rng.gen_range(va..vb);
        let accept: f64 = rng.gen();
        let jac = surface_jacobian(surface, u, v)?;
        if accept * jmax > jac.cross().norm() {
            continue;
        }
        board.try_insert(surface.point(u, v)?, r2);
    }
    Ok(board.points)
}

/// Blue-noise cloud on `surface` with roughly `target` points (within 10%
/// when reachable).
pub fn sample_poisson_disk(surface: &SplineSurface, target: usize, seed: u64) -> Result<PoissonSample> {
    if target == 0 {
        return Err(Error::arg("target count must be at least 1"));
    }
    let jmax = max_area_element(surface)?;
    if target == 1 {
        // any separation keeps only the first accepted dart
        let pts = throw_darts(surface, f64::INFINITY, 10_000, jmax, seed)?;
        let first = *pts.first().ok_or_else(|| Error::arg("surface has no area to sample"))?;
        return Ok(PoissonSample { cloud: PointCloud::new(vec![first])?, radius: 0.0 });
    }
    let area = crate::geometry::surface_area(surface, 4)?;
    let darts = 100 * target + 200;
    let mut r = (area / target as f64).sqrt();
    let mut best: Option<(usize, Vec<Vec3>, f64)> = None;
    for _ in 0..40 {
        let pts = throw_darts(surface, r, darts, jmax, seed)?;
        let n = pts.len();
        let miss = n.abs_diff(target);
        if best.as_ref().map_or(true, |b| miss < b.0) {
            best = Some((miss, pts, r));
        }
        if miss * 20 <= target {
            break;
        }
        // count scales roughly like r^-2
        let ratio = (n.max(1) as f64 / target as f64).sqrt();
        r *= ratio.clamp(0.5, 2.0).powf(0.9);
    }
    let (miss, pts, r) = best.expect("at least one round");
    if miss * 10 > target {
        log::warn!("Poisson-disk sampling reached {} points for a target of {target}", pts.len());
    }
    Ok(PoissonSample { cloud: PointCloud::new(pts)?, radius: r })
}

/// Adds independent zero-mean Gaussian noise to every coordinate.
pub fn add_gaussian_noise(cloud: &PointCloud, sd: f64, seed: u64) -> Result<PointCloud> {
    if !(sd.is_finite() && sd >= 0.0) {
        return Err(Error::arg(format!("noise sd must be >= 0, got {sd}")));
    }
    if sd == 0.0 {
        return Ok(cloud.clone());
    }
    let normal = Normal::new(0.0, sd).map_err(|e| Error::arg(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cloud.map_points(|p| {
        let dx = normal.sample(&mut rng);
        let dy = normal.sample(&mut rng);
        let dz = normal.sample(&mut rng);
        p + Vec3::new(dx, dy, dz)
    })
}

#[cfg(test)]
mod tests;

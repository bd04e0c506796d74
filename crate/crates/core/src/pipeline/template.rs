use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::{KnotKind, KnotVector, SplineSurface};
use crate::vec3::Vec3;

/// Parameters of the idealized valve template.
///
/// The annulus is a circle of `radius` in the plane `z = 0`; leaflets hang
/// towards `-z`. Row 0 of the control grid is the annulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplateSpec {
    pub radius: f64,
    pub height: f64,
    pub leaflets: usize,
    pub degree_axial: usize,
    pub degree_circ: usize,
    pub n_axial: usize,
    pub n_circ_free: usize,
    /// Fraction of the height removed at the commissures.
    pub scallop_depth: f64,
    /// Fractional radius reduction from annulus to free edge.
    pub taper: f64,
}

impl Default for TemplateSpec {
    fn default() -> Self {
        Self {
            radius: 1.0,
            height: 0.8,
            leaflets: 3,
            degree_axial: 3,
            degree_circ: 3,
            n_axial: 6,
            n_circ_free: 33,
            scallop_depth: 0.35,
            taper: 0.15,
        }
    }
}

impl TemplateSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::arg(format!("template radius must be > 0, got {}", self.radius)));
        }
        if !(self.height.is_finite() && self.height > 0.0) {
            return Err(Error::arg(format!("template height must be > 0, got {}", self.height)));
        }
        if self.leaflets == 0 {
            return Err(Error::arg("template needs at least one leaflet"));
        }
        if !(0.0..1.0).contains(&self.scallop_depth) {
            return Err(Error::arg(format!("scallop depth must lie in [0, 1), got {}", self.scallop_depth)));
        }
        if !(0.0..1.0).contains(&self.taper) {
            return Err(Error::arg(format!("taper must lie in [0, 1), got {}", self.taper)));
        }
        if self.degree_axial == 0 || self.degree_circ == 0 {
            return Err(Error::arg("spline degrees must be at least 1"));
        }
        Ok(())
    }

    /// Leaflet depth at angle `theta`; shallowest at the commissures
    /// (`theta = 2 pi k / leaflets`).
    pub fn edge_height(&self, theta: f64) -> f64 {
        let l = self.leaflets as f64;
        self.height * (1.0 - self.scallop_depth * 0.5 * (1.0 + (l * theta).cos()))
    }

    /// Angle of the centre of leaflet `k`.
    pub fn leaflet_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * TAU / self.leaflets as f64
    }
}

/// Greville abscissae of a knot vector.
pub(crate) fn greville(knots: &KnotVector) -> Vec<f64> {
    let p = knots.degree();
    let t = knots.values();
    (0..knots.basis_count()).map(|i| t[i + 1..=i + p].iter().sum::<f64>() / p as f64).collect()
}

/// Angle of every free column's control point.
pub(crate) fn column_angles(circ: &KnotVector, n_free: usize) -> Vec<f64> {
    greville(circ)[..n_free].iter().map(|g| TAU * g).collect()
}

/// Radius of a periodic curve at a control angle when its control points
/// lie on the unit circle.
fn ring_gain(circ: &KnotVector, angles: &[f64]) -> Result<f64> {
    let n = angles.len();
    let g = greville(circ)[circ.degree()..][0];
    let basis = circ.basis_values(g)?;
    let j0 = basis.first();
    let theta0 = TAU * g;
    let mut gain = 0.0;
    for (c, w) in basis.rows[0].iter().enumerate() {
        gain += w * (angles[(j0 + c) % n] - theta0).cos();
    }
    Ok(gain)
}

/// Builds the periodic template surface.
pub fn make_template(spec: &TemplateSpec) -> Result<SplineSurface> {
    spec.validate()?;
    let (p, q) = (spec.degree_axial, spec.degree_circ);
    let (na, nc) = (spec.n_axial, spec.n_circ_free);
    if na < p + 1 || nc < q + 1 {
        return Err(Error::arg(format!("grid {na}x{nc} too small for degrees ({p}, {q})")));
    }
    let axial = KnotVector::uniform(KnotKind::Clamped, na, p, (0.0, 1.0))?;
    let circ = KnotVector::uniform(KnotKind::UnclampedUniform, nc + q, q, (0.0, 1.0))?;
    let rows = greville(&axial);
    let angles = column_angles(&circ, nc);
    let gain = ring_gain(&circ, &angles)?;
    let mut control = Vec::with_capacity(na * nc);
    for &ub in &rows {
        let r = spec.radius * (1.0 - spec.taper * ub) / gain;
        for &theta in &angles {
            let z = -ub * spec.edge_height(theta);
            control.push(Vec3::new(r * theta.cos(), r * theta.sin(), z));
        }
    }
    SplineSurface::new(axial, circ, true, na, nc, control)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let s = make_template(&TemplateSpec::default()).unwrap();
        assert_eq!((s.n_axial(), s.n_circ_free()), (6, 33));
        let s = make_template(&TemplateSpec { n_circ_free: 23, ..TemplateSpec::default() }).unwrap();
        assert_eq!(s.control_points().len(), 23 * 6);
    }

    #[test]
    fn invalid_specs() {
        let d = TemplateSpec::default();
        assert!(make_template(&TemplateSpec { radius: 0.0, ..d.clone() }).is_err());
        assert!(make_template(&TemplateSpec { height: -1.0, ..d.clone() }).is_err());
        assert!(make_template(&TemplateSpec { n_axial: 3, ..d.clone() }).is_err());
        assert!(make_template(&TemplateSpec { scallop_depth: 1.0, ..d }).is_err());
    }

    #[test]
    fn annulus_passes_through_radius_at_columns() {
        let spec = TemplateSpec::default();
        let s = make_template(&spec).unwrap();
        for g in greville(s.knots_circ()).iter().skip(s.degree_circ()).take(s.n_circ_free()) {
            let pt = s.point(0.0, *g).unwrap();
            assert!(((pt.x * pt.x + pt.y * pt.y).sqrt() - spec.radius).abs() < 1e-12);
            assert!(pt.z.abs() < 1e-15);
        }
    }

    #[test]
    fn flat_rings_without_scallop() {
        let spec = TemplateSpec { scallop_depth: 0.0, ..TemplateSpec::default() };
        let s = make_template(&spec).unwrap();
        let period = TAU / spec.n_circ_free as f64;
        for iu in 0..=10 {
            let u = iu as f64 / 10.0;
            let ring: Vec<Vec3> = (0..200).map(|k| s.point(u, k as f64 / 200.0).unwrap()).collect();
            let z0 = ring[0].z;
            let r: Vec<f64> = ring.iter().map(|p| (p.x * p.x + p.y * p.y).sqrt()).collect();
            let rmax = r.iter().cloned().fold(0.0, f64::max);
            let rmin = r.iter().cloned().fold(f64::INFINITY, f64::min);
            for p in &ring {
                assert!((p.z - z0).abs() < 1e-12);
            }
            // cubic B-spline circle: radial error is O((2 pi / n)^4)
            assert!((rmax - rmin) / rmax < period.powi(4));
            // rotating by one column reproduces the ring
            let rotated = s.point(u, 0.3 + 1.0 / spec.n_circ_free as f64).unwrap();
            let base = s.point(u, 0.3).unwrap();
            let (sn, cs) = period.sin_cos();
            let expect = Vec3::new(cs * base.x - sn * base.y, sn * base.x + cs * base.y, base.z);
            assert!((rotated - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn scallops_deepest_at_leaflet_centres() {
        let spec = TemplateSpec::default();
        let s = make_template(&spec).unwrap();
        let depth = |theta: f64| -s.point(1.0, theta / TAU).unwrap().z;
        for k in 0..3 {
            let c = spec.leaflet_center(k);
            let commissure = k as f64 * TAU / 3.0;
            assert!(depth(c) > depth(commissure) + 0.2 * spec.height);
        }
    }

    #[test]
    fn outward_normals() {
        let s = make_template(&TemplateSpec::default()).unwrap();
        for (u, v) in [(0.1, 0.2), (0.5, 0.7), (0.9, 0.05)] {
            let n = crate::geometry::unit_normal(&s, u, v).unwrap();
            let p = s.point(u, v).unwrap();
            assert!(n.x * p.x + n.y * p.y > 0.0);
        }
    }
}

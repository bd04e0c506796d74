//! Differential geometry of the spline surface: Jacobian, tangents, unit
//! normals, the fixed sampling grid used by the losses, and surface area.

mod quadrature;
mod sampling;

pub use quadrature::gauss_legendre;
pub use sampling::{SampleAdjoint, SampleGrid, SurfaceSamples};

use crate::error::{Error, Result};
use crate::spline::SplineSurface;
use crate::vec3::Vec3;

/// Tangent cross products shorter than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Default `(n_u, n_v)` sample grid.
pub const DEFAULT_SAMPLES: (usize, usize) = (40, 120);

/// Rows of the 2×3 parameterization Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian {
    /// `dS/du` (axial).
    pub du: Vec3,
    /// `dS/dv` (circumferential).
    pub dv: Vec3,
}

impl Jacobian {
    pub fn cross(&self) -> Vec3 {
        self.du.cross(self.dv)
    }

    /// True when the tangents do not span a plane.
    pub fn is_degenerate(&self) -> bool {
        self.cross().norm() <= DEGENERACY_TOL
    }
}

pub fn surface_jacobian(surface: &SplineSurface, u: f64, v: f64) -> Result<Jacobian> {
    let d = surface.derivatives(u, v, 1, 1)?;
    Ok(Jacobian { du: d[1][0], dv: d[0][1] })
}

/// `t_u × t_v / |t_u × t_v|`.
pub fn unit_normal(surface: &SplineSurface, u: f64, v: f64) -> Result<Vec3> {
    let c = surface_jacobian(surface, u, v)?.cross();
    let n = c.norm();
    if n <= DEGENERACY_TOL {
        return Err(Error::Degenerate { u, v });
    }
    Ok(c / n)
}

/// Samples the surface on a uniform `n_u × n_v` parameter grid.
pub fn sample_surface(surface: &SplineSurface, n_u: usize, n_v: usize) -> Result<SurfaceSamples> {
    SampleGrid::new(surface, n_u, n_v)?.evaluate(surface)
}

/// Area by tensor Gauss–Legendre quadrature of `|t_u × t_v|` over every
/// nonempty knot-span cell of one period.
pub fn surface_area(surface: &SplineSurface, quad_order: usize) -> Result<f64> {
    if quad_order < 2 {
        return Err(Error::arg("quadrature order must be at least 2"));
    }
    let (x, w) = gauss_legendre(quad_order);
    let spans = |knots: &[f64], lo: f64, hi: f64| -> Vec<(f64, f64)> {
        knots.windows(2).filter(|k| k[1] > k[0] && k[0] >= lo && k[1] <= hi).map(|k| (k[0], k[1])).collect()
    };
    let (ua, ub) = surface.domain_axial();
    let (va, vb) = surface.domain_circ();
    let u_spans = spans(surface.knots_axial().values(), ua, ub);
    let v_spans = spans(surface.knots_circ().values(), va, vb);
    let mut area = 0.0;
    for &(u0, u1) in &u_spans {
        let hu = 0.5 * (u1 - u0);
        for &(v0, v1) in &v_spans {
            let hv = 0.5 * (v1 - v0);
            let mut cell = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                let u = u0 + hu * (xi + 1.0);
                for (xj, wj) in x.iter().zip(&w) {
                    let v = v0 + hv * (xj + 1.0);
                    let jac = surface_jacobian(surface, u, v)?;
                    cell += wi * wj * jac.cross().norm();
                }
            }
            area += cell * hu * hv;
        }
    }
    Ok(area)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::spline::{KnotKind, KnotVector};

    pub(crate) fn flat_unit_patch() -> SplineSurface {
        // bilinear: S(u, v) = (u, v, 0)
        let c = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        SplineSurface::open(1, 1, 2, 2, c).unwrap()
    }

    pub(crate) fn cylinder(radius: f64, height: f64, n_axial: usize, n_circ: usize) -> SplineSurface {
        let dtheta = std::f64::consts::TAU / n_circ as f64;
        let rho = radius * 3.0 / (2.0 + dtheta.cos());
        let mut c = Vec::new();
        for i in 0..n_axial {
            let z = -height * i as f64 / (n_axial - 1) as f64;
            for j in 0..n_circ {
                let th = dtheta * (j as f64 - 1.0);
                c.push(Vec3::new(rho * th.cos(), rho * th.sin(), z));
            }
        }
        let axial = KnotVector::uniform(KnotKind::Clamped, n_axial, 1, (0.0, 1.0)).unwrap();
        let circ = KnotVector::uniform(KnotKind::UnclampedUniform, n_circ + 3, 3, (0.0, 1.0)).unwrap();
        SplineSurface::new(axial, circ, true, n_axial, n_circ, c).unwrap()
    }

    #[test]
    fn flat_patch_jacobian_and_normal() {
        let s = flat_unit_patch();
        let j = surface_jacobian(&s, 0.3, 0.6).unwrap();
        assert!((j.du - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((j.dv - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
        assert_eq!(unit_normal(&s, 0.3, 0.6).unwrap(), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let s = cylinder(1.3, 0.7, 4, 7);
        let h = 1e-6;
        for &(u, v) in &[(0.2, 0.1), (0.55, 0.6), (0.8, 0.93)] {
            let j = surface_jacobian(&s, u, v).unwrap();
            let fu = (s.point(u + h, v).unwrap() - s.point(u - h, v).unwrap()) / (2.0 * h);
            let fv = (s.point(u, v + h).unwrap() - s.point(u, v - h).unwrap()) / (2.0 * h);
            assert!((fu - j.du).norm() <= 1e-6 * j.du.norm());
            assert!((fv - j.dv).norm() <= 1e-6 * j.dv.norm());
        }
    }

    #[test]
    fn collapsed_ring_is_degenerate() {
        let s = cylinder(1.0, 1.0, 3, 6);
        // collapse axial row 0 onto a point
        let mut c = s.clone();
        for j in 0..6 {
            c.set_control(0, j, Vec3::new(0.0, 0.0, 0.0));
        }
        let jac = surface_jacobian(&c, 0.0, 0.4).unwrap();
        assert_eq!(jac.dv, Vec3::ZERO);
        assert!(jac.is_degenerate());
        assert!(matches!(unit_normal(&c, 0.0, 0.4), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn cylinder_normal_is_radial() {
        let s = cylinder(1.0, 1.0, 3, 16);
        for k in 0..50 {
            let v = k as f64 / 50.0;
            let p = s.point(0.5, v).unwrap();
            let n = unit_normal(&s, 0.5, v).unwrap();
            let radial = Vec3::new(p.x, p.y, 0.0) / (p.x * p.x + p.y * p.y).sqrt();
            // u runs downward, v counter-clockwise: t_u × t_v points outward
            assert!(n.dot(radial) > 1.0 - 1e-4, "{}", n.dot(radial));
        }
    }

    #[test]
    fn area_examples() {
        let flat = flat_unit_patch();
        assert!((surface_area(&flat, 4).unwrap() - 1.0).abs() < 1e-10);
        let cyl = cylinder(1.0, 1.0, 2, 24);
        let a = surface_area(&cyl, 4).unwrap();
        assert!((a - std::f64::consts::TAU).abs() < 0.01 * std::f64::consts::TAU, "{a}");
        let a6 = surface_area(&cyl, 6).unwrap();
        assert!((a - a6).abs() < 1e-6 * a6);
        assert!(surface_area(&cyl, 1).is_err());
    }

    #[test]
    fn area_scales_quadratically_and_ignores_rotation() {
        let cyl = cylinder(1.0, 0.8, 3, 9);
        let a = surface_area(&cyl, 4).unwrap();
        let scaled = cyl.map_control(|p| p * 2.5);
        assert!((surface_area(&scaled, 4).unwrap() - 6.25 * a).abs() < 1e-9 * 6.25 * a);
        let (s, c) = (0.7f64.sin(), 0.7f64.cos());
        let rotated = cyl.map_control(|p| Vec3::new(p.x, c * p.y - s * p.z, s * p.y + c * p.z));
        assert!((surface_area(&rotated, 4).unwrap() - a).abs() < 1e-9);
    }
}

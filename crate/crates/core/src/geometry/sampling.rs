use crate::error::{Error, Result};
use crate::spline::{BasisEval, KnotVector, SplineSurface};
use crate::vec3::Vec3;

use super::DEGENERACY_TOL;

/// Fixed tensor grid of parameter sites with cached basis rows.
///
/// Axial sites include both ends of the domain; circumferential sites cover
/// one period without repeating the seam value. Row `0` is the annulus edge
/// `u = u_0`.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    n_u: usize,
    n_v: usize,
    u_params: Vec<f64>,
    v_params: Vec<f64>,
    u_basis: Vec<BasisEval>,
    v_basis: Vec<BasisEval>,
    axial: KnotVector,
    circ: KnotVector,
}

/// Surface points, tangents and normals at every site of a [`SampleGrid`],
/// stored row-major (`index = iu * n_v + iv`).
#[derive(Debug, Clone)]
pub struct SurfaceSamples {
    pub n_u: usize,
    pub n_v: usize,
    pub params: Vec<(f64, f64)>,
    pub points: Vec<Vec3>,
    pub tangents_u: Vec<Vec3>,
    pub tangents_v: Vec<Vec3>,
    /// Unit normals; zero at degenerate sites.
    pub normals: Vec<Vec3>,
    /// `|t_u × t_v|` per site.
    pub cross_norms: Vec<f64>,
    /// False where the tangents are degenerate.
    pub valid: Vec<bool>,
    /// True on the annulus-edge row.
    pub boundary: Vec<bool>,
}

impl SurfaceSamples {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn degenerate_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    pub fn boundary_points(&self) -> Vec<Vec3> {
        self.points.iter().zip(&self.boundary).filter(|(_, b)| **b).map(|(p, _)| *p).collect()
    }

    /// Builds a sample set from bare points and normals (tangents derived
    /// from the normals). Intended for exercising the losses directly.
    pub fn from_points_normals(points: Vec<Vec3>, normals: Vec<Vec3>) -> Self {
        assert_eq!(points.len(), normals.len());
        let n = points.len();
        let mut tu = Vec::with_capacity(n);
        let mut tv = Vec::with_capacity(n);
        for nrm in &normals {
            let helper = if nrm.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
            let a = helper.cross(*nrm);
            let a = a / a.norm();
            let b = nrm.cross(a);
            tu.push(a);
            tv.push(b);
        }
        Self {
            n_u: 1,
            n_v: n,
            params: vec![(0.0, 0.0); n],
            points,
            tangents_u: tu,
            tangents_v: tv,
            normals,
            cross_norms: vec![1.0; n],
            valid: vec![true; n],
            boundary: vec![false; n],
        }
    }
}

/// Adjoint (loss sensitivity) of one sample's point and tangents.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleAdjoint {
    pub point: Vec3,
    pub tangent_u: Vec3,
    pub tangent_v: Vec3,
}

impl SampleGrid {
    pub fn new(surface: &SplineSurface, n_u: usize, n_v: usize) -> Result<Self> {
        if n_u < 2 || n_v < 3 {
            return Err(Error::arg(format!("sample grid {n_u}x{n_v} too small (need at least 2x3)")));
        }
        let (ua, ub) = surface.domain_axial();
        let (va, vb) = surface.domain_circ();
        let u_params: Vec<f64> =
            (0..n_u).map(|i| if i == n_u - 1 { ub } else { ua + (ub - ua) * i as f64 / (n_u - 1) as f64 }).collect();
        // open surfaces include the far edge; periodic ones stop short of the seam
        let v_div = if surface.is_periodic() { n_v } else { n_v - 1 };
        let v_params: Vec<f64> = (0..n_v)
            .map(|j| if !surface.is_periodic() && j == n_v - 1 { vb } else { va + (vb - va) * j as f64 / v_div as f64 })
            .collect();
        let axial = surface.knots_axial().clone();
        let circ = surface.knots_circ().clone();
        let u_basis = u_params.iter().map(|&u| axial.eval(u, 1)).collect::<Result<Vec<_>>>()?;
        let v_basis = v_params.iter().map(|&v| circ.eval(v, 1)).collect::<Result<Vec<_>>>()?;
        Ok(Self { n_u, n_v, u_params, v_params, u_basis, v_basis, axial, circ })
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn len(&self) -> usize {
        self.n_u * self.n_v
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn u_params(&self) -> &[f64] {
        &self.u_params
    }

    pub fn v_params(&self) -> &[f64] {
        &self.v_params
    }

    fn check(&self, surface: &SplineSurface) -> Result<()> {
        if surface.knots_axial() != &self.axial || surface.knots_circ() != &self.circ {
            return Err(Error::arg("sample grid was built for a different parameterization"));
        }
        Ok(())
    }

    pub fn evaluate(&self, surface: &SplineSurface) -> Result<SurfaceSamples> {
        self.check(surface)?;
        let n = self.len();
        let ncol = surface.n_circ_free();
        let mut out = SurfaceSamples {
            n_u: self.n_u,
            n_v: self.n_v,
            params: Vec::with_capacity(n),
            points: Vec::with_capacity(n),
            tangents_u: Vec::with_capacity(n),
            tangents_v: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            cross_norms: Vec::with_capacity(n),
            valid: Vec::with_capacity(n),
            boundary: Vec::with_capacity(n),
        };
        let mut c0 = vec![Vec3::ZERO; ncol];
        let mut c1 = vec![Vec3::ZERO; ncol];
        for (iu, bu) in self.u_basis.iter().enumerate() {
            let i0 = bu.first();
            for col in 0..ncol {
                let mut a = Vec3::ZERO;
                let mut b = Vec3::ZERO;
                for r in 0..bu.rows[0].len() {
                    let p = surface.control(i0 + r, col);
                    a += p * bu.rows[0][r];
                    b += p * bu.rows[1][r];
                }
                c0[col] = a;
                c1[col] = b;
            }
            for (iv, bv) in self.v_basis.iter().enumerate() {
                let j0 = bv.first();
                let mut s = Vec3::ZERO;
                let mut tu = Vec3::ZERO;
                let mut tv = Vec3::ZERO;
                for c in 0..bv.rows[0].len() {
                    let col = surface.column_of(j0 + c);
                    s += c0[col] * bv.rows[0][c];
                    tu += c1[col] * bv.rows[0][c];
                    tv += c0[col] * bv.rows[1][c];
                }
                let cross = tu.cross(tv);
                let cn = cross.norm();
                let valid = cn > DEGENERACY_TOL && cn.is_finite();
                out.params.push((self.u_params[iu], self.v_params[iv]));
                out.points.push(s);
                out.tangents_u.push(tu);
                out.tangents_v.push(tv);
                out.normals.push(if valid { cross / cn } else { Vec3::ZERO });
                out.cross_norms.push(cn);
                out.valid.push(valid);
                out.boundary.push(iu == 0);
            }
        }
        Ok(out)
    }

    /// Pulls per-sample adjoints back onto the free control grid
    /// (`dL/dP = sum_k dS_k/dP · adjoint_k`, wrapped columns folded).
    pub fn pullback(&self, surface: &SplineSurface, adjoints: &[SampleAdjoint]) -> Result<Vec<Vec3>> {
        self.check(surface)?;
        if adjoints.len() != self.len() {
            return Err(Error::arg("adjoint count does not match the sample grid"));
        }
        let ncol = surface.n_circ_free();
        let mut grad = vec![Vec3::ZERO; surface.n_axial() * ncol];
        let mut d0 = vec![Vec3::ZERO; ncol];
        let mut d1 = vec![Vec3::ZERO; ncol];
        for (iu, bu) in self.u_basis.iter().enumerate() {
            d0.iter_mut().for_each(|d| *d = Vec3::ZERO);
            d1.iter_mut().for_each(|d| *d = Vec3::ZERO);
            let row = &adjoints[iu * self.n_v..(iu + 1) * self.n_v];
            for (bv, adj) in self.v_basis.iter().zip(row) {
                let j0 = bv.first();
                for c in 0..bv.rows[0].len() {
                    let col = surface.column_of(j0 + c);
                    d0[col] += adj.point * bv.rows[0][c] + adj.tangent_v * bv.rows[1][c];
                    d1[col] += adj.tangent_u * bv.rows[0][c];
                }
            }
            let i0 = bu.first();
            for r in 0..bu.rows[0].len() {
                let base = (i0 + r) * ncol;
                for col in 0..ncol {
                    grad[base + col] += d0[col] * bu.rows[0][r] + d1[col] * bu.rows[1][r];
                }
            }
        }
        Ok(grad)
    }
}

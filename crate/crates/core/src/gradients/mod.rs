//! Exact control-point gradient of the total loss, and a finite-difference
//! cross-check.
//!
//! Min/max terms are differentiated through the element selected during
//! evaluation (frozen arg-min / arg-max).

use crate::error::{Error, Result};
use crate::geometry::{SampleAdjoint, SampleGrid};
use crate::losses::{Evaluation, LossBreakdown, LossWeights, Objective, PointCloud};
use crate::spline::SplineSurface;
use crate::vec3::Vec3;

/// `dL/dP` for every free control point, row-major like the control grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientGrid {
    n_axial: usize,
    n_circ_free: usize,
    values: Vec<Vec3>,
}

impl GradientGrid {
    pub fn zeros(n_axial: usize, n_circ_free: usize) -> Self {
        Self { n_axial, n_circ_free, values: vec![Vec3::ZERO; n_axial * n_circ_free] }
    }

    pub fn from_values(n_axial: usize, n_circ_free: usize, values: Vec<Vec3>) -> Result<Self> {
        if values.len() != n_axial * n_circ_free {
            return Err(Error::arg(format!("{} gradient entries for a {n_axial}x{n_circ_free} grid", values.len())));
        }
        Ok(Self { n_axial, n_circ_free, values })
    }

    pub fn n_axial(&self) -> usize {
        self.n_axial
    }

    pub fn n_circ_free(&self) -> usize {
        self.n_circ_free
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Vec3 {
        self.values[i * self.n_circ_free + j]
    }

    pub fn sum(&self) -> Vec3 {
        self.values.iter().fold(Vec3::ZERO, |a, g| a + *g)
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().flat_map(|g| g.to_array()).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|g| g.is_finite())
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Objective {
    /// Gradient at the configuration `eval` was computed from.
    pub fn gradient(&self, surface: &SplineSurface, eval: &Evaluation) -> Result<GradientGrid> {
        let w = self.weights();
        let s = &eval.samples;
        let sel = &eval.selections;
        let m = s.len();
        let mut adj = vec![SampleAdjoint::default(); m];
        let mut g_normal = vec![Vec3::ZERO; m];

        if w.w_cd > 0.0 {
            let q = self.cloud().points();
            let scale = w.w_cd * 2.0 / q.len() as f64;
            for (l, nn) in sel.cd.iter().enumerate() {
                adj[nn.index].point += (s.points[nn.index] - q[l]) * scale;
            }
        }

        if w.w_hd > 0.0 && sel.hd.dist > 0.0 {
            let q = self.cloud().points()[sel.hd.cloud];
            let k = sel.hd.sample;
            adj[k].point += (s.points[k] - q) * (w.w_hd / sel.hd.dist);
        }

        if let (true, Some(pick)) = (w.w_a > 0.0, &sel.annulus) {
            let a = self.annulus_points();
            let sb = w.w_a * 2.0 / pick.boundary.len() as f64;
            for (i, nn) in pick.boundary_to_annulus.iter().enumerate() {
                let k = pick.boundary[i];
                adj[k].point += (s.points[k] - a[nn.index]) * sb;
            }
            let sa = w.w_a * 2.0 / a.len() as f64;
            for (j, nn) in pick.annulus_to_boundary.iter().enumerate() {
                let k = pick.boundary[nn.index];
                adj[k].point += (s.points[k] - a[j]) * sa;
            }
        }

        if w.w_orth > 0.0 {
            let scale = w.w_orth / sel.orth_count as f64;
            for k in 0..m {
                if !s.valid[k] {
                    continue;
                }
                let a = s.tangents_u[k];
                let b = s.tangents_v[k];
                let (na, nb) = (a.norm(), b.norm());
                let c = a.dot(b) / (na * nb);
                let sg = sign(c) * scale;
                adj[k].tangent_u += (b / (na * nb) - a * (c / (na * na))) * sg;
                adj[k].tangent_v += (a / (na * nb) - b * (c / (nb * nb))) * sg;
            }
        }

        if let (true, Some((k, l))) = (w.w_tpe > 0.0, sel.tpe.pair) {
            if !sel.tpe.capped && sel.tpe.value > 0.0 {
                let alpha = w.tpe_alpha;
                let n = s.normals[k];
                let delta = s.points[k] - s.points[l];
                let d = n.dot(delta);
                let dd = delta.norm_squared();
                let r = d.abs() / dd;
                let outer = w.w_tpe * alpha * r.powf(alpha - 1.0);
                let g_delta = (n * (sign(d) / dd) - delta * (2.0 * d.abs() / (dd * dd))) * outer;
                adj[k].point += g_delta;
                adj[l].point -= g_delta;
                g_normal[k] += delta * (outer * sign(d) / dd);
            }
        }

        if w.w_norm > 0.0 && sel.normal.sign != 0.0 {
            let pick = sel.normal;
            let inv = 1.0 / pick.valid_count as f64;
            for j in 0..m {
                if s.valid[j] {
                    let delta = if j == pick.sample { 1.0 - inv } else { -inv };
                    g_normal[j].z += w.w_norm * pick.sign * delta;
                }
            }
        }

        // n = c/|c| with c = t_u x t_v
        for k in 0..m {
            let gn = g_normal[k];
            if gn == Vec3::ZERO || !s.valid[k] {
                continue;
            }
            let n = s.normals[k];
            let gc = (gn - n * n.dot(gn)) / s.cross_norms[k];
            adj[k].tangent_u += s.tangents_v[k].cross(gc);
            adj[k].tangent_v += gc.cross(s.tangents_u[k]);
        }

        let values = self.grid().pullback(surface, &adj)?;
        let grad = GradientGrid::from_values(surface.n_axial(), surface.n_circ_free(), values)?;
        if !grad.is_finite() {
            return Err(Error::NonFinite("loss gradient".into()));
        }
        Ok(grad)
    }

    /// Loss and gradient in one call.
    pub fn evaluate_with_gradient(&mut self, surface: &SplineSurface) -> Result<(Evaluation, GradientGrid)> {
        let eval = self.evaluate(surface)?;
        let grad = self.gradient(surface, &eval)?;
        Ok((eval, grad))
    }
}

/// Loss breakdown and exact gradient of `surface` against `cloud`.
pub fn loss_gradient(
    surface: &SplineSurface,
    cloud: &PointCloud,
    weights: &LossWeights,
    grid: &SampleGrid,
) -> Result<(LossBreakdown, GradientGrid)> {
    let mut obj = Objective::new(cloud.clone(), *weights, grid.clone())?;
    let (eval, grad) = obj.evaluate_with_gradient(surface)?;
    Ok((eval.breakdown, grad))
}

/// Central differences of the total loss in every control coordinate.
pub fn finite_difference_gradient(
    surface: &SplineSurface,
    cloud: &PointCloud,
    weights: &LossWeights,
    grid: &SampleGrid,
    step: f64,
) -> Result<GradientGrid> {
    if !(1e-7..=1e-3).contains(&step) {
        return Err(Error::arg(format!("finite-difference step {step} outside [1e-7, 1e-3]")));
    }
    let mut obj = Objective::new(cloud.clone(), *weights, grid.clone())?;
    let mut work = surface.clone();
    let mut values = vec![Vec3::ZERO; surface.control_points().len()];
    for idx in 0..values.len() {
        for axis in 0..3 {
            let orig = work.control_points()[idx];
            let mut p = orig;
            p.set(axis, orig.get(axis) + step);
            work.control_points_mut()[idx] = p;
            let plus = obj.evaluate(&work)?.breakdown.total;
            p.set(axis, orig.get(axis) - step);
            work.control_points_mut()[idx] = p;
            let minus = obj.evaluate(&work)?.breakdown.total;
            work.control_points_mut()[idx] = orig;
            values[idx].set(axis, (plus - minus) / (2.0 * step));
        }
    }
    GradientGrid::from_values(surface.n_axial(), surface.n_circ_free(), values)
}

#[cfg(test)]
mod tests;

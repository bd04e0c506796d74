//! Fidelity and regularization energies evaluated on surface samples.

mod cloud;
mod terms;

pub use cloud::{Label, Leaflet, PointCloud};
pub use terms::{
    annulus_loss, chamfer_one_sided, chamfer_symmetric, hausdorff, normal_deviation_energy, orthogonality_energy,
    tangent_point_energy, tpe_active,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SampleGrid, SurfaceSamples};
use crate::spatial::{self, KdTree, MaxMin, Nearest, NnStrategy, TpeMax};
use crate::spline::SplineSurface;
use crate::vec3::Vec3;

/// Term weights of the total loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub w_cd: f64,
    pub w_hd: f64,
    pub w_a: f64,
    pub w_orth: f64,
    pub w_tpe: f64,
    pub w_norm: f64,
    pub tpe_alpha: f64,
    /// Leave the annulus-edge row out of the tangent-point pairs.
    pub tpe_skip_boundary: bool,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::validation()
    }
}

impl LossWeights {
    /// Weights used for synthetic recovery runs (no annulus labels).
    pub fn validation() -> Self {
        Self { w_cd: 80.0, w_hd: 30.0, w_a: 0.0, w_orth: 5.0, w_tpe: 1e-7, w_norm: 2.0, ..Self::zero() }
    }

    /// Weights used for labeled clinical clouds.
    pub fn patient() -> Self {
        Self { w_cd: 20.0, w_hd: 0.5, w_a: 1.0, w_orth: 10.0, w_tpe: 1.5, w_norm: 5.0, ..Self::zero() }
    }

    pub fn zero() -> Self {
        Self {
            w_cd: 0.0,
            w_hd: 0.0,
            w_a: 0.0,
            w_orth: 0.0,
            w_tpe: 0.0,
            w_norm: 0.0,
            tpe_alpha: 4.0,
            tpe_skip_boundary: true,
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.w_cd, self.w_hd, self.w_a, self.w_orth, self.w_tpe, self.w_norm]
    }

    pub fn validate(&self) -> Result<()> {
        const NAMES: [&str; 6] = ["w_cd", "w_hd", "w_a", "w_orth", "w_tpe", "w_norm"];
        for (w, name) in self.as_array().iter().zip(NAMES) {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::arg(format!("weight {name} must be finite and >= 0, got {w}")));
            }
        }
        if !(self.tpe_alpha.is_finite() && self.tpe_alpha > 0.0) {
            return Err(Error::arg(format!("tpe_alpha must be > 0, got {}", self.tpe_alpha)));
        }
        Ok(())
    }
}

/// Every term of the loss together with the weighted sums.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub fid: f64,
    pub reg: f64,
    pub d_cd: f64,
    pub d_hd: f64,
    pub d_a: f64,
    pub r_orth: f64,
    pub r_tpe: f64,
    pub r_norm: f64,
}

impl LossBreakdown {
    pub fn from_terms(terms: [f64; 6], w: &LossWeights) -> Self {
        let [d_cd, d_hd, d_a, r_orth, r_tpe, r_norm] = terms;
        let fid = w.w_cd * d_cd + w.w_hd * d_hd + w.w_a * d_a;
        let reg = w.w_orth * r_orth + w.w_tpe * r_tpe + w.w_norm * r_norm;
        Self { total: fid + reg, fid, reg, d_cd, d_hd, d_a, r_orth, r_tpe, r_norm }
    }

    pub fn terms(&self) -> [f64; 6] {
        [self.d_cd, self.d_hd, self.d_a, self.r_orth, self.r_tpe, self.r_norm]
    }
}

/// Counters describing sites that were skipped or clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Diagnostics {
    pub degenerate_samples: usize,
    pub tpe_capped: bool,
}

/// Which of the two directed Hausdorff maxima was selected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HausdorffPick {
    pub sample: usize,
    pub cloud: usize,
    pub dist: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct AnnulusPick {
    /// Sample index of every boundary sample.
    pub boundary: Vec<usize>,
    pub boundary_to_annulus: Vec<Nearest>,
    pub annulus_to_boundary: Vec<Nearest>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NormalPick {
    pub sample: usize,
    pub sign: f64,
    pub valid_count: usize,
}

/// Arg-min/arg-max selections made while evaluating the loss; the gradient
/// differentiates through exactly these.
#[derive(Debug, Clone)]
pub(crate) struct Selections {
    pub cd: Vec<Nearest>,
    pub hd: HausdorffPick,
    pub annulus: Option<AnnulusPick>,
    pub tpe: TpeMax,
    pub normal: NormalPick,
    pub orth_count: usize,
}

/// One evaluation of the loss at a fixed surface.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub samples: SurfaceSamples,
    pub breakdown: LossBreakdown,
    pub diagnostics: Diagnostics,
    pub(crate) selections: Selections,
}

impl Evaluation {
    /// Indices picked by every nearest / min / max operation. Two
    /// evaluations with equal keys differentiate through the same branch.
    pub fn selection_key(&self) -> Vec<usize> {
        let sel = &self.selections;
        let mut key: Vec<usize> = sel.cd.iter().map(|n| n.index).collect();
        key.extend([sel.hd.sample, sel.hd.cloud, sel.normal.sample]);
        key.push((sel.normal.sign + 1.0) as usize);
        let s = &self.samples;
        key.extend((0..s.len()).map(|k| (s.tangents_u[k].dot(s.tangents_v[k]) > 0.0) as usize));
        if let Some((k, l)) = sel.tpe.pair {
            key.extend([k, l]);
        }
        if let Some(a) = &sel.annulus {
            key.extend(a.boundary_to_annulus.iter().map(|n| n.index));
            key.extend(a.annulus_to_boundary.iter().map(|n| n.index));
        }
        key
    }
}

/// A cloud, weights and sample grid bundled for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Objective {
    cloud: PointCloud,
    annulus: Vec<Vec3>,
    cloud_tree: KdTree,
    weights: LossWeights,
    grid: SampleGrid,
    strategy: NnStrategy,
    tpe_hint: Option<(usize, usize)>,
}

impl Objective {
    pub fn new(cloud: PointCloud, weights: LossWeights, grid: SampleGrid) -> Result<Self> {
        weights.validate()?;
        let cloud_tree = KdTree::build(cloud.points());
        let annulus = cloud.annulus_points();
        Ok(Self { cloud, annulus, cloud_tree, weights, grid, strategy: NnStrategy::Auto, tpe_hint: None })
    }

    /// Forces a nearest-neighbor strategy (results are identical either way).
    pub fn with_strategy(mut self, strategy: NnStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn weights(&self) -> &LossWeights {
        &self.weights
    }

    pub fn annulus_points(&self) -> &[Vec3] {
        &self.annulus
    }

    pub fn grid(&self) -> &SampleGrid {
        &self.grid
    }

    /// Evaluates every term on `surface`.
    pub fn evaluate(&mut self, surface: &SplineSurface) -> Result<Evaluation> {
        let samples = self.grid.evaluate(surface)?;
        if let Some(i) = samples.points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("surface sample {i}")));
        }
        let use_tree = |q: usize, r: usize| match self.strategy {
            NnStrategy::Auto => q.saturating_mul(r) >= spatial::BRUTE_FORCE_PAIRS,
            NnStrategy::BruteForce => false,
            NnStrategy::KdTree => true,
        };
        let cloud_pts = self.cloud.points();
        let sample_tree = use_tree(cloud_pts.len(), samples.len()).then(|| KdTree::build(&samples.points));

        // one-sided Chamfer, cloud -> samples
        let cd = match &sample_tree {
            Some(t) => spatial::nearest_all_in(cloud_pts, t),
            None => spatial::nearest_all(cloud_pts, &samples.points, NnStrategy::BruteForce),
        };
        let d_cd = cd.iter().map(|n| n.dist_sq).sum::<f64>() / cd.len() as f64;

        // Hausdorff; the cloud -> samples direction reuses the Chamfer queries
        let mut forward = MaxMin { query: 0, target: 0, dist_sq: f64::NEG_INFINITY };
        for (l, n) in cd.iter().enumerate() {
            if n.dist_sq > forward.dist_sq {
                forward = MaxMin { query: l, target: n.index, dist_sq: n.dist_sq };
            }
        }
        let backward = if use_tree(samples.len(), cloud_pts.len()) {
            spatial::directed_max_min_in(&samples.points, &self.cloud_tree, None)
        } else {
            spatial::directed_max_min(&samples.points, cloud_pts, NnStrategy::BruteForce)
        };
        let hd = if forward.dist_sq >= backward.dist_sq {
            HausdorffPick { sample: forward.target, cloud: forward.query, dist: forward.dist_sq.sqrt() }
        } else {
            HausdorffPick { sample: backward.query, cloud: backward.target, dist: backward.dist_sq.sqrt() }
        };

        // annulus Chamfer
        let (d_a, annulus) = if self.annulus.is_empty() {
            (0.0, None)
        } else {
            let boundary: Vec<usize> = (0..samples.len()).filter(|&k| samples.boundary[k]).collect();
            if boundary.is_empty() {
                return Err(Error::arg("sample grid has no boundary row"));
            }
            let bpts: Vec<Vec3> = boundary.iter().map(|&k| samples.points[k]).collect();
            let strat =
                if use_tree(bpts.len(), self.annulus.len()) { NnStrategy::KdTree } else { NnStrategy::BruteForce };
            let b2a = spatial::nearest_all(&bpts, &self.annulus, strat);
            let a2b = spatial::nearest_all(&self.annulus, &bpts, strat);
            let d = b2a.iter().map(|n| n.dist_sq).sum::<f64>() / b2a.len() as f64
                + a2b.iter().map(|n| n.dist_sq).sum::<f64>() / a2b.len() as f64;
            (d, Some(AnnulusPick { boundary, boundary_to_annulus: b2a, annulus_to_boundary: a2b }))
        };

        let (r_orth, orth_count) = terms::orthogonality_parts(&samples)?;
        let (r_norm, normal) = terms::normal_deviation_parts(&samples)?;

        let active = tpe_active(&samples, self.weights.tpe_skip_boundary);
        let n_active = active.iter().filter(|a| **a).count();
        let alpha = self.weights.tpe_alpha;
        let tpe = if use_tree(n_active, n_active) {
            let owned;
            let tree = match &sample_tree {
                Some(t) => t,
                None => {
                    owned = KdTree::build(&samples.points);
                    &owned
                }
            };
            spatial::tpe_max(&samples.points, &samples.normals, &active, alpha, tree, self.tpe_hint)
        } else {
            spatial::tpe_max_brute(&samples.points, &samples.normals, &active, alpha)
        };
        self.tpe_hint = tpe.pair;
        if tpe.capped {
            log::debug!("tangent-point energy hit its cap at pair {:?}", tpe.pair);
        }

        let breakdown = LossBreakdown::from_terms([d_cd, hd.dist, d_a, r_orth, tpe.value, r_norm], &self.weights);
        let diagnostics = Diagnostics { degenerate_samples: samples.degenerate_count(), tpe_capped: tpe.capped };
        if !breakdown.total.is_finite() {
            return Err(Error::NonFinite("total loss".into()));
        }
        Ok(Evaluation {
            samples,
            breakdown,
            diagnostics,
            selections: Selections { cd, hd, annulus, tpe, normal, orth_count },
        })
    }
}

/// Evaluates the weighted loss of `surface` against `cloud`.
pub fn total_loss(
    surface: &SplineSurface,
    cloud: &PointCloud,
    weights: &LossWeights,
    grid: &SampleGrid,
) -> Result<LossBreakdown> {
    let mut obj = Objective::new(cloud.clone(), *weights, grid.clone())?;
    Ok(obj.evaluate(surface)?.breakdown)
}

#[cfg(test)]
mod tests;

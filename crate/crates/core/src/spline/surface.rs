use crate::error::{Error, Result};
use crate::vec3::Vec3;

use super::knots::{BasisEval, KnotKind, KnotVector};

/// Tensor-product B-spline surface.
///
/// The axial direction (`u`, degree `p`) is open with clamped knots; the
/// circumferential direction (`v`, degree `q`) is periodic for the valve
/// template. Only the free control columns are stored: basis function `j`
/// of the circumferential knot vector acts on free column `j % n_circ_free`,
/// so the first `q` columns are reused after the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSurface {
    axial: KnotVector,
    circ: KnotVector,
    periodic: bool,
    n_axial: usize,
    n_circ_free: usize,
    control: Vec<Vec3>,
}

/// Sparse `dS/dP_ij` weights with wrapped columns folded onto their free
/// alias. Entries are sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivity {
    pub entries: Vec<(usize, usize, f64)>,
}

impl Sensitivity {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.entries.iter().find(|&&(a, b, _)| a == i && b == j).map_or(0.0, |e| e.2)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }
}

impl SplineSurface {
    pub fn new(
        axial: KnotVector,
        circ: KnotVector,
        periodic: bool,
        n_axial: usize,
        n_circ_free: usize,
        control: Vec<Vec3>,
    ) -> Result<Self> {
        let p = axial.degree();
        let q = circ.degree();
        if axial.kind() != KnotKind::Clamped {
            return Err(Error::arg("axial knots must be clamped"));
        }
        if axial.basis_count() != n_axial {
            return Err(Error::arg(format!(
                "axial knots define {} basis functions, grid has {n_axial} rows",
                axial.basis_count()
            )));
        }
        if n_axial < p + 1 {
            return Err(Error::arg(format!("need at least {} axial rows", p + 1)));
        }
        if periodic {
            if circ.kind() != KnotKind::UnclampedUniform {
                return Err(Error::arg("periodic direction needs unclamped uniform knots"));
            }
            if circ.basis_count() != n_circ_free + q {
                return Err(Error::arg(format!(
                    "periodic knots define {} basis functions, expected {} free + {q} wrapped",
                    circ.basis_count(),
                    n_circ_free
                )));
            }
        } else if circ.basis_count() != n_circ_free {
            return Err(Error::arg(format!(
                "circumferential knots define {} basis functions, grid has {n_circ_free} columns",
                circ.basis_count()
            )));
        }
        if n_circ_free < q + 1 {
            return Err(Error::arg(format!("need at least {} circumferential columns", q + 1)));
        }
        if control.len() != n_axial * n_circ_free {
            return Err(Error::arg(format!(
                "control grid has {} points, expected {}",
                control.len(),
                n_axial * n_circ_free
            )));
        }
        if control.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg("non-finite control point"));
        }
        Ok(Self { axial, circ, periodic, n_axial, n_circ_free, control })
    }

    /// Periodic surface on the unit parameter square with uniform knots.
    pub fn periodic(
        degree_axial: usize,
        degree_circ: usize,
        n_axial: usize,
        n_circ_free: usize,
        control: Vec<Vec3>,
    ) -> Result<Self> {
        let axial = KnotVector::uniform(KnotKind::Clamped, n_axial, degree_axial, (0.0, 1.0))?;
        let circ = KnotVector::uniform(KnotKind::UnclampedUniform, n_circ_free + degree_circ, degree_circ, (0.0, 1.0))?;
        Self::new(axial, circ, true, n_axial, n_circ_free, control)
    }

    /// Open patch clamped in both directions on the unit parameter square.
    pub fn open(
        degree_axial: usize,
        degree_circ: usize,
        n_axial: usize,
        n_circ: usize,
        control: Vec<Vec3>,
    ) -> Result<Self> {
        let axial = KnotVector::uniform(KnotKind::Clamped, n_axial, degree_axial, (0.0, 1.0))?;
        let circ = KnotVector::uniform(KnotKind::Clamped, n_circ, degree_circ, (0.0, 1.0))?;
        Self::new(axial, circ, false, n_axial, n_circ, control)
    }

    pub fn degree_axial(&self) -> usize {
        self.axial.degree()
    }

    pub fn degree_circ(&self) -> usize {
        self.circ.degree()
    }

    pub fn knots_axial(&self) -> &KnotVector {
        &self.axial
    }

    pub fn knots_circ(&self) -> &KnotVector {
        &self.circ
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn n_axial(&self) -> usize {
        self.n_axial
    }

    pub fn n_circ_free(&self) -> usize {
        self.n_circ_free
    }

    pub fn control_points(&self) -> &[Vec3] {
        &self.control
    }

    /// Mutable access to the control grid. Knots and degrees stay fixed.
    pub fn control_points_mut(&mut self) -> &mut [Vec3] {
        &mut self.control
    }

    pub fn control(&self, i: usize, j: usize) -> Vec3 {
        self.control[i * self.n_circ_free + j]
    }

    pub fn set_control(&mut self, i: usize, j: usize, p: Vec3) {
        self.control[i * self.n_circ_free + j] = p;
    }

    /// Applies `f` to every control point.
    pub fn map_control(&self, mut f: impl FnMut(Vec3) -> Vec3) -> Self {
        let mut out = self.clone();
        for c in out.control.iter_mut() {
            *c = f(*c);
        }
        out
    }

    /// Free column driven by circumferential basis function `j`.
    #[inline]
    pub fn column_of(&self, j: usize) -> usize {
        if self.periodic {
            j % self.n_circ_free
        } else {
            j
        }
    }

    pub fn domain_axial(&self) -> (f64, f64) {
        self.axial.domain()
    }

    pub fn domain_circ(&self) -> (f64, f64) {
        self.circ.domain()
    }

    /// Length of one circumferential period (the whole window when open).
    pub fn period(&self) -> f64 {
        let (a, b) = self.circ.domain();
        b - a
    }

    /// Wraps `v` into the periodic window; open surfaces only accept the window.
    pub(crate) fn circ_param(&self, v: f64) -> Result<f64> {
        let (lo, hi) = self.circ.domain();
        if self.periodic && v.is_finite() && !(lo..=hi).contains(&v) {
            return Ok(lo + (v - lo).rem_euclid(hi - lo));
        }
        self.circ.check_domain(v)
    }

    pub(crate) fn basis_pair(&self, u: f64, v: f64, order_u: usize, order_v: usize) -> Result<(BasisEval, BasisEval)> {
        let bu = self.axial.eval(u, order_u)?;
        let bv = self.circ.eval(self.circ_param(v)?, order_v)?;
        Ok((bu, bv))
    }

    /// Mixed partials `d^{a+b} S / du^a dv^b` for `a <= order_u`,
    /// `b <= order_v`, indexed `[a][b]`.
    pub fn derivatives(&self, u: f64, v: f64, order_u: usize, order_v: usize) -> Result<Vec<Vec<Vec3>>> {
        let (bu, bv) = self.basis_pair(u, v, order_u, order_v)?;
        let iu0 = bu.first();
        let jv0 = bv.first();
        let mut out = vec![vec![Vec3::ZERO; order_v + 1]; order_u + 1];
        for (a, row_u) in bu.rows.iter().enumerate() {
            for (b, row_v) in bv.rows.iter().enumerate() {
                let mut acc = Vec3::ZERO;
                for (r, &wu) in row_u.iter().enumerate() {
                    let mut line = Vec3::ZERO;
                    for (c, &wv) in row_v.iter().enumerate() {
                        line += self.control(iu0 + r, self.column_of(jv0 + c)) * wv;
                    }
                    acc += line * wu;
                }
                out[a][b] = acc;
            }
        }
        Ok(out)
    }

    /// `S(u, v)`.
    pub fn point(&self, u: f64, v: f64) -> Result<Vec3> {
        Ok(self.derivatives(u, v, 0, 0)?[0][0])
    }

    /// Nonzero products `B_i(u) B_j(v)` before wrapping; `j` indexes the
    /// circumferential basis, not the free column.
    pub fn raw_weights(&self, u: f64, v: f64) -> Result<Vec<(usize, usize, f64)>> {
        let (bu, bv) = self.basis_pair(u, v, 0, 0)?;
        let iu0 = bu.first();
        let jv0 = bv.first();
        let mut out = Vec::with_capacity(bu.rows[0].len() * bv.rows[0].len());
        for (r, &wu) in bu.rows[0].iter().enumerate() {
            for (c, &wv) in bv.rows[0].iter().enumerate() {
                out.push((iu0 + r, jv0 + c, wu * wv));
            }
        }
        Ok(out)
    }

    /// `dS/dP_ij` at `(u, v)`.
    pub fn control_sensitivity(&self, u: f64, v: f64) -> Result<Sensitivity> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, w) in self.raw_weights(u, v)? {
            let col = self.column_of(j);
            match entries.iter_mut().find(|e| e.0 == i && e.1 == col) {
                Some(e) => e.2 += w,
                None => entries.push((i, col, w)),
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        Ok(Sensitivity { entries })
    }
}

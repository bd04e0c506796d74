use crate::error::{Error, Result};

use super::DOMAIN_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnotKind {
    /// End knots repeated `degree + 1` times; interpolatory ends.
    Clamped,
    /// Strictly increasing with constant spacing; used for periodic closure.
    UnclampedUniform,
}

impl KnotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KnotKind::Clamped => "clamped",
            KnotKind::UnclampedUniform => "unclamped",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "clamped" => Some(KnotKind::Clamped),
            "unclamped" | "unclamped-uniform" => Some(KnotKind::UnclampedUniform),
            _ => None,
        }
    }
}

/// Basis functions (and optionally derivatives) that are nonzero at one
/// parameter value. `rows[k][r]` is the k-th derivative of basis
/// `span - degree + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub span: usize,
    pub rows: Vec<Vec<f64>>,
}

impl BasisEval {
    /// Index of the first nonzero basis function.
    pub fn first(&self) -> usize {
        self.span + 1 - self.rows[0].len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    values: Vec<f64>,
    degree: usize,
    kind: KnotKind,
}

impl KnotVector {
    /// Uniform knot vector with `basis_count` functions whose valid domain is
    /// exactly `domain`.
    pub fn uniform(kind: KnotKind, basis_count: usize, degree: usize, domain: (f64, f64)) -> Result<Self> {
        let (a, b) = domain;
        if basis_count < degree + 1 {
            return Err(Error::arg(format!("basis count {basis_count} too small for degree {degree}")));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::arg(format!("invalid knot domain [{a}, {b}]")));
        }
        let segments = (basis_count - degree) as f64;
        let values = match kind {
            KnotKind::Clamped => {
                let mut v = Vec::with_capacity(basis_count + degree + 1);
                v.extend(std::iter::repeat(a).take(degree + 1));
                for k in 1..(basis_count - degree) {
                    v.push(a + (b - a) * k as f64 / segments);
                }
                v.extend(std::iter::repeat(b).take(degree + 1));
                v
            }
            KnotKind::UnclampedUniform => {
                let h = (b - a) / segments;
                (0..basis_count + degree + 1)
                    .map(|k| {
                        let offset = k as i64 - degree as i64;
                        // pin the domain ends exactly
                        if offset == 0 {
                            a
                        } else if offset == (basis_count - degree) as i64 {
                            b
                        } else {
                            a + h * offset as f64
                        }
                    })
                    .collect()
            }
        };
        Ok(Self { values, degree, kind })
    }

    /// Validates an explicit knot sequence against the invariants of `kind`.
    pub fn from_values(values: Vec<f64>, degree: usize, kind: KnotKind) -> Result<Self> {
        if values.len() < 2 * (degree + 1) {
            return Err(Error::arg(format!("{} knots too few for degree {degree}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("non-finite knot value"));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::arg("knot values must be non-decreasing"));
        }
        match kind {
            KnotKind::Clamped => {
                let n = values.len();
                let first = values[0];
                let last = values[n - 1];
                if values[..=degree].iter().any(|&v| v != first) || values[n - degree - 1..].iter().any(|&v| v != last)
                {
                    return Err(Error::arg("clamped knots need degree+1 repeated ends"));
                }
                if first >= last {
                    return Err(Error::arg("empty clamped knot domain"));
                }
            }
            KnotKind::UnclampedUniform => {
                let h = values[1] - values[0];
                let scale = values[values.len() - 1].abs().max(values[0].abs()).max(1.0);
                if h <= 0.0 || values.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * scale) {
                    return Err(Error::arg("unclamped knots must be uniformly spaced"));
                }
            }
        }
        Ok(Self { values, degree, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn kind(&self) -> KnotKind {
        self.kind
    }

    pub fn basis_count(&self) -> usize {
        self.values.len() - self.degree - 1
    }

    /// Valid parameter window `[t_p, t_n]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.values[self.degree], self.values[self.basis_count()])
    }

    /// Clamps parameters within `DOMAIN_TOL` of the window onto it.
    pub(crate) fn check_domain(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if t.is_nan() || t < lo - DOMAIN_TOL || t > hi + DOMAIN_TOL {
            return Err(Error::Domain { value: t, lo, hi });
        }
        Ok(t.clamp(lo, hi))
    }

    /// Index `i` with `t_i <= t < t_{i+1}`; the right end of the domain maps to
    /// the last nonempty span.
    pub fn find_span(&self, t: f64) -> Result<usize> {
        let t = self.check_domain(t)?;
        Ok(self.span_unchecked(t))
    }

    fn span_unchecked(&self, t: f64) -> usize {
        let p = self.degree;
        let n = self.basis_count();
        let k = &self.values;
        if t >= k[n] {
            let mut i = n - 1;
            while i > p && k[i] >= k[i + 1] {
                i -= 1;
            }
            return i;
        }
        let (mut lo, mut hi) = (p, n);
        // invariant: k[lo] <= t < k[hi]
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if t < k[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// The `degree + 1` nonzero basis weights at `t`.
    pub fn basis_values(&self, t: f64) -> Result<BasisEval> {
        self.eval(t, 0)
    }

    /// Basis weights and derivatives up to `order` (1 or 2, at most `degree`).
    pub fn basis_derivatives(&self, t: f64, order: usize) -> Result<BasisEval> {
        if order > self.degree {
            return Err(Error::arg(format!("derivative order {order} exceeds degree {}", self.degree)));
        }
        self.eval(t, order)
    }

    /// Derivatives without the order <= degree restriction; rows above the
    /// degree are identically zero.
    pub(crate) fn eval(&self, t: f64, order: usize) -> Result<BasisEval> {
        let t = self.check_domain(t)?;
        let span = self.span_unchecked(t);
        Ok(BasisEval { span, rows: ders_basis(&self.values, self.degree, span, t, order) })
    }
}

/// Cox–de Boor triangle with derivatives (The NURBS Book, A2.3).
fn ders_basis(knots: &[f64], p: usize, span: usize, t: f64, order: usize) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = vec![vec![0.0; p + 1]; order + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let n = order.min(p);
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=n {
            let mut d = 0.0;
            let rk = r as i64 - k as i64;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as i64 - 1) <= pk as i64 { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as i64) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=n {
        for v in ders[k].iter_mut() {
            *v *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}

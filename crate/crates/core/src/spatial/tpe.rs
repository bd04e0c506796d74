//! Maximum of the tangent-point ratio over ordered sample pairs.
//!
//! The per-pair value is `(|n_k · (s_k - s_l)| / |s_k - s_l|^2)^alpha`.
//! Every pair whose ratio is at least `r` lies in one of the two balls of
//! radius `1 / (2 r)` tangent to the surface at `s_k`, so once a good pair is
//! known only those balls need to be searched.

use crate::vec3::Vec3;

use super::KdTree;

/// Value assigned to pairs of coincident distinct samples (and to anything
/// that would overflow).
pub const TPE_CAP: f64 = 1e100;

/// Relative slack on the search balls; keeps the candidate set a superset of
/// the exact tie set under rounding.
const BALL_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpeMax {
    pub value: f64,
    /// Ordered arg-max pair `(k, l)`; `None` with fewer than two active samples.
    pub pair: Option<(usize, usize)>,
    /// True when the maximum hit [`TPE_CAP`].
    pub capped: bool,
}

impl TpeMax {
    fn empty() -> Self {
        Self { value: 0.0, pair: None, capped: false }
    }
}

/// Ratio `|n·Δ|/|Δ|^2` and value for the ordered pair `(k, l)`.
#[inline]
pub fn tpe_pair_value(sk: Vec3, nk: Vec3, sl: Vec3, alpha: f64) -> (f64, f64) {
    let dx = sk.x - sl.x;
    let dy = sk.y - sl.y;
    let dz = sk.z - sl.z;
    let d2 = dx * dx + dy * dy + dz * dz;
    let dot = nk.x * dx + nk.y * dy + nk.z * dz;
    if d2 == 0.0 {
        return (f64::INFINITY, TPE_CAP);
    }
    let ratio = dot.abs() / d2;
    let value = ratio.powf(alpha);
    if value.is_finite() && value <= TPE_CAP {
        (ratio, value)
    } else {
        (ratio, TPE_CAP)
    }
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    ratio: f64,
    k: usize,
    l: usize,
}

impl Best {
    #[inline]
    fn offer(&mut self, value: f64, ratio: f64, k: usize, l: usize) {
        if value > self.value || (value == self.value && (k, l) < (self.k, self.l)) {
            *self = Best { value, ratio, k, l };
        }
    }

    fn finish(self) -> TpeMax {
        TpeMax { value: self.value, pair: Some((self.k, self.l)), capped: self.value >= TPE_CAP }
    }
}

/// Double loop over all ordered active pairs.
pub fn tpe_max_brute(points: &[Vec3], normals: &[Vec3], active: &[bool], alpha: f64) -> TpeMax {
    let mut best: Option<Best> = None;
    for k in 0..points.len() {
        if !active[k] {
            continue;
        }
        for l in 0..points.len() {
            if l == k || !active[l] {
                continue;
            }
            let (ratio, value) = tpe_pair_value(points[k], normals[k], points[l], alpha);
            match best.as_mut() {
                None => best = Some(Best { value, ratio, k, l }),
                Some(b) => {
                    if value > b.value {
                        *b = Best { value, ratio, k, l };
                    }
                }
            }
        }
    }
    best.map_or_else(TpeMax::empty, Best::finish)
}

/// Same result as [`tpe_max_brute`], searching only the tangent balls.
///
/// `tree` must be built over `points` (all of them; inactive entries are
/// skipped). `hint` is a pair that was the arg-max of a nearby configuration
/// and only affects speed.
pub fn tpe_max(
    points: &[Vec3],
    normals: &[Vec3],
    active: &[bool],
    alpha: f64,
    tree: &KdTree,
    hint: Option<(usize, usize)>,
) -> TpeMax {
    let act: Vec<usize> = (0..points.len()).filter(|&i| active[i]).collect();
    if act.len() < 2 {
        return TpeMax::empty();
    }
    // seed the bound with cheap candidate pairs
    let mut best: Option<Best> = None;
    let offer = |best: &mut Option<Best>, k: usize, l: usize| {
        let (ratio, value) = tpe_pair_value(points[k], normals[k], points[l], alpha);
        match best.as_mut() {
            None => *best = Some(Best { value, ratio, k, l }),
            Some(b) => b.offer(value, ratio, k, l),
        }
    };
    if let Some((k, l)) = hint {
        if k != l && k < points.len() && l < points.len() && active[k] && active[l] {
            offer(&mut best, k, l);
        }
    }
    for w in act.windows(2) {
        offer(&mut best, w[0], w[1]);
        offer(&mut best, w[1], w[0]);
    }
    let mut best = best.expect("at least one active pair");
    if !(best.ratio > 0.0) {
        // no curvature anywhere among the seeds; nothing to prune with
        return tpe_max_brute(points, normals, active, alpha);
    }

    let mut stack = Vec::with_capacity(64);
    for k in tree.order().filter(|&k| active[k]) {
        let sk = points[k];
        let nk = normals[k];
        for side in [1.0, -1.0] {
            let rho = if best.ratio.is_finite() { 0.5 / best.ratio } else { 0.0 };
            let center = sk + nk * (side * rho);
            let r = rho * (1.0 + BALL_SLACK);
            tree.for_each_in_ball_with(&mut stack, center, r * r, |l, sl| {
                if l == k || !active[l] {
                    return;
                }
                let (ratio, value) = tpe_pair_value(sk, nk, sl, alpha);
                best.offer(value, ratio, k, l);
            });
        }
    }
    best.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pair_value_by_hand() {
        let (ratio, v) =
            tpe_pair_value(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0), 4.0);
        assert_eq!(ratio, 0.5);
        assert_eq!(v, 0.0625);
    }

    #[test]
    fn coincident_pair_is_capped() {
        let p = Vec3::new(0.3, 0.2, 0.1);
        let n = Vec3::new(0.0, 0.0, 1.0);
        let pts = [p, p, Vec3::new(1.0, 0.0, 0.0)];
        let nrm = [n, n, n];
        let act = [true; 3];
        let tree = KdTree::build(&pts);
        let m = tpe_max(&pts, &nrm, &act, 4.0, &tree, None);
        assert!(m.capped);
        assert_eq!(m.value, TPE_CAP);
        assert_eq!(m.pair, Some((0, 1)));
        assert_eq!(m, tpe_max_brute(&pts, &nrm, &act, 4.0));
    }

    #[test]
    fn accelerated_matches_brute_on_curved_sheets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..30 {
            let n = 50 + trial * 7;
            let mut pts = Vec::new();
            let mut nrm = Vec::new();
            for _ in 0..n {
                // points on a sphere-ish blob with jittered normals
                let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let z: f64 = rng.gen_range(-1.0..1.0);
                let r = (1.0 - z * z).sqrt();
                let p = Vec3::new(r * th.cos(), r * th.sin(), z) * rng.gen_range(0.8..1.2);
                let q = p + Vec3::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), 0.0);
                pts.push(p);
                nrm.push(q / q.norm());
            }
            let act: Vec<bool> = (0..n).map(|i| i % 5 != 3).collect();
            let tree = KdTree::build(&pts);
            let alpha = [2.0, 4.0, 3.3][trial % 3];
            assert_eq!(tpe_max(&pts, &nrm, &act, alpha, &tree, Some((1, 2))), tpe_max_brute(&pts, &nrm, &act, alpha));
        }
    }

    #[test]
    fn flat_sheet_falls_back() {
        let pts: Vec<Vec3> = (0..30).map(|i| Vec3::new((i % 6) as f64, (i / 6) as f64, 0.0)).collect();
        let nrm = vec![Vec3::new(0.0, 0.0, 1.0); 30];
        let act = vec![true; 30];
        let tree = KdTree::build(&pts);
        let m = tpe_max(&pts, &nrm, &act, 4.0, &tree, None);
        assert_eq!(m.value, 0.0);
        assert_eq!(m, tpe_max_brute(&pts, &nrm, &act, 4.0));
    }
}

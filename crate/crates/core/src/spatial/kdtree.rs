use crate::vec3::{dist_sq, Vec3};

use super::Nearest;

const LEAF_SIZE: usize = 8;
const NO_CHILD: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    start: u32,
    end: u32,
    left: u32,
    right: u32,
}

/// Static 3-D k-d tree over a point set (median split on the widest axis).
#[derive(Debug, Clone)]
pub struct KdTree {
    /// Points in tree order.
    pts: Vec<Vec3>,
    /// Original index of each entry of `pts`.
    ids: Vec<u32>,
    nodes: Vec<Node>,
}

/// Squared distance from `q` to an axis-aligned box. Never exceeds the
/// distance (as computed by [`dist_sq`]) to any point inside the box.
#[inline]
fn box_dist_sq(q: Vec3, lo: Vec3, hi: Vec3) -> f64 {
    #[inline]
    fn gap(q: f64, lo: f64, hi: f64) -> f64 {
        if q < lo {
            lo - q
        } else if q > hi {
            q - hi
        } else {
            0.0
        }
    }
    let dx = gap(q.x, lo.x, hi.x);
    let dy = gap(q.y, lo.y, hi.y);
    let dz = gap(q.z, lo.z, hi.z);
    dx * dx + dy * dy + dz * dz
}

impl KdTree {
    pub fn build(points: &[Vec3]) -> Self {
        let mut ids: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        if !points.is_empty() {
            Self::build_node(points, &mut ids, 0, points.len(), &mut nodes);
        }
        let pts = ids.iter().map(|&i| points[i as usize]).collect();
        Self { pts, ids, nodes }
    }

    fn build_node(points: &[Vec3], ids: &mut [u32], start: usize, end: usize, nodes: &mut Vec<Node>) -> u32 {
        let slice = &ids[start..end];
        let mut lo = points[slice[0] as usize];
        let mut hi = lo;
        for &i in slice {
            let p = points[i as usize];
            lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
        let me = nodes.len() as u32;
        nodes.push(Node { lo, hi, start: start as u32, end: end as u32, left: NO_CHILD, right: NO_CHILD });
        if end - start > LEAF_SIZE {
            let ext = hi - lo;
            let axis = if ext.x >= ext.y && ext.x >= ext.z {
                0
            } else if ext.y >= ext.z {
                1
            } else {
                2
            };
            let mid = (end - start) / 2;
            ids[start..end].select_nth_unstable_by(mid, |&a, &b| {
                let ka = points[a as usize].get(axis);
                let kb = points[b as usize].get(axis);
                ka.total_cmp(&kb).then(a.cmp(&b))
            });
            let left = Self::build_node(points, ids, start, start + mid, nodes);
            let right = Self::build_node(points, ids, start + mid, end, nodes);
            nodes[me as usize].left = left;
            nodes[me as usize].right = right;
        }
        me
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    /// Exact nearest point; ties go to the lowest original index.
    pub fn nearest(&self, q: Vec3) -> Nearest {
        self.nearest_bounded(q, f64::NEG_INFINITY)
    }

    /// Nearest-point search that may stop as soon as some point within
    /// `stop_at` (squared) is found. The result is exact whenever the true
    /// nearest distance exceeds `stop_at`.
    pub fn nearest_bounded(&self, q: Vec3, stop_at: f64) -> Nearest {
        let mut best = Nearest { index: usize::MAX, dist_sq: f64::INFINITY };
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack: Vec<(u32, f64)> = Vec::with_capacity(64);
        stack.push((0, box_dist_sq(q, self.nodes[0].lo, self.nodes[0].hi)));
        while let Some((ni, bd)) = stack.pop() {
            if bd > best.dist_sq {
                continue;
            }
            let node = &self.nodes[ni as usize];
            if node.left == NO_CHILD {
                for k in node.start as usize..node.end as usize {
                    let d = dist_sq(q, self.pts[k]);
                    let id = self.ids[k] as usize;
                    if d < best.dist_sq || (d == best.dist_sq && id < best.index) {
                        best = Nearest { index: id, dist_sq: d };
                    }
                }
                if best.dist_sq <= stop_at {
                    return best;
                }
                continue;
            }
            let l = &self.nodes[node.left as usize];
            let r = &self.nodes[node.right as usize];
            let dl = box_dist_sq(q, l.lo, l.hi);
            let dr = box_dist_sq(q, r.lo, r.hi);
            // push the farther child first so the nearer one is explored next
            if dl <= dr {
                stack.push((node.right, dr));
                stack.push((node.left, dl));
            } else {
                stack.push((node.left, dl));
                stack.push((node.right, dr));
            }
        }
        best
    }

    /// Original indices in tree order; neighbouring entries are close in
    /// space.
    pub fn order(&self) -> impl Iterator<Item = usize> + '_ {
        self.ids.iter().map(|&i| i as usize)
    }

    /// Calls `f(index, point)` for every point within squared radius `r2` of
    /// `center` (inclusive).
    pub fn for_each_in_ball(&self, center: Vec3, r2: f64, f: impl FnMut(usize, Vec3)) {
        self.for_each_in_ball_with(&mut Vec::with_capacity(64), center, r2, f)
    }

    /// [`Self::for_each_in_ball`] with a caller-provided traversal stack.
    pub fn for_each_in_ball_with(&self, stack: &mut Vec<u32>, center: Vec3, r2: f64, mut f: impl FnMut(usize, Vec3)) {
        if self.nodes.is_empty() {
            return;
        }
        stack.clear();
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if box_dist_sq(center, node.lo, node.hi) > r2 {
                continue;
            }
            if node.left == NO_CHILD {
                for k in node.start as usize..node.end as usize {
                    if dist_sq(center, self.pts[k]) <= r2 {
                        f(self.ids[k] as usize, self.pts[k]);
                    }
                }
            } else {
                stack.push(node.right);
                stack.push(node.left);
            }
        }
    }
}

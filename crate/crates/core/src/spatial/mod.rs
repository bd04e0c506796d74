//! Nearest-neighbor machinery shared by the losses and metrics.
//!
//! Every query here is exact: accelerated paths return bit-identical results
//! to the plain double loops, including the tie-break rule (lowest index
//! wins among equal distances).

mod kdtree;
mod tpe;

pub use kdtree::KdTree;
pub use tpe::{tpe_max, tpe_max_brute, tpe_pair_value, TpeMax, TPE_CAP};

use rayon::prelude::*;

use crate::vec3::{dist_sq, Vec3};

/// Below this many query × reference pairings the double loop is used.
pub const BRUTE_FORCE_PAIRS: usize = 256 * 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NnStrategy {
    /// Brute force for small inputs, k-d tree otherwise.
    #[default]
    Auto,
    BruteForce,
    KdTree,
}

impl NnStrategy {
    fn use_tree(self, queries: usize, refs: usize) -> bool {
        match self {
            NnStrategy::Auto => queries.saturating_mul(refs) >= BRUTE_FORCE_PAIRS,
            NnStrategy::BruteForce => false,
            NnStrategy::KdTree => true,
        }
    }
}

/// Nearest reference point of one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub index: usize,
    pub dist_sq: f64,
}

/// Arg-max of the directed nearest distance `max_q min_r |q - r|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxMin {
    pub query: usize,
    pub target: usize,
    pub dist_sq: f64,
}

fn brute_nearest(q: Vec3, refs: &[Vec3]) -> Nearest {
    let mut best = Nearest { index: 0, dist_sq: f64::INFINITY };
    for (i, r) in refs.iter().enumerate() {
        let d = dist_sq(q, *r);
        if d < best.dist_sq {
            best = Nearest { index: i, dist_sq: d };
        }
    }
    best
}

/// Nearest reference for every query. `refs` must be nonempty.
pub fn nearest_all(queries: &[Vec3], refs: &[Vec3], strategy: NnStrategy) -> Vec<Nearest> {
    assert!(!refs.is_empty(), "nearest_all needs reference points");
    if strategy.use_tree(queries.len(), refs.len()) {
        let tree = KdTree::build(refs);
        nearest_all_in(queries, &tree)
    } else {
        queries.par_iter().map(|&q| brute_nearest(q, refs)).collect()
    }
}

/// Nearest reference for every query against a prebuilt tree.
pub fn nearest_all_in(queries: &[Vec3], tree: &KdTree) -> Vec<Nearest> {
    queries.par_iter().map(|&q| tree.nearest(q)).collect()
}

/// `max_q min_r |q - r|^2` with its arg-max pair. Both sets nonempty.
pub fn directed_max_min(queries: &[Vec3], refs: &[Vec3], strategy: NnStrategy) -> MaxMin {
    assert!(!queries.is_empty() && !refs.is_empty());
    if strategy.use_tree(queries.len(), refs.len()) {
        let tree = KdTree::build(refs);
        directed_max_min_in(queries, &tree, None)
    } else {
        let mut best = MaxMin { query: 0, target: 0, dist_sq: f64::NEG_INFINITY };
        for (k, &q) in queries.iter().enumerate() {
            let n = brute_nearest(q, refs);
            if n.dist_sq > best.dist_sq {
                best = MaxMin { query: k, target: n.index, dist_sq: n.dist_sq };
            }
        }
        best
    }
}

/// Tree version of [`directed_max_min`]. `mask`, when given, restricts the
/// queries considered. Queries whose nearest distance cannot exceed the
/// running maximum stop early.
pub fn directed_max_min_in(queries: &[Vec3], tree: &KdTree, mask: Option<&[bool]>) -> MaxMin {
    let mut best = MaxMin { query: 0, target: 0, dist_sq: f64::NEG_INFINITY };
    for (k, &q) in queries.iter().enumerate() {
        if mask.is_some_and(|m| !m[k]) {
            continue;
        }
        let n = tree.nearest_bounded(q, best.dist_sq);
        if n.dist_sq > best.dist_sq {
            best = MaxMin { query: k, target: n.index, dist_sq: n.dist_sq };
        }
    }
    best
}

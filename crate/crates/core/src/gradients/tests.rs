use super::*;
use crate::geometry::tests::cylinder;
use crate::losses::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(seed: u64) -> (SplineSurface, PointCloud, SampleGrid) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let surface = cylinder(1.0, 0.8, 6, 8)
        .map_control(|p| p + Vec3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)));
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for k in 0..80 {
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let z: f64 = rng.gen_range(-0.8..0.0);
        let r = 1.0 + rng.gen_range(-0.15..0.15);
        points.push(Vec3::new(r * t.cos(), r * t.sin(), z));
        labels.push(if k % 8 == 0 { Label::Annulus } else { Label::Unlabeled });
    }
    let cloud = PointCloud::with_labels(points, labels).unwrap();
    let grid = SampleGrid::new(&surface, 9, 20).unwrap();
    (surface, cloud, grid)
}

/// Central differences, skipping coordinates where a min/max selection
/// changes inside the stencil.
fn check_against_fd(surface: &SplineSurface, cloud: &PointCloud, grid: &SampleGrid, w: LossWeights) -> usize {
    let h = 1e-5;
    let mut obj = Objective::new(cloud.clone(), w, grid.clone()).unwrap();
    let (eval, grad) = obj.evaluate_with_gradient(surface).unwrap();
    let key = eval.selection_key();
    let mut fd = Vec::new();
    let mut work = surface.clone();
    for idx in 0..surface.control_points().len() {
        for axis in 0..3 {
            let orig = work.control_points()[idx];
            let mut vals = [0.0; 2];
            let mut same = true;
            for (s, v) in [1.0, -1.0].iter().zip(vals.iter_mut()) {
                let mut p = orig;
                p.set(axis, orig.get(axis) + s * h);
                work.control_points_mut()[idx] = p;
                let e = obj.evaluate(&work).unwrap();
                same &= e.selection_key() == key;
                *v = e.breakdown.total;
            }
            work.control_points_mut()[idx] = orig;
            fd.push(same.then(|| ((vals[0] - vals[1]) / (2.0 * h), grad.values()[idx].get(axis))));
        }
    }
    let scale = fd.iter().flatten().fold(0.0f64, |m, (f, _)| m.max(f.abs()));
    let mut checked = 0;
    for (f, a) in fd.iter().flatten() {
        assert!((a - f).abs() <= 1e-5 * f.abs().max(1e-3 * scale), "analytic {a} vs fd {f} (weights {w:?})");
        checked += 1;
    }
    checked
}

#[test]
fn zero_weights_give_zero_grid() {
    let (s, c, g) = fixture(1);
    let (b, grad) = loss_gradient(&s, &c, &LossWeights::zero(), &g).unwrap();
    assert_eq!(b.total, 0.0);
    assert_eq!(grad, GradientGrid::zeros(6, 8));
    let fd = finite_difference_gradient(&s, &c, &LossWeights::zero(), &g, 1e-5).unwrap();
    assert_eq!(fd.max_abs(), 0.0);
}

#[test]
fn each_term_matches_finite_differences() {
    let (s, c, g) = fixture(2);
    let z = LossWeights::zero();
    let singles = [
        LossWeights { w_cd: 1.0, ..z },
        LossWeights { w_hd: 1.0, ..z },
        LossWeights { w_a: 1.0, ..z },
        LossWeights { w_orth: 1.0, ..z },
        LossWeights { w_tpe: 1.0, ..z },
        LossWeights { w_norm: 1.0, ..z },
    ];
    for w in singles {
        let n = check_against_fd(&s, &c, &g, w);
        assert!(n >= 100, "only {n} coordinates checked for {w:?}");
    }
}

#[test]
fn all_terms_match_finite_differences() {
    for seed in [3, 4] {
        let (s, c, g) = fixture(seed);
        let w = LossWeights { w_a: 1.0, ..LossWeights::validation() };
        assert!(check_against_fd(&s, &c, &g, w) >= 100);
    }
}

#[test]
fn tpe_with_boundary_included() {
    let (s, c, g) = fixture(5);
    let w = LossWeights { w_tpe: 1.0, tpe_skip_boundary: false, ..LossWeights::zero() };
    check_against_fd(&s, &c, &g, w);
}

#[test]
fn translation_nullspace() {
    let (s, c, g) = fixture(6);
    let w = LossWeights { w_orth: 5.0, w_tpe: 0.1, w_norm: 2.0, ..LossWeights::zero() };
    let (_, grad) = loss_gradient(&s, &c, &w, &g).unwrap();
    assert!(grad.max_abs() > 1e-3);
    let sum = grad.sum();
    assert!(sum.norm() <= 1e-9 * grad.max_abs().max(1.0), "{sum:?}");
}

#[test]
fn library_fd_agrees() {
    let (s, c, g) = fixture(7);
    let w = LossWeights { w_cd: 1.0, ..LossWeights::zero() };
    let (_, grad) = loss_gradient(&s, &c, &w, &g).unwrap();
    let fd = finite_difference_gradient(&s, &c, &w, &g, 1e-5).unwrap();
    for (a, f) in grad.values().iter().zip(fd.values()) {
        assert!((*a - *f).norm() <= 1e-6 * grad.max_abs());
    }
    assert!(finite_difference_gradient(&s, &c, &w, &g, 1e-2).is_err());
    assert!(finite_difference_gradient(&s, &c, &w, &g, 1e-9).is_err());
}

#[test]
fn surface_is_untouched() {
    let (s, c, g) = fixture(8);
    let before = s.clone();
    loss_gradient(&s, &c, &LossWeights::validation(), &g).unwrap();
    assert_eq!(s, before);
}

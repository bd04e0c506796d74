use super::*;
use crate::geometry::tests::cylinder;
use crate::geometry::SampleGrid;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pts(v: &[[f64; 3]]) -> Vec<Vec3> {
    v.iter().map(|a| Vec3::from(*a)).collect()
}

fn flat_samples(points: Vec<Vec3>) -> SurfaceSamples {
    let n = points.len();
    SurfaceSamples::from_points_normals(points, vec![Vec3::new(0.0, 0.0, 1.0); n])
}

fn tangent_samples(pairs: &[(Vec3, Vec3)]) -> SurfaceSamples {
    let mut s = flat_samples(vec![Vec3::ZERO; pairs.len()]);
    s.tangents_u = pairs.iter().map(|p| p.0).collect();
    s.tangents_v = pairs.iter().map(|p| p.1).collect();
    s
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
    (0..n).map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn oracle_min_sq(q: Vec3, refs: &[Vec3]) -> f64 {
    refs.iter().map(|r| (q - *r).norm_squared()).fold(f64::INFINITY, f64::min)
}

fn oracle_mean_min_sq(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().map(|q| oracle_min_sq(*q, b)).sum::<f64>() / a.len() as f64
}

fn oracle_max_min(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().map(|q| oracle_min_sq(*q, b)).fold(0.0, f64::max).sqrt()
}

fn wavy_surface(seed: u64) -> SplineSurface {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = cylinder(1.0, 0.8, 6, 8);
    base.map_control(|p| p + Vec3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)))
}

#[test]
fn chamfer_examples() {
    let s = flat_samples(pts(&[[0.0, 0.0, 0.0], [3.0, 0.0, 0.0], [1.0, 1.0, 0.0]]));
    let inside = PointCloud::new(pts(&[[3.0, 0.0, 0.0], [1.0, 1.0, 0.0]])).unwrap();
    assert_eq!(chamfer_one_sided(&s, &inside).unwrap(), 0.0);
    let s = flat_samples(pts(&[[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]]));
    let one = PointCloud::new(pts(&[[1.0, 0.0, 0.0]])).unwrap();
    assert_eq!(chamfer_one_sided(&s, &one).unwrap(), 1.0);
    assert!(chamfer_one_sided(&flat_samples(vec![]), &one).is_err());
}

#[test]
fn chamfer_symmetric_examples() {
    let a = pts(&[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]);
    assert_eq!(chamfer_symmetric(&a, &a).unwrap(), 0.0);
    let b = pts(&[[0.0, 0.0, 2.0]]);
    assert_eq!(chamfer_symmetric(&a[..1], &b).unwrap(), 8.0);
    assert!(chamfer_symmetric(&[], &b).is_err());
}

#[test]
fn hausdorff_examples() {
    let a = pts(&[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]);
    let cloud = PointCloud::new(a.clone()).unwrap();
    assert_eq!(hausdorff(&flat_samples(a), &cloud).unwrap(), 0.0);
    let cloud = PointCloud::new(pts(&[[3.0, 4.0, 0.0]])).unwrap();
    assert_eq!(hausdorff(&flat_samples(pts(&[[0.0, 0.0, 0.0]])), &cloud).unwrap(), 5.0);
}

#[test]
fn accelerated_terms_match_double_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let n = rng.gen_range(1..300);
        let m = rng.gen_range(1..300);
        let cloud_pts = random_points(&mut rng, n);
        let sample_pts = random_points(&mut rng, m);
        let cloud = PointCloud::new(cloud_pts.clone()).unwrap();
        let s = flat_samples(sample_pts.clone());
        assert_eq!(chamfer_one_sided(&s, &cloud).unwrap(), oracle_mean_min_sq(&cloud_pts, &sample_pts));
        assert_eq!(
            chamfer_symmetric(&cloud_pts, &sample_pts).unwrap(),
            oracle_mean_min_sq(&cloud_pts, &sample_pts) + oracle_mean_min_sq(&sample_pts, &cloud_pts)
        );
        assert_eq!(
            hausdorff(&s, &cloud).unwrap(),
            oracle_max_min(&cloud_pts, &sample_pts).max(oracle_max_min(&sample_pts, &cloud_pts))
        );
    }
}

#[test]
fn annulus_examples() {
    let mut s = flat_samples(pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [5.0, 5.0, 5.0]]));
    s.boundary = vec![true, true, false];
    let unlabeled = PointCloud::new(pts(&[[9.0, 9.0, 9.0]])).unwrap();
    assert_eq!(annulus_loss(&s, &unlabeled).unwrap(), 0.0);

    let labeled = PointCloud::with_labels(
        pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [7.0, 0.0, 0.0]]),
        vec![Label::Annulus, Label::Annulus, Label::Leaflet(Leaflet::Anterior)],
    )
    .unwrap();
    assert_eq!(annulus_loss(&s, &labeled).unwrap(), 0.0);

    let shifted =
        PointCloud::with_labels(pts(&[[0.0, 0.5, 0.0], [3.0, 0.0, 0.0]]), vec![Label::Annulus, Label::Annulus])
            .unwrap();
    let edge = pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
    let expect =
        oracle_mean_min_sq(&edge, &shifted.annulus_points()) + oracle_mean_min_sq(&shifted.annulus_points(), &edge);
    assert_eq!(annulus_loss(&s, &shifted).unwrap(), expect);
    assert_eq!(annulus_loss(&s, &shifted).unwrap(), chamfer_symmetric(&edge, &shifted.annulus_points()).unwrap());
}

#[test]
fn orthogonality_examples() {
    let x = Vec3::new(1.0, 0.0, 0.0);
    let y = Vec3::new(0.0, 2.0, 0.0);
    assert_eq!(orthogonality_energy(&tangent_samples(&[(x, y), (y, x)])).unwrap(), 0.0);
    let d = Vec3::new(1.0, 1.0, 0.0);
    let e = orthogonality_energy(&tangent_samples(&[(x, d), (d, y)])).unwrap();
    assert!((e - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    let sixty = Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0);
    let e = orthogonality_energy(&tangent_samples(&[(x, y), (x, sixty)])).unwrap();
    assert!((e - 0.25).abs() < 1e-12);

    let mut s = tangent_samples(&[(x, y), (x, d)]);
    s.valid[1] = false;
    assert_eq!(orthogonality_energy(&s).unwrap(), 0.0);
    s.valid[0] = false;
    assert!(matches!(orthogonality_energy(&s), Err(Error::AllDegenerate { .. })));
}

#[test]
fn tangent_point_examples() {
    let flat: Vec<Vec3> = (0..25).map(|i| Vec3::new((i % 5) as f64, (i / 5) as f64, 0.0)).collect();
    assert_eq!(tangent_point_energy(&flat_samples(flat), 4.0).unwrap(), 0.0);

    let s = flat_samples(pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 1.0]]));
    // the reverse pair has the same ratio here
    assert_eq!(tangent_point_energy(&s, 4.0).unwrap(), 0.0625);

    let mut sheets = Vec::new();
    for z in [0.0, 0.5] {
        for i in 0..4 {
            for j in 0..4 {
                sheets.push(Vec3::new(i as f64, j as f64, z));
            }
        }
    }
    let e = tangent_point_energy(&flat_samples(sheets), 4.0).unwrap();
    assert!((e - 16.0).abs() < 1e-12, "{e}");
}

#[test]
fn tangent_point_skips_boundary_row() {
    let mut s = flat_samples(pts(&[[0.0, 0.0, 0.0], [0.0, 0.0, 0.5], [5.0, 0.0, 0.5]]));
    s.boundary = vec![true, false, false];
    assert_eq!(tangent_point_energy(&s, 4.0).unwrap(), 0.0);
}

#[test]
fn normal_deviation_examples() {
    let up = Vec3::new(0.0, 0.0, 1.0);
    let side = Vec3::new(1.0, 0.0, 0.0);
    let s = SurfaceSamples::from_points_normals(vec![Vec3::ZERO; 3], vec![up; 3]);
    assert_eq!(normal_deviation_energy(&s).unwrap(), 0.0);
    let s = SurfaceSamples::from_points_normals(vec![Vec3::ZERO; 2], vec![up, side]);
    assert_eq!(normal_deviation_energy(&s).unwrap(), 0.5);
    let s = SurfaceSamples::from_points_normals(vec![Vec3::ZERO; 4], vec![up, up, side, side]);
    assert_eq!(normal_deviation_energy(&s).unwrap(), 0.5);
}

fn surface_and_cloud() -> (SplineSurface, PointCloud, SampleGrid) {
    let surface = wavy_surface(1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut points: Vec<Vec3> = random_points(&mut rng, 120).into_iter().map(|p| p * 0.9).collect();
    let mut labels = vec![Label::Unlabeled; points.len()];
    for k in 0..12 {
        let t = k as f64 / 12.0 * std::f64::consts::TAU;
        points.push(Vec3::new(t.cos(), t.sin(), 0.02));
        labels.push(Label::Annulus);
    }
    let cloud = PointCloud::with_labels(points, labels).unwrap();
    let grid = SampleGrid::new(&surface, 10, 24).unwrap();
    (surface, cloud, grid)
}

#[test]
fn total_loss_recombination() {
    let (surface, cloud, grid) = surface_and_cloud();
    let zero = total_loss(&surface, &cloud, &LossWeights::zero(), &grid).unwrap();
    assert_eq!(zero.total, 0.0);

    let cd_only = LossWeights { w_cd: 1.0, ..LossWeights::zero() };
    let samples = grid.evaluate(&surface).unwrap();
    let b = total_loss(&surface, &cloud, &cd_only, &grid).unwrap();
    assert_eq!(b.total, chamfer_one_sided(&samples, &cloud).unwrap());

    let w = LossWeights::validation();
    let b = total_loss(&surface, &cloud, &w, &grid).unwrap();
    let t = b.terms();
    let recombined: f64 = w.as_array().iter().zip(t).map(|(w, t)| w * t).sum();
    assert!((b.total - recombined).abs() <= 1e-12 * b.total.abs().max(1.0));
    assert!(t.iter().all(|x| *x >= 0.0));
    assert_eq!(b.d_hd, hausdorff(&samples, &cloud).unwrap());
    assert_eq!(b.d_a, annulus_loss(&samples, &cloud).unwrap());
    assert_eq!(b.r_orth, orthogonality_energy(&samples).unwrap());
    assert_eq!(b.r_tpe, tangent_point_energy(&samples, 4.0).unwrap());
    assert_eq!(b.r_norm, normal_deviation_energy(&samples).unwrap());
}

#[test]
fn weights_validation() {
    assert!(LossWeights::validation().validate().is_ok());
    assert!(LossWeights::patient().validate().is_ok());
    let bad = LossWeights { w_hd: -1.0, ..LossWeights::zero() };
    assert!(bad.validate().is_err());
    let bad = LossWeights { tpe_alpha: 0.0, ..LossWeights::zero() };
    assert!(bad.validate().is_err());
}

#[test]
fn strategies_agree_exactly() {
    let (surface, cloud, _) = surface_and_cloud();
    let grid = SampleGrid::new(&surface, 20, 40).unwrap();
    let w = LossWeights::patient();
    let mut brute = Objective::new(cloud.clone(), w, grid.clone()).unwrap().with_strategy(NnStrategy::BruteForce);
    let mut tree = Objective::new(cloud, w, grid).unwrap().with_strategy(NnStrategy::KdTree);
    let a = brute.evaluate(&surface).unwrap();
    let b = tree.evaluate(&surface).unwrap();
    assert_eq!(a.breakdown, b.breakdown);
    assert_eq!(a.selections.cd, b.selections.cd);
    assert_eq!(a.selections.hd, b.selections.hd);
    assert_eq!(a.selections.tpe, b.selections.tpe);
}

#[test]
fn rigid_motion_invariance() {
    let (surface, cloud, grid) = surface_and_cloud();
    let w = LossWeights::patient();
    let before = total_loss(&surface, &cloud, &w, &grid).unwrap();
    // rotation about the valve axis plus a translation
    let (s, c) = 0.7f64.sin_cos();
    let motion = |p: Vec3| Vec3::new(c * p.x - s * p.y + 3.0, s * p.x + c * p.y - 1.0, p.z + 2.5);
    let after = total_loss(&surface.map_control(motion), &cloud.map_points(motion).unwrap(), &w, &grid).unwrap();
    for (a, b) in before.terms().iter().zip(after.terms()) {
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12), "{a} vs {b}");
    }
}

#[test]
fn one_sided_ignores_unmatched_samples() {
    let sample_pts = pts(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [4.0, 4.0, 0.0]]);
    let cloud = PointCloud::new(pts(&[[0.1, 0.0, 0.0], [0.9, 0.1, 0.0]])).unwrap();
    let a = chamfer_one_sided(&flat_samples(sample_pts.clone()), &cloud).unwrap();
    let mut moved = sample_pts;
    moved[2] = Vec3::new(40.0, -7.0, 3.0);
    assert_eq!(chamfer_one_sided(&flat_samples(moved), &cloud).unwrap(), a);
}

proptest! {
    #[test]
    fn terms_nonnegative(seed in 0u64..1000) {
        let surface = wavy_surface(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let cloud = PointCloud::new(random_points(&mut rng, 40)).unwrap();
        let grid = SampleGrid::new(&surface, 6, 12).unwrap();
        let b = total_loss(&surface, &cloud, &LossWeights::validation(), &grid).unwrap();
        prop_assert!(b.terms().iter().all(|t| *t >= 0.0));
        prop_assert!(b.r_orth <= 1.0);
        let hd_floor = oracle_max_min(cloud.points(), &grid.evaluate(&surface).unwrap().points);
        prop_assert!(b.d_hd >= hd_floor);
    }
}

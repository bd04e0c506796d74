use super::*;
use crate::losses::{total_loss, Label, LossWeights};

fn small_template() -> SplineSurface {
    make_template(&TemplateSpec { n_circ_free: 12, ..TemplateSpec::default() }).unwrap()
}

fn samples_cloud(surface: &SplineSurface) -> PointCloud {
    let grid = SampleGrid::new(surface, ALIGN_SAMPLES.0, ALIGN_SAMPLES.1).unwrap();
    PointCloud::new(grid.evaluate(surface).unwrap().points).unwrap()
}

fn assert_identity(t: &Similarity, tol: f64) {
    let id = Similarity::identity();
    assert!((t.scale - 1.0).abs() < tol);
    for i in 0..3 {
        for j in 0..3 {
            assert!((t.rotation[i][j] - id.rotation[i][j]).abs() < tol, "{:?}", t.rotation);
        }
    }
    assert!(t.translation().norm() < tol);
}

#[test]
fn prealign_onto_own_samples_is_identity() {
    let s = small_template();
    let t = prealign_transform(&s, &samples_cloud(&s)).unwrap();
    assert_identity(&t, 1e-9);
}

#[test]
fn prealign_recovers_translation() {
    let s = small_template();
    let shift = Vec3::new(5.0, -2.0, 3.0);
    let cloud = samples_cloud(&s).map_points(|p| p + shift).unwrap();
    let t = prealign_transform(&s, &cloud).unwrap();
    assert!((t.translation() - shift).norm() < 1e-9);
    assert!((t.scale - 1.0).abs() < 1e-9);
}

#[test]
fn prealign_recovers_scale() {
    let s = small_template();
    let cloud = samples_cloud(&s);
    let c = cloud.centroid();
    let scaled = cloud.map_points(|p| c + (p - c) * 2.0).unwrap();
    let t = prealign_transform(&s, &scaled).unwrap();
    assert!((t.scale - 2.0).abs() < 1e-6);
}

#[test]
fn prealign_recovers_tilt_and_matches_centroid() {
    let s = small_template();
    let (sn, cs) = 0.4f64.sin_cos();
    let tilt = |p: Vec3| Vec3::new(p.x, cs * p.y - sn * p.z, sn * p.y + cs * p.z) * 3.0 + Vec3::new(1.0, 2.0, 3.0);
    let target = s.map_control(tilt);
    let cloud = samples_cloud(&target);
    let aligned = affine_prealign(&s, &cloud).unwrap();
    let grid = SampleGrid::new(&aligned, ALIGN_SAMPLES.0, ALIGN_SAMPLES.1).unwrap();
    let pts = grid.evaluate(&aligned).unwrap().points;
    assert!((centroid(&pts) - cloud.centroid()).norm() < 1e-9);
    // the template is rotationally symmetric, so tilting back lands on the target
    for (a, b) in aligned.control_points().iter().zip(target.control_points()) {
        assert!((*a - *b).norm() < 1e-6 * 3.0 + 0.2, "{a:?} {b:?}");
    }
    let axis = |surf: &SplineSurface| {
        plane_normal(&SampleGrid::new(surf, 10, 24).unwrap().evaluate(surf).unwrap().points).unwrap()
    };
    assert!(axis(&aligned).dot(axis(&target)).abs() > 1.0 - 1e-9);
}

#[test]
fn prealign_is_a_similarity() {
    let s = small_template();
    let cloud = PointCloud::new(vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(4.0, 1.0, 0.5),
        Vec3::new(1.0, 3.0, -0.5),
        Vec3::new(-2.0, 0.5, 1.0),
        Vec3::new(0.5, -3.0, 0.2),
    ])
    .unwrap();
    let a = affine_prealign(&s, &cloud).unwrap();
    let p0 = s.control_points();
    let p1 = a.control_points();
    let ratio = (p1[1] - p1[0]).norm() / (p0[1] - p0[0]).norm();
    for i in 0..p0.len() {
        for j in (i + 1)..p0.len().min(i + 10) {
            let r = (p1[j] - p1[i]).norm() / (p0[j] - p0[i]).norm();
            assert!((r - ratio).abs() < 1e-9 * ratio);
        }
    }
}

#[test]
fn prealign_rejects_coincident_cloud() {
    let s = small_template();
    let cloud = PointCloud::new(vec![Vec3::new(1.0, 1.0, 1.0); 5]).unwrap();
    assert!(matches!(affine_prealign(&s, &cloud), Err(Error::Alignment(_))));
}

#[test]
fn prealign_uses_annulus_labels() {
    let s = small_template();
    let target = s.map_control(|p| p * 2.0 + Vec3::new(0.0, 0.0, 4.0));
    let grid = SampleGrid::new(&target, 10, 24).unwrap();
    let samples = grid.evaluate(&target).unwrap();
    let labels = samples.boundary.iter().map(|b| if *b { Label::Annulus } else { Label::Unlabeled }).collect();
    let cloud = PointCloud::with_labels(samples.points.clone(), labels).unwrap();
    let t = prealign_transform(&s, &cloud).unwrap();
    assert!((t.rotation[2][2] - 1.0).abs() < 1e-9);
}

fn quick_config() -> FitConfig {
    FitConfig { t_max: 20, samples_u: 10, samples_v: 24, ..FitConfig::default() }
}

fn frame_cloud(surface: &SplineSurface, scale: f64) -> PointCloud {
    let grid = SampleGrid::new(surface, 7, 30).unwrap();
    PointCloud::new(grid.evaluate(surface).unwrap().points.into_iter().map(|p| p * scale).collect()).unwrap()
}

#[test]
fn single_frame_sequence_equals_direct_fit() {
    let t = small_template();
    let cloud = frame_cloud(&t, 1.2);
    let frames = FrameSequence::new(vec![("f1".into(), cloud.clone())]).unwrap();
    let seq = fit_sequence(&t, &frames, &quick_config(), Prealign::FirstFrame).unwrap();
    let direct = fit_single(&affine_prealign(&t, &cloud).unwrap(), &cloud, &quick_config()).unwrap();
    assert_eq!(seq.len(), 1);
    assert_eq!(seq[0].result.surface, direct.surface);
    assert_eq!(seq[0].result.history, direct.history);
}

#[test]
fn warm_start_chain() {
    let t = small_template();
    let cloud = frame_cloud(&t, 1.1);
    let frames = FrameSequence::new(vec![("a".into(), cloud.clone()), ("b".into(), cloud.clone())]).unwrap();
    let cfg = quick_config();
    let seq = fit_sequence(&t, &frames, &cfg, Prealign::FirstFrame).unwrap();
    assert_eq!(seq[1].initial, seq[0].result.surface);
    let grid = SampleGrid::new(&t, cfg.samples_u, cfg.samples_v).unwrap();
    let start2 = total_loss(&seq[1].initial, &cloud, &cfg.weights, &grid).unwrap().total;
    let end1 = seq[0].result.final_loss().unwrap().total;
    assert!(start2 <= end1 + 1e-9);
    assert_eq!(seq[1].result.history[0].breakdown.total, start2);
}

#[test]
fn failure_keeps_completed_frames() {
    let t = small_template();
    let good = frame_cloud(&t, 1.0);
    let bad = PointCloud::new(vec![Vec3::new(2.0, 2.0, 2.0); 4]).unwrap();
    let frames = FrameSequence::new(vec![("ok".into(), good), ("bad".into(), bad)]).unwrap();
    let err = fit_sequence(&t, &frames, &quick_config(), Prealign::EveryFrame).unwrap_err();
    assert_eq!(err.completed.len(), 1);
    assert_eq!(err.label, "bad");
    assert!(matches!(err.error, Error::Alignment(_)));
}

#[test]
fn template_ignores_seeds() {
    assert_eq!(small_template(), small_template());
    let _ = LossWeights::validation();
}

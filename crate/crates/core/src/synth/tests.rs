use super::*;
use crate::geometry::SampleGrid;
use crate::metrics::min_non_neighbor_distance;

fn stage(closure: f64) -> SynthStage {
    SynthStage { closure, seed: 9, ..SynthStage::default() }
}

fn edge_mean_radius(s: &SplineSurface) -> f64 {
    (0..200)
        .map(|k| {
            let p = s.point(1.0, k as f64 / 200.0).unwrap();
            (p.x * p.x + p.y * p.y).sqrt()
        })
        .sum::<f64>()
        / 200.0
}

#[test]
fn closure_zero_is_template() {
    let st = stage(0.0);
    assert_eq!(synth_valve_surface(&st).unwrap(), make_template(&st.base).unwrap());
}

#[test]
fn closure_shrinks_free_edge() {
    let mut prev = f64::INFINITY;
    for c in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
        let r = edge_mean_radius(&synth_valve_surface(&stage(c)).unwrap());
        assert!(r < prev, "closure {c}: {r} !< {prev}");
        prev = r;
    }
}

#[test]
fn deterministic_per_seed() {
    let a = synth_valve_surface(&stage(0.6)).unwrap();
    assert_eq!(a, synth_valve_surface(&stage(0.6)).unwrap());
    let other = SynthStage { seed: 10, ..stage(0.6) };
    assert_ne!(a, synth_valve_surface(&other).unwrap());
}

#[test]
fn synthetic_surfaces_keep_clearance() {
    for c in [0.0, 0.3, 0.5, 0.7, 0.9, 1.0] {
        let s = synth_valve_surface(&stage(c)).unwrap();
        let samples = SampleGrid::new(&s, 20, 60).unwrap().evaluate(&s).unwrap();
        assert!(min_non_neighbor_distance(&samples, 4).0 > 0.0);
    }
    let s = synth_valve_surface(&SynthStage::pinch(TemplateSpec::default(), 1)).unwrap();
    let samples = SampleGrid::new(&s, 20, 60).unwrap().evaluate(&s).unwrap();
    assert!(min_non_neighbor_distance(&samples, 4).0 > 0.0);
}

#[test]
fn invalid_stage() {
    assert!(synth_valve_surface(&stage(1.5)).is_err());
    assert!(synth_valve_surface(&SynthStage { amplitude: -1.0, ..stage(0.5) }).is_err());
}

fn min_pair_distance(p: &[Vec3]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            m = m.min((p[i] - p[j]).norm());
        }
    }
    m
}

fn mean_nn_spacing(p: &[Vec3]) -> f64 {
    p.iter()
        .enumerate()
        .map(|(i, a)| {
            p.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, b)| (*a - *b).norm()).fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / p.len() as f64
}

#[test]
fn poisson_count_and_separation() {
    let s = synth_valve_surface(&stage(0.6)).unwrap();
    let a = sample_poisson_disk(&s, 1500, 1).unwrap();
    let n = a.cloud.len();
    assert!((1350..=1650).contains(&n), "{n}");
    assert!(min_pair_distance(a.cloud.points()) >= a.radius);

    let b = sample_poisson_disk(&s, 1500, 2).unwrap();
    assert_ne!(a.cloud.points(), b.cloud.points());
    let (ma, mb) = (mean_nn_spacing(a.cloud.points()), mean_nn_spacing(b.cloud.points()));
    assert!((ma - mb).abs() <= 0.15 * ma.max(mb));
}

#[test]
fn poisson_points_lie_on_surface() {
    let s = make_template(&TemplateSpec::default()).unwrap();
    let c = sample_poisson_disk(&s, 200, 3).unwrap();
    for p in c.cloud.points() {
        // template radius lies between the tapered edge and the annulus
        let r = (p.x * p.x + p.y * p.y).sqrt();
        assert!(r <= 1.0 + 1e-3 && r >= 0.8 && p.z <= 1e-12 && p.z >= -0.8 - 1e-9);
    }
}

#[test]
fn poisson_single_point() {
    let s = make_template(&TemplateSpec::default()).unwrap();
    let c = sample_poisson_disk(&s, 1, 4).unwrap();
    assert_eq!(c.cloud.len(), 1);
    assert!(sample_poisson_disk(&s, 0, 4).is_err());
}

#[test]
fn noise_statistics() {
    let pts: Vec<Vec3> = (0..3000).map(|k| Vec3::new(k as f64, 0.0, 1.0)).collect();
    let clean = PointCloud::new(pts).unwrap();
    assert_eq!(add_gaussian_noise(&clean, 0.0, 1).unwrap(), clean);
    assert!(add_gaussian_noise(&clean, -0.1, 1).is_err());
    let sd = 0.05;
    let noisy = add_gaussian_noise(&clean, sd, 7).unwrap();
    let n = clean.len() as f64;
    for axis in 0..3 {
        let d: Vec<f64> = noisy.points().iter().zip(clean.points()).map(|(a, b)| a.get(axis) - b.get(axis)).collect();
        let mean = d.iter().sum::<f64>() / n;
        let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 3.0 * sd / n.sqrt());
        assert!((var.sqrt() - sd).abs() <= 0.05 * sd);
    }
    assert_eq!(noisy, add_gaussian_noise(&clean, sd, 7).unwrap());
}

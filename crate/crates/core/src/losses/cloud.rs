use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leaflet {
    Septal,
    Anterior,
    Posterior,
}

/// Per-point tag of a cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Label {
    Annulus,
    Leaflet(Leaflet),
    #[default]
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Annulus => "annulus",
            Label::Leaflet(Leaflet::Septal) => "SL",
            Label::Leaflet(Leaflet::Anterior) => "AL",
            Label::Leaflet(Leaflet::Posterior) => "PL",
            Label::Unlabeled => "unlabeled",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "annulus" | "A" => Ok(Label::Annulus),
            "SL" => Ok(Label::Leaflet(Leaflet::Septal)),
            "AL" => Ok(Label::Leaflet(Leaflet::Anterior)),
            "PL" => Ok(Label::Leaflet(Leaflet::Posterior)),
            "unlabeled" | "" => Ok(Label::Unlabeled),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

/// Target points, optionally labeled.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec3>,
    labels: Option<Vec<Label>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        Self::build(points, None)
    }

    pub fn with_labels(points: Vec<Vec3>, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::arg(format!("{} labels for {} points", labels.len(), points.len())));
        }
        Self::build(points, Some(labels))
    }

    fn build(points: Vec<Vec3>, labels: Option<Vec<Label>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::arg("point cloud is empty"));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("cloud point {i}")));
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels.as_ref().map_or(Label::Unlabeled, |l| l[i])
    }

    /// The annulus-tagged subset (empty when unlabeled).
    pub fn annulus_points(&self) -> Vec<Vec3> {
        match &self.labels {
            None => Vec::new(),
            Some(labels) => {
                self.points.iter().zip(labels).filter(|(_, l)| **l == Label::Annulus).map(|(p, _)| *p).collect()
            }
        }
    }

    /// Applies `f` to every point, keeping labels.
    pub fn map_points(&self, mut f: impl FnMut(Vec3) -> Vec3) -> Result<Self> {
        Self::build(self.points.iter().map(|p| f(*p)).collect(), self.labels.clone())
    }

    pub fn centroid(&self) -> Vec3 {
        let sum = self.points.iter().fold(Vec3::ZERO, |acc, p| acc + *p);
        sum / self.points.len() as f64
    }

    /// Root-mean-square distance to the centroid.
    pub fn rms_radius(&self) -> f64 {
        let c = self.centroid();
        let s: f64 = self.points.iter().map(|p| (*p - c).norm_squared()).sum();
        (s / self.points.len() as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_nan() {
        assert!(PointCloud::new(vec![]).is_err());
        assert!(PointCloud::new(vec![Vec3::new(f64::NAN, 0.0, 0.0)]).is_err());
        assert!(PointCloud::with_labels(vec![Vec3::ZERO], vec![]).is_err());
    }

    #[test]
    fn annulus_subset() {
        let pts = vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        let labels = vec![Label::Annulus, Label::Leaflet(Leaflet::Septal), Label::Annulus];
        let c = PointCloud::with_labels(pts, labels).unwrap();
        assert_eq!(c.annulus_points(), vec![Vec3::ZERO, Vec3::new(2.0, 0.0, 0.0)]);
        assert!(PointCloud::new(vec![Vec3::ZERO]).unwrap().annulus_points().is_empty());
    }

    #[test]
    fn label_strings_round_trip() {
        for l in [
            Label::Annulus,
            Label::Leaflet(Leaflet::Septal),
            Label::Leaflet(Leaflet::Anterior),
            Label::Leaflet(Leaflet::Posterior),
            Label::Unlabeled,
        ] {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
        }
        assert!("XX".parse::<Label>().is_err());
    }
}

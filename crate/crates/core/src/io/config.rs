use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::losses::LossWeights;
use crate::optim::{EarlyStop, FitConfig, OptimizerKind};
use crate::pipeline::{Prealign, TemplateSpec};

/// Flat key-value run configuration (TOML). Every key is optional; command
/// line flags override file values.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub w_cd: Option<f64>,
    pub w_hd: Option<f64>,
    pub w_a: Option<f64>,
    pub w_orth: Option<f64>,
    pub w_tpe: Option<f64>,
    pub w_norm: Option<f64>,
    pub tpe_alpha: Option<f64>,
    pub tpe_skip_boundary: Option<bool>,
    /// `validation` or `patient`; explicit weights override the preset.
    pub weights: Option<String>,

    pub step: Option<f64>,
    pub t_max: Option<usize>,
    pub samples_u: Option<usize>,
    pub samples_v: Option<usize>,
    pub record_every: Option<usize>,
    pub optimizer: Option<OptimizerKind>,
    pub seed: Option<u64>,
    pub early_stop_patience: Option<usize>,
    pub early_stop_tol: Option<f64>,
    pub prealign: Option<Prealign>,

    pub radius: Option<f64>,
    pub height: Option<f64>,
    pub leaflets: Option<usize>,
    pub degree_axial: Option<usize>,
    pub degree_circ: Option<usize>,
    pub n_axial: Option<usize>,
    pub n_circ_free: Option<usize>,
    pub scallop_depth: Option<f64>,
    pub taper: Option<f64>,

    pub cloud: Option<PathBuf>,
    pub template: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1).unwrap_or(0);
            Error::Parse { origin: origin.to_string(), line, message: e.message().to_string() }
        })
    }

    /// Loads a config; relative paths inside it resolve against its folder.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::parse(&super::read_text(path)?, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.cloud, &mut cfg.template, &mut cfg.manifest, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        for p in [&cfg.cloud, &cfg.template, &cfg.manifest].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::arg(format!("{}: referenced file {} does not exist", path.display(), p.display())));
            }
        }
        Ok(cfg)
    }

    /// Copies every key set in `other` over `self`.
    pub fn overlay(&mut self, other: &FileConfig) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f.clone(); } )* };
        }
        take!(
            w_cd,
            w_hd,
            w_a,
            w_orth,
            w_tpe,
            w_norm,
            tpe_alpha,
            tpe_skip_boundary,
            weights,
            step,
            t_max,
            samples_u,
            samples_v,
            record_every,
            optimizer,
            seed,
            early_stop_patience,
            early_stop_tol,
            prealign,
            radius,
            height,
            leaflets,
            degree_axial,
            degree_circ,
            n_axial,
            n_circ_free,
            scallop_depth,
            taper,
            cloud,
            template,
            manifest,
            out
        );
    }

    pub fn loss_weights(&self) -> Result<LossWeights> {
        let mut w = match self.weights.as_deref() {
            None | Some("validation") => LossWeights::validation(),
            Some("patient") => LossWeights::patient(),
            Some(other) => return Err(Error::arg(format!("unknown weight preset `{other}`"))),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { w.$f = v; } )* };
        }
        set!(w_cd, w_hd, w_a, w_orth, w_tpe, w_norm, tpe_alpha, tpe_skip_boundary);
        w.validate()?;
        Ok(w)
    }

    pub fn fit_config(&self) -> Result<FitConfig> {
        let d = FitConfig::default();
        let early_stop = match (self.early_stop_patience, self.early_stop_tol) {
            (None, None) => None,
            (p, t) => Some(EarlyStop {
                patience: p.unwrap_or(EarlyStop::default().patience),
                rel_tol: t.unwrap_or(EarlyStop::default().rel_tol),
            }),
        };
        let cfg = FitConfig {
            step: self.step.unwrap_or(d.step),
            t_max: self.t_max.unwrap_or(d.t_max),
            weights: self.loss_weights()?,
            samples_u: self.samples_u.unwrap_or(d.samples_u),
            samples_v: self.samples_v.unwrap_or(d.samples_v),
            record_every: self.record_every.unwrap_or(d.record_every),
            early_stop,
            optimizer: self.optimizer.unwrap_or(d.optimizer),
            seed: self.seed.unwrap_or(d.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn template_spec(&self) -> Result<TemplateSpec> {
        let d = TemplateSpec::default();
        let spec = TemplateSpec {
            radius: self.radius.unwrap_or(d.radius),
            height: self.height.unwrap_or(d.height),
            leaflets: self.leaflets.unwrap_or(d.leaflets),
            degree_axial: self.degree_axial.unwrap_or(d.degree_axial),
            degree_circ: self.degree_circ.unwrap_or(d.degree_circ),
            n_axial: self.n_axial.unwrap_or(d.n_axial),
            n_circ_free: self.n_circ_free.unwrap_or(d.n_circ_free),
            scallop_depth: self.scallop_depth.unwrap_or(d.scallop_depth),
            taper: self.taper.unwrap_or(d.taper),
        };
        spec.validate()?;
        Ok(spec)
    }
}

//! Adam over the free control grid and the single-frame fitting loop.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SampleGrid, DEFAULT_SAMPLES};
use crate::gradients::GradientGrid;
use crate::losses::{LossBreakdown, LossWeights, Objective, PointCloud};
use crate::spline::SplineSurface;
use crate::vec3::Vec3;

/// Consecutive failed evaluations tolerated before a fit is abandoned.
pub const MAX_FAILED_EVALUATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    /// Raw gradient step `P -= step * g`.
    Descent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub m: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: f64,
}

impl OptimizerState {
    pub fn adam(len: usize, step: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            m: vec![Vec3::ZERO; len],
            v: vec![Vec3::ZERO; len],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step,
        }
    }

    pub fn new(kind: OptimizerKind, len: usize, step: f64) -> Self {
        Self { kind, ..Self::adam(len, step) }
    }
}

/// One optimizer update of `params` in place.
pub fn adam_step(state: &mut OptimizerState, params: &mut [Vec3], grads: &GradientGrid) -> Result<()> {
    let g = grads.values();
    if params.len() != g.len() || state.m.len() != g.len() || state.v.len() != g.len() {
        return Err(Error::arg(format!(
            "optimizer shape mismatch: {} parameters, {} gradients, {} moments",
            params.len(),
            g.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    if state.kind == OptimizerKind::Descent {
        for (p, gi) in params.iter_mut().zip(g) {
            *p -= *gi * state.step;
        }
        return Ok(());
    }
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powf(state.t as f64);
    let c2 = 1.0 - b2.powf(state.t as f64);
    for i in 0..params.len() {
        for axis in 0..3 {
            let gi = g[i].get(axis);
            let m = b1 * state.m[i].get(axis) + (1.0 - b1) * gi;
            let v = b2 * state.v[i].get(axis) + (1.0 - b2) * gi * gi;
            state.m[i].set(axis, m);
            state.v[i].set(axis, v);
            let mhat = m / c1;
            let vhat = v / c2;
            let p = params[i].get(axis) - state.step * mhat / (vhat.sqrt() + state.eps);
            params[i].set(axis, p);
        }
    }
    Ok(())
}

/// Relative-change stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub patience: usize,
    pub rel_tol: f64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self { patience: 100, rel_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub step: f64,
    pub t_max: usize,
    pub weights: LossWeights,
    pub samples_u: usize,
    pub samples_v: usize,
    pub record_every: usize,
    pub early_stop: Option<EarlyStop>,
    pub optimizer: OptimizerKind,
    /// Seed for any randomized preprocessing; the fit itself draws no
    /// random numbers.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            t_max: 10_000,
            weights: LossWeights::validation(),
            samples_u: DEFAULT_SAMPLES.0,
            samples_v: DEFAULT_SAMPLES.1,
            record_every: 10,
            early_stop: None,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::arg(format!("step must be > 0, got {}", self.step)));
        }
        if self.t_max < 1 {
            return Err(Error::arg("t_max must be at least 1"));
        }
        if self.record_every < 1 {
            return Err(Error::arg("record_every must be at least 1"));
        }
        if let Some(es) = &self.early_stop {
            if es.patience == 0 || !(es.rel_tol >= 0.0) {
                return Err(Error::arg("early stop needs patience >= 1 and rel_tol >= 0"));
            }
        }
        self.weights.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub breakdown: LossBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FitDiagnostics {
    /// Largest number of degenerate samples seen in one iteration.
    pub max_degenerate_samples: usize,
    /// Iterations with at least one degenerate sample.
    pub degenerate_iterations: usize,
    /// Iterations whose tangent-point term hit its cap.
    pub tpe_capped_iterations: usize,
    /// Evaluations that failed and reused the previous gradient.
    pub failed_evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub surface: SplineSurface,
    pub history: Vec<HistoryEntry>,
    pub iterations: usize,
    pub wall_time: Duration,
    pub diagnostics: FitDiagnostics,
}

impl FitResult {
    pub fn final_loss(&self) -> Option<&LossBreakdown> {
        self.history.last().map(|h| &h.breakdown)
    }
}

fn recoverable(e: &Error) -> bool {
    matches!(e, Error::Degenerate { .. } | Error::AllDegenerate { .. } | Error::NonFinite(_))
}

fn log_entry(h: &HistoryEntry) {
    let b = &h.breakdown;
    log::info!(
        "iter {:>6} total {:.6e} cd {:.4e} hd {:.4e} a {:.4e} orth {:.4e} tpe {:.4e} norm {:.4e}",
        h.iteration,
        b.total,
        b.d_cd,
        b.d_hd,
        b.d_a,
        b.r_orth,
        b.r_tpe,
        b.r_norm
    );
}

/// Deforms `template` towards `cloud`.
///
/// The loss is recorded before the first step, every `record_every`
/// iterations, and once more for the final surface.
pub fn fit_single(template: &SplineSurface, cloud: &PointCloud, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let start = Instant::now();
    let grid = SampleGrid::new(template, config.samples_u, config.samples_v)?;
    let mut obj = Objective::new(cloud.clone(), config.weights, grid)?;
    let mut surface = template.clone();
    let mut state = OptimizerState::new(config.optimizer, surface.control_points().len(), config.step);
    let mut history = Vec::new();
    let mut diag = FitDiagnostics::default();
    let mut last_good: Option<(GradientGrid, SplineSurface)> = None;
    let mut failures = 0usize;
    let mut prev_total: Option<f64> = None;
    let mut calm = 0usize;
    let mut iterations = 0;

    for t in 0..config.t_max {
        let grad = match obj.evaluate_with_gradient(&surface) {
            Ok((eval, grad)) => {
                failures = 0;
                let d = eval.diagnostics;
                if d.degenerate_samples > 0 {
                    diag.degenerate_iterations += 1;
                    diag.max_degenerate_samples = diag.max_degenerate_samples.max(d.degenerate_samples);
                }
                diag.tpe_capped_iterations += d.tpe_capped as usize;
                if t % config.record_every == 0 {
                    let entry = HistoryEntry { iteration: t, breakdown: eval.breakdown };
                    log_entry(&entry);
                    history.push(entry);
                }
                if let Some(es) = &config.early_stop {
                    let total = eval.breakdown.total;
                    if let Some(prev) = prev_total {
                        if (total - prev).abs() <= es.rel_tol * total.abs() {
                            calm += 1;
                        } else {
                            calm = 0;
                        }
                    }
                    prev_total = Some(total);
                    if calm >= es.patience {
                        log::info!("early stop at iteration {t}");
                        break;
                    }
                }
                last_good = Some((grad.clone(), surface.clone()));
                grad
            }
            Err(e) if recoverable(&e) => {
                failures += 1;
                diag.failed_evaluations += 1;
                log::warn!("iteration {t}: {e}; reusing the previous gradient");
                match &last_good {
                    Some((g, _)) if failures <= MAX_FAILED_EVALUATIONS => g.clone(),
                    Some((_, good)) => {
                        return Err(Error::FitFailure {
                            iterations: t,
                            reason: e.to_string(),
                            last_good: Box::new(good.clone()),
                        })
                    }
                    None => {
                        return Err(Error::FitFailure {
                            iterations: t,
                            reason: e.to_string(),
                            last_good: Box::new(template.clone()),
                        })
                    }
                }
            }
            Err(e) => return Err(e),
        };
        adam_step(&mut state, surface.control_points_mut(), &grad)?;
        iterations = t + 1;
    }

    match obj.evaluate(&surface) {
        Ok(eval) => {
            let entry = HistoryEntry { iteration: iterations, breakdown: eval.breakdown };
            log_entry(&entry);
            if history.last().map(|h| h.iteration) != Some(iterations) {
                history.push(entry);
            }
        }
        Err(e) if recoverable(&e) => {
            log::warn!("final surface could not be evaluated: {e}");
            if let Some((_, good)) = last_good {
                surface = good;
            }
        }
        Err(e) => return Err(e),
    }

    Ok(FitResult { surface, history, iterations, wall_time: start.elapsed(), diagnostics: diag })
}

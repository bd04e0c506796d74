//! C ABI over the valvefit library.
//!
//! Objects cross the boundary as opaque handles (`VfSurface`, `VfCloud`)
//! that the caller releases with the matching `*_free` function. Every
//! fallible call returns a `VfStatus`; on failure a message is available from
//! `vf_last_error_message` on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use valvefit::io::{self, SurfaceFormat};
use valvefit::losses::{LossBreakdown, LossWeights, PointCloud};
use valvefit::metrics::evaluate_fit;
use valvefit::optim::{fit_single, FitConfig};
use valvefit::pipeline::{affine_prealign, make_template, TemplateSpec};
use valvefit::spline::SplineSurface;
use valvefit::synth::{sample_poisson_disk, synth_valve_surface, SynthStage};
use valvefit::{Error, Vec3};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Domain = 5,
    Degenerate = 6,
    NonFinite = 7,
    Alignment = 8,
    FitFailure = 9,
    Panic = 10,
}

/// Spline surface handle.
pub struct VfSurface(SplineSurface);

/// Point cloud handle.
pub struct VfCloud(PointCloud);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VfWeights {
    pub w_cd: f64,
    pub w_hd: f64,
    pub w_a: f64,
    pub w_orth: f64,
    pub w_tpe: f64,
    pub w_norm: f64,
    pub tpe_alpha: f64,
    pub tpe_skip_boundary: bool,
}

impl From<LossWeights> for VfWeights {
    fn from(w: LossWeights) -> Self {
        Self {
            w_cd: w.w_cd,
            w_hd: w.w_hd,
            w_a: w.w_a,
            w_orth: w.w_orth,
            w_tpe: w.w_tpe,
            w_norm: w.w_norm,
            tpe_alpha: w.tpe_alpha,
            tpe_skip_boundary: w.tpe_skip_boundary,
        }
    }
}

impl From<VfWeights> for LossWeights {
    fn from(w: VfWeights) -> Self {
        Self {
            w_cd: w.w_cd,
            w_hd: w.w_hd,
            w_a: w.w_a,
            w_orth: w.w_orth,
            w_tpe: w.w_tpe,
            w_norm: w.w_norm,
            tpe_alpha: w.tpe_alpha,
            tpe_skip_boundary: w.tpe_skip_boundary,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VfFitOptions {
    pub step: f64,
    pub t_max: usize,
    pub weights: VfWeights,
    pub samples_u: usize,
    pub samples_v: usize,
    pub record_every: usize,
    /// Similarity-align the template to the cloud before fitting.
    pub prealign: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VfLoss {
    pub total: f64,
    pub d_cd: f64,
    pub d_hd: f64,
    pub d_a: f64,
    pub r_orth: f64,
    pub r_tpe: f64,
    pub r_norm: f64,
}

impl From<&LossBreakdown> for VfLoss {
    fn from(b: &LossBreakdown) -> Self {
        Self {
            total: b.total,
            d_cd: b.d_cd,
            d_hd: b.d_hd,
            d_a: b.d_a,
            r_orth: b.r_orth,
            r_tpe: b.r_tpe,
            r_norm: b.r_norm,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VfSnndSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub area: f64,
    pub points: usize,
    pub samples: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VfStatus {
    match e {
        Error::Argument(_) => VfStatus::InvalidArgument,
        Error::Parse { .. } => VfStatus::Parse,
        Error::Io { .. } => VfStatus::Io,
        Error::Domain { .. } => VfStatus::Domain,
        Error::Degenerate { .. } | Error::AllDegenerate { .. } => VfStatus::Degenerate,
        Error::NonFinite(_) => VfStatus::NonFinite,
        Error::Alignment(_) => VfStatus::Alignment,
        Error::FitFailure { .. } => VfStatus::FitFailure,
    }
}

struct Fail(VfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(VfStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> VfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VfStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".to_string());
            set_last_error(&msg);
            VfStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Fail(VfStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null("output pointer"))
}

unsafe fn surface_arg<'a>(p: *const VfSurface) -> Result<&'a SplineSurface, Fail> {
    p.as_ref().map(|s| &s.0).ok_or_else(|| null("surface"))
}

unsafe fn cloud_arg<'a>(p: *const VfCloud) -> Result<&'a PointCloud, Fail> {
    p.as_ref().map(|c| &c.0).ok_or_else(|| null("cloud"))
}

fn boxed_surface(s: SplineSurface) -> *mut VfSurface {
    Box::into_raw(Box::new(VfSurface(s)))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn vf_weights_validation() -> VfWeights {
    LossWeights::validation().into()
}

#[no_mangle]
pub extern "C" fn vf_weights_patient() -> VfWeights {
    LossWeights::patient().into()
}

#[no_mangle]
pub extern "C" fn vf_fit_options_default() -> VfFitOptions {
    let d = FitConfig::default();
    VfFitOptions {
        step: d.step,
        t_max: d.t_max,
        weights: d.weights.into(),
        samples_u: d.samples_u,
        samples_v: d.samples_v,
        record_every: d.record_every,
        prealign: true,
    }
}

// ---- surfaces -----------------------------------------------------------

/// Default valve template.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn vf_template_default(out: *mut *mut VfSurface) -> VfStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = boxed_surface(make_template(&TemplateSpec::default())?);
        Ok(())
    })
}

/// Template with the given size and control grid; other settings default.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn vf_template_new(
    radius: f64,
    height: f64,
    leaflets: usize,
    n_axial: usize,
    n_circ: usize,
    out: *mut *mut VfSurface,
) -> VfStatus {
    guard(|| {
        let out = out_arg(out)?;
        let spec = TemplateSpec { radius, height, leaflets, n_axial, n_circ_free: n_circ, ..TemplateSpec::default() };
        *out = boxed_surface(make_template(&spec)?);
        Ok(())
    })
}

/// Synthetic closing-valve surface at `closure` in `[0, 1]`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn vf_synth_surface(closure: f64, seed: u64, out: *mut *mut VfSurface) -> VfStatus {
    guard(|| {
        let out = out_arg(out)?;
        let stage = SynthStage { closure, seed, ..SynthStage::default() };
        *out = boxed_surface(synth_valve_surface(&stage)?);
        Ok(())
    })
}

/// Loads a surface in the native text format.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vf_surface_load(path: *const c_char, out: *mut *mut VfSurface) -> VfStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = out_arg(out)?;
        *out = boxed_surface(io::load_surface(&path)?);
        Ok(())
    })
}

/// Saves a surface; paths ending in `.obj` get a quad mesh.
///
/// # Safety
/// `surface` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vf_surface_save(surface: *const VfSurface, path: *const c_char) -> VfStatus {
    guard(|| {
        let s = surface_arg(surface)?;
        let path = path_arg(path)?;
        io::save_surface(s, &path, SurfaceFormat::from_path(&path))?;
        Ok(())
    })
}

/// Control grid size.
///
/// # Safety
/// `surface` must come from this library; the outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn vf_surface_grid(
    surface: *const VfSurface,
    n_axial: *mut usize,
    n_circ: *mut usize,
) -> VfStatus {
    guard(|| {
        let s = surface_arg(surface)?;
        *out_arg(n_axial)? = s.n_axial();
        *out_arg(n_circ)? = s.n_circ_free();
        Ok(())
    })
}

/// Copies the control points as `x, y, z` triples, row by row (axial index
/// outer). `len` is the capacity of `xyz` in doubles and must be at least
/// `3 * n_axial * n_circ`.
///
/// # Safety
/// `xyz` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vf_surface_control_points(surface: *const VfSurface, xyz: *mut f64, len: usize) -> VfStatus {
    guard(|| {
        let s = surface_arg(surface)?;
        if xyz.is_null() {
            return Err(null("xyz"));
        }
        let pts = s.control_points();
        if len < 3 * pts.len() {
            return Err(Fail(
                VfStatus::InvalidArgument,
                format!("buffer holds {len} doubles, {} needed", 3 * pts.len()),
            ));
        }
        let buf = std::slice::from_raw_parts_mut(xyz, 3 * pts.len());
        for (chunk, p) in buf.chunks_exact_mut(3).zip(pts) {
            chunk.copy_from_slice(&[p.x, p.y, p.z]);
        }
        Ok(())
    })
}

/// Point `S(u, v)` written to `xyz[0..3]`.
///
/// # Safety
/// `xyz` must point to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vf_surface_point(surface: *const VfSurface, u: f64, v: f64, xyz: *mut f64) -> VfStatus {
    guard(|| {
        let s = surface_arg(surface)?;
        if xyz.is_null() {
            return Err(null("xyz"));
        }
        let p = s.point(u, v)?;
        std::slice::from_raw_parts_mut(xyz, 3).copy_from_slice(&[p.x, p.y, p.z]);
        Ok(())
    })
}

/// # Safety
/// `surface` must come from this library (or be null) and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn vf_surface_free(surface: *mut VfSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

// ---- clouds -------------------------------------------------------------

/// Unlabelled cloud from `n` packed `x, y, z` triples.
///
/// # Safety
/// `xyz` must point to `3 * n` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vf_cloud_from_xyz(xyz: *const f64, n: usize, out: *mut *mut VfCloud) -> VfStatus {
    guard(|| {
        let out = out_arg(out)?;
        if xyz.is_null() {
            return Err(null("xyz"));
        }
        let raw = std::slice::from_raw_parts(xyz, 3 * n);
        let points = raw.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
        *out = Box::into_raw(Box::new(VfCloud(PointCloud::new(points)?)));
        Ok(())
    })
}

/// Loads an `x,y,z[,label]` text cloud.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vf_cloud_load(path: *const c_char, out: *mut *mut VfCloud) -> VfStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = out_arg(out)?;
        *out = Box::into_raw(Box::new(VfCloud(io::load_point_cloud(&path)?)));
        Ok(())
    })
}

/// Poisson-disk cloud of about `count` points on `surface`.
///
/// # Safety
/// `surface` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vf_cloud_sample(
    surface: *const VfSurface,
    count: usize,
    seed: u64,
    out: *mut *mut VfCloud,
) -> VfStatus {
    guard(|| {
        let s = surface_arg(surface)?;
        let out = out_arg(out)?;
        *out = Box::into_raw(Box::new(VfCloud(sample_poisson_disk(s, count, seed)?.cloud)));
        Ok(())
    })
}

/// Number of points, 0 for a null handle.
///
/// # Safety
/// `cloud` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn vf_cloud_len(cloud: *const VfCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `cloud` must come from this library (or be null) and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn vf_cloud_free(cloud: *mut VfCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

// ---- fitting and evaluation ---------------------------------------------

/// Fits `template` to `cloud`. On success `*out` receives the fitted surface
/// and `*final_loss` (if not null) its loss. When the fit gives up,
/// `VF_STATUS_FIT_FAILURE` is returned and `*out` holds the last surface that
/// evaluated cleanly.
///
/// # Safety
/// Handles must come from this library; `options` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn vf_fit(
    template: *const VfSurface,
    cloud: *const VfCloud,
    options: *const VfFitOptions,
    out: *mut *mut VfSurface,
    final_loss: *mut VfLoss,
) -> VfStatus {
    guard(|| {
        let template = surface_arg(template)?;
        let cloud = cloud_arg(cloud)?;
        let out = out_arg(out)?;
        let opts = options.as_ref().copied().unwrap_or_else(|| vf_fit_options_default());
        let config = FitConfig {
            step: opts.step,
            t_max: opts.t_max,
            weights: opts.weights.into(),
            samples_u: opts.samples_u,
            samples_v: opts.samples_v,
            record_every: opts.record_every,
            ..FitConfig::default()
        };
        let start = if opts.prealign { affine_prealign(template, cloud)? } else { template.clone() };
        match fit_single(&start, cloud, &config) {
            Ok(result) => {
                if let (Some(dst), Some(b)) = (final_loss.as_mut(), result.final_loss()) {
                    *dst = b.into();
                }
                *out = boxed_surface(result.surface);
                Ok(())
            }
            Err(Error::FitFailure { iterations, reason, last_good }) => {
                *out = boxed_surface(*last_good);
                Err(Fail(VfStatus::FitFailure, format!("fit failed after {iterations} iterations: {reason}")))
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// sNND statistics of `cloud` against `surface`.
///
/// # Safety
/// Handles must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vf_evaluate(
    surface: *const VfSurface,
    cloud: *const VfCloud,
    out: *mut VfSnndSummary,
) -> VfStatus {
    guard(|| {
        let s = surface_arg(surface)?;
        let c = cloud_arg(cloud)?;
        let out = out_arg(out)?;
        let r = evaluate_fit(s, c)?;
        *out = VfSnndSummary {
            min: r.min,
            max: r.max,
            mean: r.mean,
            area: r.area,
            points: r.values.len(),
            samples: r.sample_count,
        };
        Ok(())
    })
}

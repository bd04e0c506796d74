use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use valvefit::geometry::SampleGrid;
use valvefit::io::{self, FileConfig, SurfaceFormat};
use valvefit::losses::{Label, Objective, PointCloud};
use valvefit::metrics::{evaluate_fit, SnndReport};
use valvefit::optim::{FitConfig, FitResult, OptimizerKind};
use valvefit::pipeline::{affine_prealign, fit_sequence, make_template, Prealign};
use valvefit::spline::SplineSurface;
use valvefit::synth::{add_gaussian_noise, sample_poisson_disk, synth_valve_surface, SynthStage};
use valvefit::{Error, Vec3};

const OUT_ENV: &str = "VALVEFIT_OUT";
const DEFAULT_OUT: &str = "valvefit-out";

#[derive(Parser)]
#[command(name = "valvefit", version, about = "Fit a periodic B-spline valve template to point clouds")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the default (or configured) template surface.
    Template(TemplateArgs),
    /// Generate a synthetic valve surface and a point cloud sampled from it.
    Synth(SynthArgs),
    /// Fit the template to one point cloud.
    Fit(FitArgs),
    /// Fit a sequence of frames listed in a manifest, warm-starting each.
    FitSequence(SequenceArgs),
    /// sNND report of an existing surface against a cloud.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Default)]
struct TemplateKeys {
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long)]
    leaflets: Option<usize>,
    #[arg(long)]
    n_axial: Option<usize>,
    #[arg(long)]
    n_circ: Option<usize>,
    #[arg(long)]
    scallop_depth: Option<f64>,
    #[arg(long)]
    taper: Option<f64>,
}

impl TemplateKeys {
    fn apply(&self, cfg: &mut FileConfig) {
        let flags = FileConfig {
            radius: self.radius,
            height: self.height,
            leaflets: self.leaflets,
            n_axial: self.n_axial,
            n_circ_free: self.n_circ,
            scallop_depth: self.scallop_depth,
            taper: self.taper,
            ..FileConfig::default()
        };
        cfg.overlay(&flags);
    }
}

#[derive(Args)]
struct TemplateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    keys: TemplateKeys,
    /// Output file; `.obj` writes a quad mesh, anything else the native format.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    keys: TemplateKeys,
    /// 0 = open, 1 = coapted.
    #[arg(long, default_value_t = 0.6)]
    closure: f64,
    #[arg(long)]
    amplitude: Option<f64>,
    /// Use the near-coaptation pinch fixture (overrides --closure/--amplitude).
    #[arg(long)]
    pinch: bool,
    #[arg(long, default_value_t = 1500)]
    points: usize,
    /// Gaussian noise standard deviation added to the cloud.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Extra annulus-labelled points spread along the annulus row.
    #[arg(long, default_value_t = 0)]
    annulus_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (default: $VALVEFIT_OUT or ./valvefit-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitKeys {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Weight preset: validation or patient.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    wcd: Option<f64>,
    #[arg(long)]
    whd: Option<f64>,
    #[arg(long)]
    wa: Option<f64>,
    #[arg(long)]
    worth: Option<f64>,
    #[arg(long)]
    wtpe: Option<f64>,
    #[arg(long)]
    wnorm: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long, value_parser = parse_optimizer)]
    optimizer: Option<OptimizerKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_prealign)]
    prealign: Option<Prealign>,
    /// Surface to start from instead of a generated template.
    #[arg(long)]
    template: Option<PathBuf>,
    #[command(flatten)]
    template_keys: TemplateKeys,
    /// Output directory (default: $VALVEFIT_OUT or ./valvefit-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    cloud: Option<PathBuf>,
    /// Also write the gradient at the starting surface to this file.
    #[arg(long)]
    dump_gradient: Option<PathBuf>,
    #[command(flatten)]
    keys: FitKeys,
}

#[derive(Args)]
struct SequenceArgs {
    /// `label,path` rows, one frame per row.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    keys: FitKeys,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    cloud: PathBuf,
    #[arg(long)]
    surface: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    match s {
        "adam" => Ok(OptimizerKind::Adam),
        "descent" => Ok(OptimizerKind::Descent),
        _ => Err(format!("unknown optimizer `{s}` (adam, descent)")),
    }
}

fn parse_prealign(s: &str) -> Result<Prealign, String> {
    match s {
        "none" => Ok(Prealign::None),
        "first-frame" => Ok(Prealign::FirstFrame),
        "every-frame" => Ok(Prealign::EveryFrame),
        _ => Err(format!("unknown prealign mode `{s}` (none, first-frame, every-frame)")),
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, Error> {
    match path {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

impl FitKeys {
    fn resolve(&self) -> Result<FileConfig, Error> {
        let mut cfg = load_config(self.config.as_deref())?;
        let flags = FileConfig {
            weights: self.weights.clone(),
            w_cd: self.wcd,
            w_hd: self.whd,
            w_a: self.wa,
            w_orth: self.worth,
            w_tpe: self.wtpe,
            w_norm: self.wnorm,
            step: self.step,
            t_max: self.t_max,
            record_every: self.record_every,
            optimizer: self.optimizer,
            seed: self.seed,
            prealign: self.prealign,
            template: self.template.clone(),
            out: self.out.clone(),
            ..FileConfig::default()
        };
        cfg.overlay(&flags);
        self.template_keys.apply(&mut cfg);
        Ok(cfg)
    }
}

fn out_dir(cfg_out: Option<&PathBuf>) -> PathBuf {
    cfg_out
        .cloned()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn starting_surface(cfg: &FileConfig) -> Result<SplineSurface, Error> {
    match &cfg.template {
        Some(p) => io::load_surface(p),
        None => make_template(&cfg.template_spec()?),
    }
}

fn required(path: Option<PathBuf>, what: &str) -> Result<PathBuf, Error> {
    path.ok_or_else(|| Error::Argument(format!("missing --{what} (or `{what}` in the config file)")))
}

fn write_fit(result: &FitResult, dir: &Path, stem: &str, report: &SnndReport) -> Result<(), Error> {
    io::save_surface(&result.surface, &dir.join(format!("{stem}surface.surf")), SurfaceFormat::Native)?;
    io::save_surface(&result.surface, &dir.join(format!("{stem}surface.obj")), SurfaceFormat::QuadMesh)?;
    io::save_history(&result.history, &dir.join(format!("{stem}history.csv")))?;
    io::save_snnd_report(report, dir, stem)
}

fn log_report(label: &str, r: &SnndReport) {
    info!(
        "{label}: sNND min {:.4e} max {:.4e} mean {:.4e} ({} points, {} samples, area {:.4e})",
        r.min,
        r.max,
        r.mean,
        r.values.len(),
        r.sample_count,
        r.area
    );
}

fn run_template(args: TemplateArgs) -> Result<(), Error> {
    let mut cfg = load_config(args.config.as_deref())?;
    args.keys.apply(&mut cfg);
    let surface = make_template(&cfg.template_spec()?)?;
    io::save_surface(&surface, &args.out, SurfaceFormat::from_path(&args.out))?;
    info!("wrote {}", args.out.display());
    Ok(())
}

fn annulus_cloud(surface: &SplineSurface, count: usize) -> Result<Vec<Vec3>, Error> {
    let (u0, _) = surface.domain_axial();
    let (va, vb) = surface.domain_circ();
    (0..count).map(|k| surface.point(u0, va + (vb - va) * k as f64 / count as f64)).collect()
}

fn run_synth(args: SynthArgs) -> Result<(), Error> {
    let mut cfg = load_config(args.config.as_deref())?;
    args.keys.apply(&mut cfg);
    let base = cfg.template_spec()?;
    let stage = if args.pinch {
        SynthStage::pinch(base, args.seed)
    } else {
        let mut s = SynthStage { closure: args.closure, base, seed: args.seed, ..SynthStage::default() };
        if let Some(a) = args.amplitude {
            s.amplitude = a;
        }
        s
    };
    let truth = synth_valve_surface(&stage)?;
    let sample = sample_poisson_disk(&truth, args.points, args.seed)?;
    let mut cloud = add_gaussian_noise(&sample.cloud, args.noise, args.seed.wrapping_add(1))?;
    if args.annulus_points > 0 {
        let mut points = cloud.points().to_vec();
        let mut labels: Vec<Label> = (0..cloud.len()).map(|i| cloud.label(i)).collect();
        for p in annulus_cloud(&truth, args.annulus_points)? {
            points.push(p);
            labels.push(Label::Annulus);
        }
        cloud = PointCloud::with_labels(points, labels)?;
    }
    let dir = out_dir(args.out.as_ref().or(cfg.out.as_ref()));
    io::save_point_cloud(&cloud, &dir.join("cloud.csv"))?;
    io::save_surface(&truth, &dir.join("truth.surf"), SurfaceFormat::Native)?;
    io::save_surface(&truth, &dir.join("truth.obj"), SurfaceFormat::QuadMesh)?;
    info!(
        "wrote {} points (separation {:.4e}) and the ground-truth surface to {}",
        cloud.len(),
        sample.radius,
        dir.display()
    );
    Ok(())
}

fn run_fit(args: FitArgs) -> Result<(), Error> {
    let cfg = args.keys.resolve()?;
    let config: FitConfig = cfg.fit_config()?;
    let cloud_path = required(args.cloud.or(cfg.cloud.clone()), "cloud")?;
    let cloud = io::load_point_cloud(&cloud_path)?;
    let mut start = starting_surface(&cfg)?;
    if cfg.prealign.unwrap_or_default() != Prealign::None {
        start = affine_prealign(&start, &cloud)?;
    }
    let dir = out_dir(cfg.out.as_ref());
    if let Some(path) = &args.dump_gradient {
        let grid = SampleGrid::new(&start, config.samples_u, config.samples_v)?;
        let mut obj = Objective::new(cloud.clone(), config.weights, grid)?;
        let (_, grad) = obj.evaluate_with_gradient(&start)?;
        io::write_text(path, &io::format_gradient(&grad))?;
    }
    let result = valvefit::optim::fit_single(&start, &cloud, &config)?;
    let report = evaluate_fit(&result.surface, &cloud)?;
    write_fit(&result, &dir, "", &report)?;
    io::write_text(&dir.join("summary.csv"), &io::format_summary(&[("fit".to_string(), &report)]))?;
    info!("{} iterations in {:.2?}", result.iterations, result.wall_time);
    log_report("fit", &report);
    Ok(())
}

fn run_sequence(args: SequenceArgs) -> Result<(), Error> {
    let cfg = args.keys.resolve()?;
    let config = cfg.fit_config()?;
    let manifest = required(args.manifest.or(cfg.manifest.clone()), "manifest")?;
    let frames = io::load_sequence(&manifest)?;
    let start = starting_surface(&cfg)?;
    let dir = out_dir(cfg.out.as_ref());
    let (fits, failure) = match fit_sequence(&start, &frames, &config, cfg.prealign.unwrap_or_default()) {
        Ok(fits) => (fits, None),
        Err(f) => (f.completed, Some((f.label, f.error))),
    };
    let mut rows = Vec::new();
    for (fit, (_, cloud)) in fits.iter().zip(frames.frames()) {
        let report = evaluate_fit(&fit.result.surface, cloud)?;
        write_fit(&fit.result, &dir, &format!("{}_", io::file_stem(&fit.label)), &report)?;
        log_report(&fit.label, &report);
        rows.push((fit.label.clone(), report));
    }
    let table: Vec<(String, &SnndReport)> = rows.iter().map(|(l, r)| (l.clone(), r)).collect();
    io::write_text(&dir.join("summary.csv"), &io::format_summary(&table))?;
    match failure {
        None => Ok(()),
        Some((label, e)) => {
            error!("frame `{label}` failed after {} completed frame(s)", fits.len());
            Err(e)
        }
    }
}

fn run_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let cloud = io::load_point_cloud(&args.cloud)?;
    let surface = io::load_surface(&args.surface)?;
    let report = evaluate_fit(&surface, &cloud)?;
    let dir = out_dir(args.out.as_ref());
    let label = args.cloud.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "cloud".to_string());
    io::save_snnd_report(&report, &dir, "")?;
    io::write_text(&dir.join("summary.csv"), &io::format_summary(&[(label.clone(), &report)]))?;
    log_report(&label, &report);
    Ok(())
}

/// 2 for bad input, 1 for everything that went wrong while computing.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) | Error::Parse { .. } | Error::Io { .. } | Error::Domain { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            error!("--threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("could not start the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Template(a) => run_template(a),
        Command::Synth(a) => run_synth(a),
        Command::Fit(a) => run_fit(a),
        Command::FitSequence(a) => run_sequence(a),
        Command::Evaluate(a) => run_evaluate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

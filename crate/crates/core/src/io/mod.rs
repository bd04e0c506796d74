//! File formats: point clouds, surfaces, meshes, CSV reports, sequence
//! manifests and run configuration.

mod config;

pub use config::FileConfig;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::SampleGrid;
use crate::gradients::GradientGrid;
use crate::losses::{Label, PointCloud};
use crate::metrics::SnndReport;
use crate::optim::HistoryEntry;
use crate::pipeline::FrameSequence;
use crate::spline::{KnotKind, KnotVector, SplineSurface};
use crate::vec3::Vec3;

const SURFACE_MAGIC: &str = "valvefit-surface 1";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_err(origin: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { origin: origin.to_string(), line, message: message.into() }
}

/// Non-blank, non-comment lines with their 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_f64(origin: &str, line: usize, field: &str) -> Result<f64> {
    let v: f64 =
        field.trim().parse().map_err(|_| parse_err(origin, line, format!("`{}` is not a number", field.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(origin, line, format!("non-finite value `{}`", field.trim())));
    }
    Ok(v)
}

// ---- point clouds -------------------------------------------------------

/// Parses `x,y,z[,label]` rows. `origin` is used in error messages.
pub fn parse_point_cloud(text: &str, origin: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut any_label = false;
    for (ln, line) in content_lines(text) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(parse_err(origin, ln, format!("expected `x,y,z[,label]`, found {} field(s)", fields.len())));
        }
        let p = Vec3::new(
            parse_f64(origin, ln, fields[0])?,
            parse_f64(origin, ln, fields[1])?,
            parse_f64(origin, ln, fields[2])?,
        );
        let label = match fields.get(3) {
            Some(f) => {
                any_label = true;
                f.parse::<Label>().map_err(|m| parse_err(origin, ln, m))?
            }
            None => Label::Unlabeled,
        };
        points.push(p);
        labels.push(label);
    }
    if points.is_empty() {
        return Err(Error::arg(format!("{origin}: no points")));
    }
    if any_label {
        PointCloud::with_labels(points, labels)
    } else {
        PointCloud::new(points)
    }
}

pub fn load_point_cloud(path: &Path) -> Result<PointCloud> {
    parse_point_cloud(&read_text(path)?, &path.display().to_string())
}

pub fn format_point_cloud(cloud: &PointCloud) -> String {
    let mut out = String::new();
    for (i, p) in cloud.points().iter().enumerate() {
        match cloud.labels() {
            Some(l) => writeln!(out, "{},{},{},{}", p.x, p.y, p.z, l[i]),
            None => writeln!(out, "{},{},{}", p.x, p.y, p.z),
        }
        .expect("writing to a String");
    }
    out
}

pub fn save_point_cloud(cloud: &PointCloud, path: &Path) -> Result<()> {
    write_text(path, &format_point_cloud(cloud))
}

// ---- surfaces -----------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SurfaceFormat {
    /// Lossless text format (knots, degrees, control grid).
    #[default]
    Native,
    /// Wavefront OBJ quad mesh over the default sample grid.
    QuadMesh,
}

impl SurfaceFormat {
    /// `.obj` selects the mesh, anything else the native format.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("obj") => SurfaceFormat::QuadMesh,
            _ => SurfaceFormat::Native,
        }
    }
}

fn join_f64(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn format_surface(surface: &SplineSurface) -> String {
    let mut out = String::new();
    let ka = surface.knots_axial();
    let kc = surface.knots_circ();
    let _ = writeln!(out, "{SURFACE_MAGIC}");
    let _ = writeln!(out, "periodic {}", surface.is_periodic());
    let _ = writeln!(out, "degrees {} {}", ka.degree(), kc.degree());
    let _ = writeln!(out, "knots_axial {} {}", ka.kind().as_str(), join_f64(ka.values()));
    let _ = writeln!(out, "knots_circ {} {}", kc.kind().as_str(), join_f64(kc.values()));
    let _ = writeln!(out, "grid {} {}", surface.n_axial(), surface.n_circ_free());
    for p in surface.control_points() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    out
}

pub fn parse_surface(text: &str, origin: &str) -> Result<SplineSurface> {
    let mut lines = content_lines(text);
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| parse_err(origin, 0, format!("unexpected end of input, expected {what}")))
    };
    let (ln, magic) = next("header")?;
    if magic != SURFACE_MAGIC {
        return Err(parse_err(origin, ln, format!("expected `{SURFACE_MAGIC}`")));
    }
    let keyed = |ln: usize, line: &str, key: &str| -> Result<Vec<String>> {
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(parse_err(origin, ln, format!("expected `{key}`")));
        }
        Ok(it.map(str::to_string).collect())
    };
    let (ln, l) = next("periodic")?;
    let periodic = match keyed(ln, l, "periodic")?.as_slice() {
        [v] if v == "true" => true,
        [v] if v == "false" => false,
        _ => return Err(parse_err(origin, ln, "expected `periodic true|false`")),
    };
    let parse_usize = |ln: usize, s: &str| -> Result<usize> {
        s.parse().map_err(|_| parse_err(origin, ln, format!("`{s}` is not a count")))
    };
    let (ln, l) = next("degrees")?;
    let deg = keyed(ln, l, "degrees")?;
    if deg.len() != 2 {
        return Err(parse_err(origin, ln, "expected `degrees p q`"));
    }
    let (p, q) = (parse_usize(ln, &deg[0])?, parse_usize(ln, &deg[1])?);
    let mut knots = |key: &str, degree: usize| -> Result<KnotVector> {
        let (ln, l) = next(key)?;
        let f = keyed(ln, l, key)?;
        let kind =
            f.first().and_then(|k| KnotKind::parse(k)).ok_or_else(|| parse_err(origin, ln, "unknown knot kind"))?;
        let values = f[1..].iter().map(|v| parse_f64(origin, ln, v)).collect::<Result<Vec<_>>>()?;
        KnotVector::from_values(values, degree, kind).map_err(|e| parse_err(origin, ln, e.to_string()))
    };
    let ka = knots("knots_axial", p)?;
    let kc = knots("knots_circ", q)?;
    let (ln, l) = next("grid")?;
    let g = keyed(ln, l, "grid")?;
    if g.len() != 2 {
        return Err(parse_err(origin, ln, "expected `grid rows cols`"));
    }
    let (na, nc) = (parse_usize(ln, &g[0])?, parse_usize(ln, &g[1])?);
    let mut control = Vec::with_capacity(na * nc);
    for _ in 0..na * nc {
        let (ln, l) = next("control point")?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(origin, ln, "expected `x y z`"));
        }
        control.push(Vec3::new(
            parse_f64(origin, ln, f[0])?,
            parse_f64(origin, ln, f[1])?,
            parse_f64(origin, ln, f[2])?,
        ));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(origin, ln, "trailing data after the control grid"));
    }
    SplineSurface::new(ka, kc, periodic, na, nc, control).map_err(|e| parse_err(origin, 0, e.to_string()))
}

/// Quad mesh over an `n_u x n_v` sample grid. Faces follow the parameter
/// orientation, so their normals agree with `t_u x t_v`.
pub fn format_quad_mesh(surface: &SplineSurface, n_u: usize, n_v: usize) -> Result<String> {
    let samples = SampleGrid::new(surface, n_u, n_v)?.evaluate(surface)?;
    let mut out = String::new();
    let _ = writeln!(out, "# valvefit quad mesh {n_u}x{n_v}");
    for p in &samples.points {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    let cols = if surface.is_periodic() { n_v } else { n_v - 1 };
    let id = |i: usize, j: usize| i * n_v + (j % n_v) + 1;
    for i in 0..n_u - 1 {
        for j in 0..cols {
            let _ = writeln!(out, "f {} {} {} {}", id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
        }
    }
    Ok(out)
}

pub fn load_surface(path: &Path) -> Result<SplineSurface> {
    parse_surface(&read_text(path)?, &path.display().to_string())
}

pub fn save_surface(surface: &SplineSurface, path: &Path, format: SurfaceFormat) -> Result<()> {
    let text = match format {
        SurfaceFormat::Native => format_surface(surface),
        SurfaceFormat::QuadMesh => {
            let (nu, nv) = crate::geometry::DEFAULT_SAMPLES;
            format_quad_mesh(surface, nu, nv)?
        }
    };
    write_text(path, &text)
}

// ---- CSV reports --------------------------------------------------------

pub const HISTORY_HEADER: &str = "iteration,total,fid,reg,d_cd,d_hd,d_a,r_orth,r_tpe,r_norm";

pub fn format_history(history: &[HistoryEntry]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for h in history {
        let b = &h.breakdown;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            h.iteration, b.total, b.fid, b.reg, b.d_cd, b.d_hd, b.d_a, b.r_orth, b.r_tpe, b.r_norm
        );
    }
    out
}

pub fn save_history(history: &[HistoryEntry], path: &Path) -> Result<()> {
    write_text(path, &format_history(history))
}

fn parse_csv_rows(text: &str, origin: &str, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rows = content_lines(text);
    match rows.next() {
        Some((_, h)) if h == header => {}
        Some((ln, _)) => return Err(parse_err(origin, ln, format!("expected header `{header}`"))),
        None => return Err(parse_err(origin, 0, "empty file")),
    }
    let width = header.split(',').count();
    rows.map(|(ln, l)| {
        let f: Vec<String> = l.split(',').map(|s| s.trim().to_string()).collect();
        if f.len() != width {
            return Err(parse_err(origin, ln, format!("expected {width} fields, found {}", f.len())));
        }
        Ok((ln, f))
    })
    .collect()
}

pub fn format_snnd_values(report: &SnndReport) -> String {
    let mut out = String::from("index,snnd\n");
    for (i, v) in report.values.iter().enumerate() {
        let _ = writeln!(out, "{i},{v}");
    }
    out
}

pub fn parse_snnd_values(text: &str, origin: &str) -> Result<Vec<f64>> {
    parse_csv_rows(text, origin, "index,snnd")?.into_iter().map(|(ln, f)| parse_f64(origin, ln, &f[1])).collect()
}

pub fn format_histogram(report: &SnndReport) -> String {
    let mut out = String::from("bin_lo,bin_hi,percent\n");
    for (k, pct) in report.percentages.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", report.bin_edges[k], report.bin_edges[k + 1], pct);
    }
    out
}

/// Bin edges and percentages back from [`format_histogram`].
pub fn parse_histogram(text: &str, origin: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = parse_csv_rows(text, origin, "bin_lo,bin_hi,percent")?;
    let mut edges = Vec::new();
    let mut pct = Vec::new();
    for (i, (ln, f)) in rows.iter().enumerate() {
        if i == 0 {
            edges.push(parse_f64(origin, *ln, &f[0])?);
        }
        edges.push(parse_f64(origin, *ln, &f[1])?);
        pct.push(parse_f64(origin, *ln, &f[2])?);
    }
    Ok((edges, pct))
}

pub const SUMMARY_HEADER: &str = "frame,min,max,mean";

pub fn format_summary(rows: &[(String, &SnndReport)]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for (label, r) in rows {
        let _ = writeln!(out, "{},{},{},{}", label, r.min, r.max, r.mean);
    }
    out
}

/// `(frame, min, max, mean)` rows back from [`format_summary`].
pub fn parse_summary(text: &str, origin: &str) -> Result<Vec<(String, f64, f64, f64)>> {
    parse_csv_rows(text, origin, SUMMARY_HEADER)?
        .into_iter()
        .map(|(ln, f)| {
            Ok((
                f[0].clone(),
                parse_f64(origin, ln, &f[1])?,
                parse_f64(origin, ln, &f[2])?,
                parse_f64(origin, ln, &f[3])?,
            ))
        })
        .collect()
}

/// Writes `<stem>snnd.csv` and `<stem>histogram.csv` into `dir`.
pub fn save_snnd_report(report: &SnndReport, dir: &Path, stem: &str) -> Result<()> {
    write_text(&dir.join(format!("{stem}snnd.csv")), &format_snnd_values(report))?;
    write_text(&dir.join(format!("{stem}histogram.csv")), &format_histogram(report))
}

/// Plain-text dump of a gradient grid, one `i j gx gy gz` row per control
/// point.
pub fn format_gradient(grad: &GradientGrid) -> String {
    let mut out = format!("# gradient {} {}\n", grad.n_axial(), grad.n_circ_free());
    for i in 0..grad.n_axial() {
        for j in 0..grad.n_circ_free() {
            let g = grad.get(i, j);
            let _ = writeln!(out, "{i} {j} {} {} {}", g.x, g.y, g.z);
        }
    }
    out
}

// ---- sequences ----------------------------------------------------------

/// `label,path` rows; relative paths are taken from the manifest's folder.
pub fn parse_manifest(text: &str, origin: &str, base: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for (ln, line) in content_lines(text) {
        let (label, path) = line.split_once(',').ok_or_else(|| parse_err(origin, ln, "expected `label,path`"))?;
        let (label, path) = (label.trim(), path.trim());
        if label.is_empty() || path.is_empty() {
            return Err(parse_err(origin, ln, "empty label or path"));
        }
        let p = Path::new(path);
        out.push((label.to_string(), if p.is_absolute() { p.to_path_buf() } else { base.join(p) }));
    }
    if out.is_empty() {
        return Err(Error::arg(format!("{origin}: manifest lists no frames")));
    }
    Ok(out)
}

pub fn load_sequence(manifest: &Path) -> Result<FrameSequence> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let entries = parse_manifest(&read_text(manifest)?, &manifest.display().to_string(), base)?;
    let frames =
        entries.into_iter().map(|(label, path)| Ok((label, load_point_cloud(&path)?))).collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames)
}

/// Frame label reduced to characters that are safe in file names.
pub fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

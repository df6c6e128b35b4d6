use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use implicit_filter::error::Error as CoreError;
use implicit_filter::geom::vector::cast;
use implicit_filter::geom::{NormalizationTransform, PointCloud};
use implicit_filter::io;
use implicit_filter::mesher::{marching_cubes, sample_mesh_surface, GridSpec, ImplicitField, Mesh};
use implicit_filter::metrics::{evaluate, EdgeParams, EvalOptions, SurfaceSample};
use implicit_filter::net::{checkpoint, MlpField};
use implicit_filter::trainer::{prepare, train_from, TrainLog};
use implicit_filter::Real;
use log::{info, warn};

use crate::config::{Precision, RunConfig};
use crate::manifest::{self, Manifest};
use crate::{Cli, Command, ConfigArgs, EXIT_NUMERICAL, EXIT_USAGE};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const LOG_FILE: &str = "train_log.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const NORMALIZATION_FILE: &str = "normalization.txt";

/// Marks failures that should exit with [`EXIT_NUMERICAL`].
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Numerical(String);

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Numerical>() {
            return EXIT_NUMERICAL;
        }
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            if matches!(
                core,
                CoreError::Training { .. } | CoreError::NonFinite { .. } | CoreError::DegenerateGradient { .. }
            ) {
                return EXIT_NUMERICAL;
            }
        }
    }
    EXIT_USAGE
}

fn thread_count(cli: &Cli) -> usize {
    if cli.deterministic {
        1
    } else {
        cli.threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let threads = thread_count(cli);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| anyhow!("thread pool: {e}"))?;
    match &cli.command {
        Command::Train { input, out, config } => train(cli, threads, input, out, config),
        Command::Reconstruct {
            checkpoint,
            out,
            iso,
            resolution,
            bound,
            normalized,
        } => reconstruct(checkpoint, out, *iso, *resolution, *bound, *normalized),
        Command::Eval {
            pred,
            gt,
            samples,
            fscore_threshold,
            ecd,
            ecd_epsilon,
            ecd_sigma,
            out,
            csv,
        } => {
            let edges = ecd.then_some(EdgeParams {
                epsilon: *ecd_epsilon,
                sigma: *ecd_sigma,
            });
            eval(cli, pred, gt, *samples, *fscore_threshold, edges, out.as_deref(), csv.as_deref())
        }
        Command::Filter2d {
            curve,
            out,
            loss,
            resolution,
            bound,
            log,
            config,
        } => filter2d(cli, threads, curve, out, loss, *resolution, *bound, log.as_deref(), config),
    }
}

fn load_config(cli: &Cli, args: &ConfigArgs, base: RunConfig) -> Result<RunConfig> {
    let mut rc = base;
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        rc.apply_text(&text)
            .with_context(|| format!("in config {}", path.display()))?;
    }
    for kv in &args.overrides {
        rc.apply_override(kv)?;
    }
    if let Some(seed) = cli.seed {
        rc.train.seed = seed;
    }
    rc.train.deterministic = cli.deterministic;
    rc.validate().context("invalid configuration")?;
    Ok(rc)
}

fn write_file(path: &Path, data: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, data).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes through a temporary file so a reader never sees a partial checkpoint.
fn save_checkpoint<T: Real>(field: &MlpField<T>, path: &Path) -> Result<()> {
    let tmp = path.with_extension("bin.tmp");
    write_file(&tmp, checkpoint::encode(field))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))
}

fn write_logs(log: &TrainLog, csv: Option<&Path>, timing: Option<&Path>) -> Result<()> {
    let Some(csv) = csv else {
        return Ok(());
    };
    let f = fs::File::create(csv).with_context(|| format!("cannot write {}", csv.display()))?;
    log.write_csv(BufWriter::new(f))
        .with_context(|| format!("cannot write {}", csv.display()))?;
    if let Some(t) = timing {
        let f = fs::File::create(t).with_context(|| format!("cannot write {}", t.display()))?;
        log.write_timing_csv(BufWriter::new(f))
            .with_context(|| format!("cannot write {}", t.display()))?;
    }
    Ok(())
}

struct Fitted<T, const D: usize> {
    field: MlpField<T>,
    log: TrainLog,
    transform: NormalizationTransform<f64, D>,
}

/// Normalizes `points`, trains, and saves checkpoints to `checkpoint_path`
/// if given. On failure the last good parameters are saved there too.
fn fit<T: Real, const D: usize>(
    points: Vec<[f64; D]>,
    rc: &RunConfig,
    checkpoint_path: Option<&Path>,
    log_path: Option<&Path>,
    timing_path: Option<&Path>,
) -> Result<Fitted<T, D>> {
    let (normalized, transform) = PointCloud::<f64, D>::new(points)?.normalize()?;
    info!(
        "{} points, scale {:.6}, training {} iterations",
        normalized.len(),
        transform.scale,
        rc.train.iterations
    );
    let cloud = PointCloud::<T, D>::new(normalized.points().iter().map(|p| cast(p)).collect())?;
    let (init, queries) = prepare(&cloud, &rc.filter, &rc.train)?;
    info!("{} training queries", queries.len());
    let result = train_from(init, &cloud, &queries, &rc.filter, &rc.train, |it, f| {
        if let Some(p) = checkpoint_path {
            save_checkpoint(f, p).map_err(|e| CoreError::Input(format!("iteration {it}: {e:#}")))?;
        }
        Ok(())
    });
    match result {
        Ok((field, log)) => {
            write_logs(&log, log_path, timing_path)?;
            if let Some(p) = checkpoint_path {
                save_checkpoint(&field, p)?;
            }
            Ok(Fitted { field, log, transform })
        }
        Err(abort) => {
            write_logs(&abort.log, log_path, timing_path)?;
            if let Some(p) = checkpoint_path {
                save_checkpoint(&abort.field, p)?;
            }
            Err(abort.error).context("training aborted")
        }
    }
}

fn transform_text<const D: usize>(t: &NormalizationTransform<f64, D>) -> String {
    let c: Vec<String> = t.center.iter().map(|v| v.to_string()).collect();
    format!("center={}\nscale={}\n", c.join(","), t.scale)
}

fn parse_transform(text: &str, path: &Path) -> Result<NormalizationTransform<f64, 3>> {
    let m = Manifest::parse(text);
    let bad = || anyhow!("{}: malformed normalization file", path.display());
    let center: Vec<f64> = m
        .get("center")
        .ok_or_else(bad)?
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let scale: f64 = m.get("scale").ok_or_else(bad)?.parse().map_err(|_| bad())?;
    if center.len() != 3 || !(scale > 0.0) {
        return Err(bad());
    }
    Ok(NormalizationTransform {
        center: [center[0], center[1], center[2]],
        scale,
    })
}

fn train(cli: &Cli, threads: usize, input: &Path, out: &Path, args: &ConfigArgs) -> Result<()> {
    let points = io::read_points(input)?;
    let rc = load_config(cli, args, RunConfig::default())?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;

    let mut m = Manifest::new("train");
    m.push_input("input", input)?;
    m.push("deterministic", cli.deterministic);
    m.push("threads", threads);
    m.push_text(&rc.to_text());
    m.write(&out.join(manifest::FILE_NAME))?;

    let ckpt = out.join(CHECKPOINT_FILE);
    let log = out.join(LOG_FILE);
    let timing = out.join(TIMING_FILE);
    let (transform, last) = match rc.precision {
        Precision::F32 => {
            let f = fit::<f32, 3>(points, &rc, Some(&ckpt), Some(&log), Some(&timing))?;
            (f.transform, f.log.entries.last().map(|e| e.breakdown.total))
        }
        Precision::F64 => {
            let f = fit::<f64, 3>(points, &rc, Some(&ckpt), Some(&log), Some(&timing))?;
            (f.transform, f.log.entries.last().map(|e| e.breakdown.total))
        }
    };
    write_file(&out.join(NORMALIZATION_FILE), transform_text(&transform))?;
    if let Some(total) = last {
        info!("final loss {total:.6e}");
    }
    info!("checkpoint written to {}", ckpt.display());
    Ok(())
}

fn load_field(path: &Path) -> Result<Box<dyn ImplicitField>> {
    let data = fs::read(path).with_context(|| format!("cannot read checkpoint {}", path.display()))?;
    let decode_err = |m: String| anyhow!("{}: {m}", path.display());
    let field: Box<dyn ImplicitField> = match checkpoint::stored_width(&data) {
        Some(8) => {
            let f = checkpoint::decode::<f64>(&data).map_err(decode_err)?;
            if f.input_dim() != 3 {
                bail!("{}: expected a 3D field, found {}D", path.display(), f.input_dim());
            }
            Box::new(f)
        }
        _ => {
            let f = checkpoint::decode::<f32>(&data).map_err(decode_err)?;
            if f.input_dim() != 3 {
                bail!("{}: expected a 3D field, found {}D", path.display(), f.input_dim());
            }
            Box::new(f)
        }
    };
    Ok(field)
}

fn reconstruct(ckpt: &Path, out: &Path, iso: f64, resolution: usize, bound: f64, normalized: bool) -> Result<()> {
    let field = load_field(ckpt)?;
    let grid = GridSpec::cube(resolution, bound);
    grid.validate()?;
    match io::extension(out).as_str() {
        "obj" | "ply" => {}
        other => bail!("{}: unsupported mesh extension `{other}`", out.display()),
    }
    let mut mesh = marching_cubes(field.as_ref(), &grid, iso)?;
    let norm_path = ckpt.parent().unwrap_or(Path::new(".")).join(NORMALIZATION_FILE);
    let transform = if !normalized && norm_path.exists() {
        let text = fs::read_to_string(&norm_path).with_context(|| format!("cannot read {}", norm_path.display()))?;
        let t = parse_transform(&text, &norm_path)?;
        for v in mesh.vertices.iter_mut() {
            *v = t.invert(v);
        }
        Some(norm_path)
    } else {
        None
    };
    mesh.write(out)?;
    info!(
        "{} vertices, {} triangles written to {}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        out.display()
    );

    let mut m = Manifest::new("reconstruct");
    m.push_input("checkpoint", ckpt)?;
    m.push("iso", iso);
    m.push("resolution", resolution);
    m.push("bound", bound);
    match &transform {
        Some(p) => m.push_input("normalization", p)?,
        None => m.push("normalization", "none"),
    }
    m.write(&sidecar(out))
}

/// `<file>.manifest.txt` next to an output file.
fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.txt");
    out.with_file_name(name)
}

enum Reference {
    Mesh(Mesh),
    Points(Vec<[f64; 3]>),
}

fn load_reference(path: &Path) -> Result<Reference> {
    Ok(match io::extension(path).as_str() {
        "obj" => Reference::Mesh(Mesh::read(path)?),
        "ply" => {
            let d = io::ply::read(path)?;
            if d.faces.is_empty() {
                Reference::Points(d.vertices)
            } else {
                Reference::Mesh(Mesh::read(path)?)
            }
        }
        _ => Reference::Points(io::read_points(path)?),
    })
}

#[allow(clippy::too_many_arguments)]
fn eval(
    cli: &Cli,
    pred: &Path,
    gt: &Path,
    samples: usize,
    fscore_threshold: f64,
    edges: Option<EdgeParams>,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> Result<()> {
    if samples == 0 {
        bail!("--samples must be positive");
    }
    let seed = cli.seed.unwrap_or(0);
    let pred_mesh = Mesh::read(pred)?;
    if pred_mesh.is_empty() {
        bail!("{}: predicted mesh has no triangles", pred.display());
    }
    let (pp, pn) = sample_mesh_surface(&pred_mesh, samples, seed)?;
    let pred_sample = SurfaceSample {
        points: pp,
        normals: Some(pn),
    };
    let gt_sample = match load_reference(gt)? {
        Reference::Mesh(mesh) => {
            if mesh.is_empty() {
                bail!("{}: reference mesh has no triangles", gt.display());
            }
            let (p, n) = sample_mesh_surface(&mesh, samples, seed)?;
            SurfaceSample {
                points: p,
                normals: Some(n),
            }
        }
        Reference::Points(points) => {
            info!("reference is a point cloud; normal consistency is unavailable");
            if edges.is_some() {
                warn!("edge Chamfer distance needs a reference mesh; skipped");
            }
            SurfaceSample { points, normals: None }
        }
    };
    let opts = EvalOptions {
        fscore_threshold,
        edges,
    };
    let report = evaluate(&pred_sample, &gt_sample, &opts)?;
    if let Some(e) = report.ecd.as_ref().filter(|e| e.fallback) {
        warn!(
            "an edge set is empty (pred {}, reference {}); ECD uses the full sample in its place",
            e.pred_edges, e.gt_edges
        );
    }
    let text = report.to_key_value();
    print!("{text}");
    if let Some(path) = out {
        write_file(path, &text)?;
        let mut m = Manifest::new("eval");
        m.push_input("pred", pred)?;
        m.push_input("gt", gt)?;
        m.push("seed", seed);
        m.push("samples", samples);
        m.push("fscore_threshold", fscore_threshold);
        m.push("ecd", edges.is_some());
        m.write(&sidecar(path))?;
    }
    if let Some(path) = csv {
        write_file(path, format!("{}\n{}\n", report.csv_header(), report.csv_row()))?;
    }
    Ok(())
}

fn read_curve(path: &Path) -> Result<Vec<[f64; 2]>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut points = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|s| s.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => points.push([v[0], v[1]]),
            None if points.is_empty() && n == 0 => continue, // header
            _ => bail!("{}:{}: expected `x,y`, got `{line}`", path.display(), n + 1),
        }
    }
    if points.is_empty() {
        bail!("{}: no points", path.display());
    }
    Ok(points)
}

#[allow(clippy::too_many_arguments)]
fn filter2d(
    cli: &Cli,
    threads: usize,
    curve: &Path,
    out: &Path,
    loss: &str,
    resolution: usize,
    bound: f64,
    log: Option<&Path>,
    args: &ConfigArgs,
) -> Result<()> {
    let points = read_curve(curve)?;
    let mut base = RunConfig::default();
    base.set("loss", loss)?;
    let rc = load_config(cli, args, base)?;
    if resolution < 2 || !(bound > 0.0) {
        bail!("grid needs resolution >= 2 and a positive bound");
    }

    let grid: Vec<[f64; 2]> = (0..resolution * resolution)
        .map(|i| {
            let h = 2.0 * bound / (resolution - 1) as f64;
            [-bound + (i % resolution) as f64 * h, -bound + (i / resolution) as f64 * h]
        })
        .collect();
    let (values, transform) = match rc.precision {
        Precision::F32 => grid_values::<f32>(points, &rc, log, &grid)?,
        Precision::F64 => grid_values::<f64>(points, &rc, log, &grid)?,
    };
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Numerical(format!("non-finite field value at grid node {i}")).into());
    }

    let mut s = String::from("x,y,f\n");
    for (p, v) in grid.iter().zip(&values) {
        let q = transform.invert(p);
        s.push_str(&format!("{},{},{}\n", q[0], q[1], v * transform.scale));
    }
    write_file(out, s)?;

    let mut m = Manifest::new("filter2d");
    m.push_input("input", curve)?;
    m.push("deterministic", cli.deterministic);
    m.push("threads", threads);
    m.push("resolution", resolution);
    m.push("bound", bound);
    m.push_text(&rc.to_text());
    m.write(&sidecar(out))?;
    info!("{}x{} grid written to {}", resolution, resolution, out.display());
    Ok(())
}

fn grid_values<T: Real>(
    points: Vec<[f64; 2]>,
    rc: &RunConfig,
    log_path: Option<&Path>,
    grid: &[[f64; 2]],
) -> Result<(Vec<f64>, NormalizationTransform<f64, 2>)> {
    let fitted = fit::<T, 2>(points, rc, None, log_path, None)?;
    let pts: Vec<[T; 2]> = grid.iter().map(|p| cast(p)).collect();
    let values = pts
        .chunks(4096)
        .flat_map(|c| fitted.field.values(c))
        .map(|v| v.to_f64_lossy())
        .collect();
    Ok((values, fitted.transform))
}

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use patchloc::baselines::CandidateListGrid;
use patchloc::bench::{emit_report, run_experiment, write_outcomes, MeshSource, Method, ReportFormat, WalkConfig};
use patchloc::mesh::{load_mesh, write_gmsh22, write_native, MeshFormat};
use patchloc::{brute_force_locate, build_index, BuildConfig, LocatorIndex, MeshTopology, Point, WStarPolicy};

#[derive(Parser)]
#[command(name = "patchloc", version, about = "Particle locating on unstructured meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated mesh.
    GenMesh(GenMeshArgs),
    /// Build the locator index and report build statistics.
    Build(BuildArgs),
    /// Locate the points of a points file.
    Locate(LocateArgs),
    /// Random-walk timing experiment.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Structured,
    Mixed,
    Lshape,
}

#[derive(Args)]
struct GenMeshArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Subdivisions per axis.
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Kind::Structured)]
    kind: Kind,
    /// Vertex jitter for mixed meshes, in cell widths.
    #[arg(long, default_value_t = 0.2)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// native or gmsh; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Absolute patch radius w*.
    #[arg(long)]
    w_star: Option<f64>,
    /// Grid padding around the mesh bounding box.
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    index: IndexArgs,
    /// json or table.
    #[arg(long, default_value = "json")]
    format: String,
    /// Statistics file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-cell dump of the active cells.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LocateArgs {
    #[command(flatten)]
    index: IndexArgs,
    /// One point per line, whitespace-separated coordinates.
    #[arg(long)]
    points: PathBuf,
    /// patch, auxgrid or brute.
    #[arg(long, default_value = "patch")]
    method: Method,
    /// Outcome file, one element id (or -1) per line; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Mesh file; a generated mesh is used when omitted.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Kind::Structured)]
    kind: Kind,
    #[arg(long, default_value_t = 0.2)]
    jitter: f64,
    /// Comma-separated step scales.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0, 5.0])]
    delta: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = 10_000)]
    particles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_values_t = [Method::Patch, Method::Walk, Method::AuxGrid])]
    method: Vec<Method>,
    #[arg(long)]
    w_star: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long)]
    parallel: bool,
    /// table, csv or json.
    #[arg(long, default_value = "table")]
    format: ReportFormat,
    /// Report file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Outcome file with every located id.
    #[arg(long)]
    outcomes: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenMesh(a) => gen_mesh(a),
        Command::Build(a) => build(a),
        Command::Locate(a) => locate(a),
        Command::Bench(a) => bench(a),
    }
}

fn source(kind: Kind, dim: usize, n: usize, jitter: f64, seed: u64) -> Result<MeshSource> {
    Ok(match kind {
        Kind::Structured => MeshSource::Structured { dim, n },
        Kind::Mixed => {
            if dim != 2 {
                bail!("mixed meshes are 2D only");
            }
            MeshSource::Mixed { n, jitter, seed }
        }
        Kind::Lshape => MeshSource::LShaped { dim, n },
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn gen_mesh(a: GenMeshArgs) -> Result<()> {
    let mesh = source(a.kind, a.dim, a.n, a.jitter, a.seed)?.load()?;
    let format = match &a.format {
        Some(f) => f.parse::<MeshFormat>()?,
        None => MeshFormat::from_path(&a.out),
    };
    let text = match format {
        MeshFormat::Gmsh22 => write_gmsh22(&mesh),
        MeshFormat::Native => write_native(&mesh),
        MeshFormat::NodeEle => bail!("node/ele output is not supported; use native or gmsh"),
    };
    fs::write(&a.out, text).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!(
        "{} elements, {} vertices -> {}",
        mesh.n_elements(),
        mesh.n_vertices(),
        a.out.display()
    );
    Ok(())
}

fn w_star_policy(w: Option<f64>) -> WStarPolicy {
    w.map_or(WStarPolicy::Default, WStarPolicy::Absolute)
}

fn load(path: &Path) -> Result<Arc<MeshTopology>> {
    let mesh = load_mesh(path, MeshFormat::from_path(path)).with_context(|| format!("loading {}", path.display()))?;
    Ok(Arc::new(mesh))
}

fn index(a: &IndexArgs, seed: u64) -> Result<LocatorIndex> {
    let config = BuildConfig {
        w_star: w_star_policy(a.w_star),
        padding: a.tau,
        seed,
        ..Default::default()
    };
    Ok(build_index(load(&a.mesh)?, &config)?)
}

fn build(a: BuildArgs) -> Result<()> {
    let ix = index(&a.index, a.seed)?;
    let mut out = output(a.out.as_deref())?;
    let s = ix.stats();
    match a.format.as_str() {
        "json" => {
            let v = serde_json::json!({
                "mesh": { "dim": ix.mesh().dim(), "n_v": ix.mesh().n_vertices(), "n_e": ix.mesh().n_elements() },
                "metrics": ix.metrics(),
                "grid": ix.grid(),
                "stats": s,
            });
            serde_json::to_writer_pretty(&mut out, &v)?;
            writeln!(out)?;
        }
        "table" => {
            let m = ix.metrics();
            let g = ix.grid();
            writeln!(out, "elements        {}", ix.mesh().n_elements())?;
            writeln!(out, "h, w, w*        {:.6} {:.6} {:.6}", m.h, m.w, m.w_star)?;
            writeln!(out, "alpha (deg)     {:.3}", m.alpha.to_degrees())?;
            writeln!(out, "grid            {:?} s = {:.6}", &g.dims[..g.dim], g.s)?;
            writeln!(out, "active cells    {} of {}", s.n_active, s.n_cells)?;
            writeln!(
                out,
                "classes         interior {} edge {} face {} other {}",
                s.classes.interior, s.classes.edge, s.classes.face, s.classes.other
            )?;
            writeln!(out, "shortcut cells  {}", s.shortcut_cells)?;
            writeln!(out, "edge cells      {}", s.psi_cells)?;
            writeln!(out, "visits          {}", s.total_visits())?;
            writeln!(out, "wall time (s)   {:.6}", s.wall_s)?;
        }
        other => bail!("unknown format {other:?} (json, table)"),
    }
    out.flush()?;
    if let Some(path) = &a.dump {
        let mut w = BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
        ix.write_dump(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn read_points(path: &Path, dim: usize) -> Result<Vec<Point>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut pts = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}:{}: bad coordinate", path.display(), i + 1))?;
        if coords.len() < dim || coords.len() > 3 {
            bail!(
                "{}:{}: expected {dim} coordinates, got {}",
                path.display(),
                i + 1,
                coords.len()
            );
        }
        let mut p = [0.0; 3];
        p[..dim].copy_from_slice(&coords[..dim]);
        pts.push(p);
    }
    Ok(pts)
}

fn locate(a: LocateArgs) -> Result<()> {
    let mesh = load(&a.index.mesh)?;
    let pts = read_points(&a.points, mesh.dim())?;
    let ids: Vec<i64> = match a.method {
        Method::Patch => {
            let config = BuildConfig {
                w_star: w_star_policy(a.index.w_star),
                padding: a.index.tau,
                ..Default::default()
            };
            let ix = build_index(mesh, &config)?;
            pts.iter()
                .map(|&p| ix.locate(p).map(|o| o.code()))
                .collect::<Result<_, _>>()?
        }
        Method::AuxGrid => {
            let g = CandidateListGrid::new(mesh, None)?;
            pts.iter().map(|&p| g.locate(p).code()).collect()
        }
        Method::Brute => pts.iter().map(|&p| brute_force_locate(p, &mesh).code()).collect(),
        Method::Walk => bail!("the walk needs a start element; use patch, auxgrid or brute"),
    };
    let mut out = output(a.out.as_deref())?;
    for id in ids {
        writeln!(out, "{id}")?;
    }
    out.flush()?;
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let mesh = match &a.mesh {
        Some(p) => MeshSource::File { path: p.clone() },
        None => source(a.kind, a.dim, a.n, a.jitter, a.seed)?,
    };
    let config = WalkConfig {
        particles: a.particles,
        steps: a.steps,
        deltas: a.delta,
        seed: a.seed,
        methods: a.method,
        mesh,
        w_star: w_star_policy(a.w_star),
        padding: a.tau,
        timing_reps: a.reps,
        parallel: a.parallel,
    };
    let run = run_experiment(&config)?;
    let mut out = output(a.out.as_deref())?;
    out.write_all(&emit_report(&run.report, a.format))?;
    out.flush()?;
    if let Some(path) = &a.outcomes {
        let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_outcomes(&run.outcomes, &mut f)?;
    }
    Ok(())
}

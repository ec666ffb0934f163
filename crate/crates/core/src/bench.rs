//! Random-walk locate experiments: shared particle trajectories, per-method
//! timings and a brute-force cross-check on a small subsample of every step.

use std::convert::Infallible;
use std::fmt::{self, Write as _};
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{brute_force_locate, default_tol, CandidateListGrid, WalkError, WalkLocator};
use crate::geom::{self, Point};
use crate::grid::GridError;
use crate::index::{build_index, BuildConfig, BuildError, BuildStats, LocatorIndex};
use crate::locator::{LocateError, LocateOutcome};
use crate::mesh::{
    element_quality, generate_l_shaped_mesh, generate_mixed_mesh, generate_structured_mesh, load_mesh, MeshError,
    MeshFormat, MeshTopology, WStarPolicy,
};

/// Rejection attempts per particle per step before giving up.
pub const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Locate(#[from] LocateError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("particle {particle} at step {step}: no position in the domain after {attempts} attempts")]
    Rejection {
        particle: usize,
        step: usize,
        attempts: usize,
    },
    #[error(
        "cross-check failed for {method} (delta {delta}, step {step}, particle {particle}) at {point:?}: got {got}, brute force {want}; trajectory {trace:?}"
    )]
    CrossCheck {
        method: Method,
        delta: f64,
        step: usize,
        particle: usize,
        point: Point,
        got: i64,
        want: i64,
        trace: Vec<Point>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Patch,
    Walk,
    AuxGrid,
    Brute,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Patch, Method::Walk, Method::AuxGrid, Method::Brute];

    pub fn name(self) -> &'static str {
        match self {
            Method::Patch => "patch",
            Method::Walk => "walk",
            Method::AuxGrid => "auxgrid",
            Method::Brute => "brute",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "patch" => Ok(Method::Patch),
            "walk" => Ok(Method::Walk),
            "auxgrid" | "aux-grid" | "aux" => Ok(Method::AuxGrid),
            "brute" | "brute-force" => Ok(Method::Brute),
            _ => Err(format!("unknown method {s:?} (patch, walk, auxgrid, brute)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeshSource {
    /// Unit square or cube, `n` subdivisions per axis.
    Structured {
        dim: usize,
        n: usize,
    },
    /// Unit square with jittered vertices, triangles and quads.
    Mixed {
        n: usize,
        jitter: f64,
        seed: u64,
    },
    LShaped {
        dim: usize,
        n: usize,
    },
    File {
        path: PathBuf,
    },
}

impl Default for MeshSource {
    fn default() -> Self {
        MeshSource::Structured { dim: 2, n: 40 }
    }
}

impl MeshSource {
    pub fn load(&self) -> Result<MeshTopology, MeshError> {
        match self {
            MeshSource::Structured { dim, n } => generate_structured_mesh(*dim, [0.0; 3], [1.0; 3], *n),
            MeshSource::Mixed { n, jitter, seed } => generate_mixed_mesh(*n, *jitter, *seed),
            MeshSource::LShaped { dim, n } => generate_l_shaped_mesh(*dim, *n),
            MeshSource::File { path } => load_mesh(path, MeshFormat::from_path(path)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub particles: usize,
    pub steps: usize,
    /// Step scales; every method runs on every delta.
    pub deltas: Vec<f64>,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub mesh: MeshSource,
    pub w_star: WStarPolicy,
    /// Grid padding for the patch index; `None` uses the index default.
    pub padding: Option<f64>,
    /// Repetitions of each timed loop; per step the fastest is reported.
    pub timing_reps: usize,
    pub parallel: bool,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            particles: 10_000,
            steps: 10,
            deltas: vec![0.1, 1.0, 5.0],
            seed: 0,
            methods: vec![Method::Patch, Method::Walk, Method::AuxGrid],
            mesh: MeshSource::default(),
            w_star: WStarPolicy::Default,
            padding: None,
            timing_reps: 3,
            parallel: false,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidConfig(m.to_string()));
        if self.particles == 0 {
            return bad("particles must be at least 1");
        }
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return bad("every delta must be positive and finite");
        }
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        if self.timing_reps == 0 {
            return bad("timing_reps must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub dim: usize,
    pub n_v: usize,
    pub n_e: usize,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub method: Method,
    pub delta: f64,
    pub init_s: f64,
    pub locate_s: f64,
    pub step_s: Vec<f64>,
    /// Grid spacing of the method's own grid, if it has one.
    pub s: Option<f64>,
    pub checks: usize,
    pub checks_passed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: Option<WalkConfig>,
    pub mesh: MeshStats,
    /// Patch-index build statistics when the patch method ran.
    pub grid: Option<BuildStats>,
    pub runs: Vec<MethodRun>,
}

/// Located ids of one method on one delta, `ids[step][particle]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSet {
    pub method: Method,
    pub delta: f64,
    pub ids: Vec<Vec<i64>>,
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub report: BenchReport,
    pub outcomes: Vec<OutcomeSet>,
}

/// Particle positions and oracle hosts, `positions[t][i]` for t in 0..=steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub delta: f64,
    pub positions: Vec<Vec<Point>>,
    pub hosts: Vec<Vec<u32>>,
    /// Particles cross-checked at each step (index t-1 for step t).
    pub checks: Vec<Vec<usize>>,
}

fn displacement(rng: &mut ChaCha8Rng, dim: usize, r_max: f64) -> Point {
    let r = rng.gen::<f64>() * r_max;
    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
    if dim == 2 {
        [r * theta.cos(), r * theta.sin(), 0.0]
    } else {
        let polar = rng.gen::<f64>() * std::f64::consts::PI;
        [
            r * polar.sin() * theta.cos(),
            r * polar.sin() * theta.sin(),
            r * polar.cos(),
        ]
    }
}

/// Deterministic trajectories for one delta. The oracle decides membership
/// in the domain and supplies the hosts whose h_K scales each move.
pub fn generate_trajectory(
    oracle: &CandidateListGrid,
    config: &WalkConfig,
    delta: f64,
) -> Result<Trajectory, BenchError> {
    let mesh = oracle.mesh();
    let dim = mesh.dim();
    let h_k: Vec<f64> = (0..mesh.n_elements())
        .map(|k| element_quality(mesh, k).diameter)
        .collect();
    let bb = mesh.bbox();
    let n = config.particles;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0);
    let mut check_rng = ChaCha8Rng::seed_from_u64(config.seed);
    check_rng.set_stream(1);

    let mut start = Vec::with_capacity(n);
    let mut start_hosts = Vec::with_capacity(n);
    for i in 0..n {
        let mut found = None;
        for _ in 0..MAX_ATTEMPTS {
            let mut p = [0.0; 3];
            for a in 0..dim {
                p[a] = bb.lo[a] + rng.gen::<f64>() * (bb.hi[a] - bb.lo[a]);
            }
            if let LocateOutcome::Inside(k) = oracle.locate(p) {
                found = Some((p, k as u32));
                break;
            }
        }
        let (p, k) = found.ok_or(BenchError::Rejection {
            particle: i,
            step: 0,
            attempts: MAX_ATTEMPTS,
        })?;
        start.push(p);
        start_hosts.push(k);
    }

    let n_checks = n.div_ceil(100);
    let mut positions = vec![start];
    let mut hosts = vec![start_hosts];
    let mut checks = Vec::with_capacity(config.steps);
    for step in 1..=config.steps {
        let (prev, prev_hosts) = (&positions[step - 1], &hosts[step - 1]);
        let mut next = Vec::with_capacity(n);
        let mut next_hosts = Vec::with_capacity(n);
        for i in 0..n {
            let r_max = delta * h_k[prev_hosts[i] as usize];
            let mut found = None;
            for _ in 0..MAX_ATTEMPTS {
                let q = geom::add(prev[i], displacement(&mut rng, dim, r_max));
                if let LocateOutcome::Inside(k) = oracle.locate(q) {
                    found = Some((q, k as u32));
                    break;
                }
            }
            let (q, k) = found.ok_or(BenchError::Rejection {
                particle: i,
                step,
                attempts: MAX_ATTEMPTS,
            })?;
            next.push(q);
            next_hosts.push(k);
        }
        let mut picked = sample(&mut check_rng, n, n_checks).into_vec();
        picked.sort_unstable();
        checks.push(picked);
        positions.push(next);
        hosts.push(next_hosts);
    }
    Ok(Trajectory {
        delta,
        positions,
        hosts,
        checks,
    })
}

enum Prepared {
    Patch(LocatorIndex),
    Walk(WalkLocator),
    AuxGrid(CandidateListGrid),
    Brute(Arc<MeshTopology>),
}

impl Prepared {
    fn new(method: Method, mesh: &Arc<MeshTopology>, config: &WalkConfig) -> Result<Self, BenchError> {
        Ok(match method {
            Method::Patch => {
                let bc = BuildConfig {
                    w_star: config.w_star,
                    padding: config.padding,
                    seed: config.seed,
                    parallel: config.parallel,
                    ..Default::default()
                };
                Prepared::Patch(build_index(mesh.clone(), &bc)?)
            }
            Method::Walk => Prepared::Walk(WalkLocator::new(mesh.clone())),
            Method::AuxGrid => Prepared::AuxGrid(CandidateListGrid::new(mesh.clone(), None)?),
            Method::Brute => Prepared::Brute(mesh.clone()),
        })
    }

    fn spacing(&self) -> Option<f64> {
        match self {
            Prepared::Patch(ix) => Some(ix.grid().s),
            Prepared::AuxGrid(g) => Some(g.grid().s),
            _ => None,
        }
    }
}

fn sweep<E, F>(n: usize, parallel: bool, f: F) -> Result<Vec<i64>, E>
where
    E: Send,
    F: Fn(usize) -> Result<i64, E> + Sync + Send,
{
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(f(i)?);
        }
        Ok(out)
    }
}

/// Locates step `t` of the trajectory; the walk starts from step t-1's host.
fn locate_step(prep: &Prepared, traj: &Trajectory, t: usize, parallel: bool) -> Result<Vec<i64>, BenchError> {
    let pts = &traj.positions[t];
    let n = pts.len();
    Ok(match prep {
        Prepared::Patch(ix) => sweep(n, parallel, |i| ix.locate(pts[i]).map(LocateOutcome::code))?,
        Prepared::Walk(w) => {
            let (prev, hosts) = (&traj.positions[t - 1], &traj.hosts[t - 1]);
            sweep(n, parallel, |i| {
                w.walk(hosts[i] as usize, prev[i], pts[i]).map(|r| r.outcome.code())
            })?
        }
        Prepared::AuxGrid(g) => {
            let Ok(ids) = sweep(n, parallel, |i| Ok::<_, Infallible>(g.locate(pts[i]).code()));
            ids
        }
        Prepared::Brute(m) => {
            let Ok(ids) = sweep(n, parallel, |i| {
                Ok::<_, Infallible>(brute_force_locate(pts[i], m).code())
            });
            ids
        }
    })
}

fn cross_check(
    mesh: &MeshTopology,
    method: Method,
    traj: &Trajectory,
    t: usize,
    ids: &[i64],
) -> Result<usize, BenchError> {
    let tol = default_tol(mesh);
    for &i in &traj.checks[t - 1] {
        let p = traj.positions[t][i];
        let want = brute_force_locate(p, mesh);
        let ok = match (ids[i], want) {
            (k, LocateOutcome::Inside(_)) if k >= 0 => mesh.contains(k as usize, p, tol),
            (-1, LocateOutcome::Outside) => true,
            _ => false,
        };
        if !ok {
            return Err(BenchError::CrossCheck {
                method,
                delta: traj.delta,
                step: t,
                particle: i,
                point: p,
                got: ids[i],
                want: want.code(),
                trace: traj.positions[..=t].iter().map(|s| s[i]).collect(),
            });
        }
    }
    Ok(traj.checks[t - 1].len())
}

/// Runs every configured method on every delta over one shared trajectory
/// stream per delta.
pub fn run_experiment(config: &WalkConfig) -> Result<BenchRun, BenchError> {
    config.validate()?;
    let mesh = Arc::new(config.mesh.load()?);
    run_experiment_on(mesh, config)
}

pub fn run_experiment_on(mesh: Arc<MeshTopology>, config: &WalkConfig) -> Result<BenchRun, BenchError> {
    config.validate()?;
    let h = (0..mesh.n_elements())
        .map(|k| element_quality(&mesh, k).diameter)
        .fold(0.0, f64::max);
    let mut report = BenchReport {
        config: Some(config.clone()),
        mesh: MeshStats {
            dim: mesh.dim(),
            n_v: mesh.n_vertices(),
            n_e: mesh.n_elements(),
            h,
        },
        grid: None,
        runs: Vec::new(),
    };

    let mut prepared = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let mut best = f64::INFINITY;
        let mut prep = None;
        for _ in 0..config.timing_reps {
            let t0 = Instant::now();
            let p = Prepared::new(method, &mesh, config)?;
            best = best.min(t0.elapsed().as_secs_f64());
            prep = Some(p);
        }
        let prep = prep.expect("timing_reps >= 1");
        if let Prepared::Patch(ix) = &prep {
            report.grid.get_or_insert_with(|| ix.stats().clone());
        }
        prepared.push((method, best, prep));
    }

    let oracle = CandidateListGrid::new(mesh.clone(), None)?;
    let trajectories: Vec<Trajectory> = config
        .deltas
        .iter()
        .map(|&d| generate_trajectory(&oracle, config, d))
        .collect::<Result<_, _>>()?;

    // repetitions outermost, so a slow spell of the machine costs one
    // repetition of every configuration rather than all of one
    let n_runs = trajectories.len() * prepared.len();
    let mut step_s = vec![vec![f64::INFINITY; config.steps]; n_runs];
    let mut ids: Vec<Vec<Vec<i64>>> = vec![Vec::with_capacity(config.steps); n_runs];
    for rep in 0..config.timing_reps {
        for (ti, traj) in trajectories.iter().enumerate() {
            for (mi, (_, _, prep)) in prepared.iter().enumerate() {
                let r = ti * prepared.len() + mi;
                for t in 1..=config.steps {
                    let t0 = Instant::now();
                    let out = locate_step(prep, traj, t, config.parallel)?;
                    step_s[r][t - 1] = step_s[r][t - 1].min(t0.elapsed().as_secs_f64());
                    if rep == 0 {
                        ids[r].push(out);
                    }
                }
            }
        }
    }

    let mut outcomes = Vec::with_capacity(n_runs);
    for (ti, traj) in trajectories.iter().enumerate() {
        for (mi, (method, init_s, prep)) in prepared.iter().enumerate() {
            let r = ti * prepared.len() + mi;
            let ids = std::mem::take(&mut ids[r]);
            let mut checks = 0;
            for t in 1..=config.steps {
                checks += cross_check(&mesh, *method, traj, t, &ids[t - 1])?;
            }
            let step_s = std::mem::take(&mut step_s[r]);
            report.runs.push(MethodRun {
                method: *method,
                delta: traj.delta,
                init_s: *init_s,
                locate_s: step_s.iter().sum(),
                step_s,
                s: prep.spacing(),
                checks,
                checks_passed: checks,
            });
            outcomes.push(OutcomeSet {
                method: *method,
                delta: traj.delta,
                ids,
            });
        }
    }
    Ok(BenchRun { report, outcomes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown format {s:?} (table, csv, json)")),
        }
    }
}

pub const CSV_HEADER: &str = "method,delta,init_s,locate_s,n_e,h,s,checks_passed";

pub fn emit_report(report: &BenchReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => serde_json::to_vec_pretty(report).expect("report serializes"),
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in &report.runs {
                let s = r.s.map(|s| s.to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.method, r.delta, r.init_s, r.locate_s, report.mesh.n_e, report.mesh.h, s, r.checks_passed
                );
            }
            out.into_bytes()
        }
        ReportFormat::Table => table(report).into_bytes(),
    }
}

/// Methods as rows, init time then locate time per delta as columns.
fn table(report: &BenchReport) -> String {
    let mut deltas: Vec<f64> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for r in &report.runs {
        if !deltas.contains(&r.delta) {
            deltas.push(r.delta);
        }
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "n_e = {}, h = {:.6}", report.mesh.n_e, report.mesh.h);
    let _ = write!(out, "{:<10}{:>12}", "method", "init_s");
    for d in &deltas {
        let _ = write!(out, "{:>14}", format!("delta={d}"));
    }
    out.push('\n');
    for m in methods {
        let init = report.runs.iter().find(|r| r.method == m).map_or(0.0, |r| r.init_s);
        let _ = write!(out, "{:<10}{:>12.6}", m.name(), init);
        for d in &deltas {
            match report.runs.iter().find(|r| r.method == m && r.delta == *d) {
                Some(r) => {
                    let _ = write!(out, "{:>14.6}", r.locate_s);
                }
                None => {
                    let _ = write!(out, "{:>14}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

/// One id per line (-1 for outside), method by method, delta by delta,
/// step by step.
pub fn write_outcomes(outcomes: &[OutcomeSet], out: &mut impl Write) -> io::Result<()> {
    let mut w = io::BufWriter::new(out);
    for set in outcomes {
        for step in &set.ids {
            for id in step {
                writeln!(w, "{id}")?;
            }
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(methods: Vec<Method>) -> WalkConfig {
        WalkConfig {
            particles: 200,
            steps: 3,
            deltas: vec![0.1, 2.0],
            seed: 7,
            methods,
            mesh: MeshSource::Structured { dim: 2, n: 6 },
            timing_reps: 1,
            ..Default::default()
        }
    }

    #[test]
    fn single_particle_is_deterministic() {
        let cfg = WalkConfig {
            particles: 1,
            steps: 1,
            deltas: vec![0.1],
            seed: 3,
            methods: Method::ALL.to_vec(),
            mesh: MeshSource::Structured { dim: 3, n: 2 },
            timing_reps: 1,
            ..Default::default()
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        assert!(a.report.runs.iter().all(|r| r.checks == 1 && r.checks_passed == 1));
    }

    #[test]
    fn methods_agree_on_shared_trajectories() {
        let run = run_experiment(&small(Method::ALL.to_vec())).unwrap();
        let mesh = small(vec![]).mesh.load().unwrap();
        for set in &run.outcomes {
            assert_eq!(set.ids.len(), 3);
            for ids in &set.ids {
                assert!(ids.iter().all(|&k| k >= 0 && (k as usize) < mesh.n_elements()));
            }
        }
        // every id contains its particle, so methods can differ only on shared facets
        let brute = run
            .outcomes
            .iter()
            .find(|s| s.method == Method::Brute && s.delta == 2.0)
            .unwrap();
        let aux = run
            .outcomes
            .iter()
            .find(|s| s.method == Method::AuxGrid && s.delta == 2.0)
            .unwrap();
        assert_eq!(brute.ids, aux.ids);
    }

    #[test]
    fn parallel_locate_keeps_ids() {
        let seq = run_experiment(&small(vec![Method::Patch, Method::Walk])).unwrap();
        let par = run_experiment(&WalkConfig {
            parallel: true,
            ..small(vec![Method::Patch, Method::Walk])
        })
        .unwrap();
        assert_eq!(seq.outcomes, par.outcomes);
    }

    #[test]
    fn trajectories_respect_protocol() {
        for source in [
            MeshSource::LShaped { dim: 2, n: 6 },
            MeshSource::Structured { dim: 3, n: 3 },
        ] {
            let mesh = Arc::new(source.load().unwrap());
            let oracle = CandidateListGrid::new(mesh.clone(), None).unwrap();
            let cfg = WalkConfig {
                particles: 300,
                steps: 4,
                mesh: source,
                ..Default::default()
            };
            let traj = generate_trajectory(&oracle, &cfg, 3.0).unwrap();
            for t in 1..=4 {
                for i in 0..300 {
                    let k = traj.hosts[t - 1][i] as usize;
                    let step = geom::dist(traj.positions[t][i], traj.positions[t - 1][i]);
                    assert!(step <= 3.0 * element_quality(&mesh, k).diameter);
                    assert!(mesh.contains(traj.hosts[t][i] as usize, traj.positions[t][i], default_tol(&mesh)));
                }
                assert_eq!(traj.checks[t - 1].len(), 3);
            }
            assert_eq!(traj, generate_trajectory(&oracle, &cfg, 3.0).unwrap());
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for cfg in [
            WalkConfig {
                particles: 0,
                ..Default::default()
            },
            WalkConfig {
                steps: 0,
                ..Default::default()
            },
            WalkConfig {
                deltas: vec![0.0],
                ..Default::default()
            },
            WalkConfig {
                deltas: vec![],
                ..Default::default()
            },
            WalkConfig {
                methods: vec![],
                ..Default::default()
            },
        ] {
            assert!(matches!(run_experiment(&cfg), Err(BenchError::InvalidConfig(_))));
        }
    }

    #[test]
    fn report_formats() {
        let empty = BenchReport::default();
        assert_eq!(
            emit_report(&empty, ReportFormat::Csv),
            format!("{CSV_HEADER}\n").into_bytes()
        );

        let run = run_experiment(&small(vec![Method::Patch, Method::Walk, Method::AuxGrid])).unwrap();
        let json = emit_report(&run.report, ReportFormat::Json);
        let back: BenchReport = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, run.report);

        let csv = String::from_utf8(emit_report(&run.report, ReportFormat::Csv)).unwrap();
        assert_eq!(csv.lines().count(), 1 + 6);
        assert!(csv.lines().nth(2).unwrap().starts_with("walk,0.1,"));

        let table = String::from_utf8(emit_report(&run.report, ReportFormat::Table)).unwrap();
        let header = table.lines().nth(1).unwrap();
        assert!(header.contains("init_s") && header.contains("delta=0.1") && header.contains("delta=2"));
        assert_eq!(table.lines().count(), 2 + 3);

        for r in &run.report.runs {
            let sum: f64 = r.step_s.iter().sum();
            assert!((sum - r.locate_s).abs() <= 1e-9);
        }
    }

    #[test]
    fn outcome_file_layout() {
        let run = run_experiment(&small(vec![Method::Patch])).unwrap();
        let mut buf = Vec::new();
        write_outcomes(&run.outcomes, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2 * 3 * 200);
        assert!(text.lines().all(|l| l.parse::<i64>().is_ok()));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}

//! Index construction: cell-to-vertex (`phi`) and cell-to-edge (`psi`) maps,
//! host shortcuts, and the angular fans searched at query time.

mod build2d;
mod build3d;
pub mod check;
mod fans;

pub use fans::{build_edge_fan, build_vertex_fan, EdgeFan, FanTable, VertexFan, EXTERIOR};

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, GeomError, Point};
use crate::grid::{flags, mark_active_cells, CellTable, GridError, GridSpec, NONE};
use crate::mesh::{compute_metrics, MeshError, MeshMetrics, MeshTopology, WStarPolicy};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("{what} fan {id}: {message}")]
    Fan { what: String, id: usize, message: String },
    #[error("cell {cell}: {faces} intersecting faces but no element owns two of them")]
    NoSharedEdge { cell: usize, faces: usize },
    #[error("active cell {0} has no vertex assigned")]
    UnsetPhi(usize),
    #[error("expected a {expected}D mesh, got {got}D")]
    Dimension { expected: usize, got: usize },
    #[error("{count} {what} exceed the packed id range")]
    TooLarge { what: &'static str, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub w_star: WStarPolicy,
    /// Geometric tolerance as a fraction of h.
    pub tol_factor: f64,
    /// Background-box padding; defaults to 5% of the largest extent.
    pub padding: Option<f64>,
    /// Recorded only; the build is deterministic.
    pub seed: u64,
    /// Compute passes on the rayon pool. Results are applied in id order, so
    /// the tables are identical either way.
    pub parallel: bool,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            w_star: WStarPolicy::Default,
            tol_factor: 1e-12,
            padding: None,
            seed: 0,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellClasses {
    /// Cells meeting no edge (2D) or no face (3D).
    pub interior: usize,
    /// 3D: circumscribed ball meets an edge.
    pub edge: usize,
    /// 3D: meets faces, at most one per element.
    pub face: usize,
    /// Remaining active cells.
    pub other: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub n_cells: usize,
    pub n_active: usize,
    pub classes: CellClasses,
    pub shortcut_cells: usize,
    pub psi_cells: usize,
    pub near_boundary_cells: usize,
    pub fallback_cells: usize,
    pub active_visits: u64,
    pub edge_visits: u64,
    pub face_visits: u64,
    pub element_visits: u64,
    pub wall_s: f64,
}

impl BuildStats {
    pub fn total_visits(&self) -> u64 {
        self.active_visits + self.edge_visits + self.face_visits + self.element_visits
    }
}

/// Query-time state for one mesh.
#[derive(Debug, Clone)]
pub struct LocatorIndex {
    pub(crate) mesh: Arc<MeshTopology>,
    pub(crate) metrics: MeshMetrics,
    pub(crate) grid: GridSpec,
    pub(crate) table: CellTable,
    /// Per vertex in 2D, per edge in 3D.
    pub(crate) fans: FanTable,
    /// 3D: in-plane axes `(u, v)` of each edge's fan plane.
    pub(crate) bases: Vec<[Point; 2]>,
    pub(crate) tol: f64,
    pub(crate) stats: BuildStats,
    /// One packed word per cell, see [`code`].
    pub(crate) codes: Vec<u32>,
    pub(crate) inv_s: f64,
}

/// Query-time cell words: 0 for inactive cells, otherwise a tag naming what
/// the low 29 bits hold, plus a near-boundary bit.
pub(crate) mod code {
    use crate::grid::{CellEntry, NONE};

    pub const ID: u32 = (1 << 29) - 1;
    pub const TAG: u32 = 3 << 29;
    pub const HOST: u32 = 1 << 29;
    pub const EDGE: u32 = 2 << 29;
    pub const VERTEX: u32 = 3 << 29;
    pub const NEAR: u32 = 1 << 31;

    pub fn pack(c: &CellEntry) -> u32 {
        if !c.is_active() {
            return 0;
        }
        let near = if c.near_boundary() { NEAR } else { 0 };
        let word = if c.host != NONE {
            HOST | c.host
        } else if c.psi != NONE {
            EDGE | c.psi
        } else {
            VERTEX | c.phi
        };
        word | near
    }
}

impl LocatorIndex {
    pub fn mesh(&self) -> &MeshTopology {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<MeshTopology> {
        &self.mesh
    }

    pub fn metrics(&self) -> &MeshMetrics {
        &self.metrics
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn table(&self) -> &CellTable {
        &self.table
    }

    pub fn stats(&self) -> &BuildStats {
        &self.stats
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Fan of vertex `v` (2D) or edge `e` (3D): ascending angles and payloads.
    pub fn fan(&self, id: usize) -> (&[f64], &[u32]) {
        self.fans.get(id)
    }

    pub fn max_fan_size(&self) -> usize {
        self.fans.max_size()
    }

    /// Text dump of the active cells: one `cell active phi psi host` row per
    /// cell, `-1` for unset entries.
    pub fn write_dump(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "# dims {} {} {} s {:?} lo {:?} {:?} {:?}",
            self.grid.dims[0],
            self.grid.dims[1],
            self.grid.dims[2],
            self.grid.s,
            self.grid.lo[0],
            self.grid.lo[1],
            self.grid.lo[2]
        )?;
        writeln!(out, "# cell active phi psi host")?;
        let f = |x: u32| if x == NONE { -1 } else { x as i64 };
        for (i, c) in self.table.cells.iter().enumerate() {
            if c.is_active() {
                writeln!(out, "{} 1 {} {} {}", i, f(c.phi), f(c.psi), f(c.host))?;
            }
        }
        Ok(())
    }
}

/// Computes metrics and grid from `config`, then runs the dimension's build.
pub fn build_index(mesh: Arc<MeshTopology>, config: &BuildConfig) -> Result<LocatorIndex, BuildError> {
    let start = Instant::now();
    let metrics = compute_metrics(&mesh, config.w_star)?;
    let grid = GridSpec::from_metrics(&metrics, mesh.bbox(), config.padding)?;
    let mut index = if mesh.dim() == 2 {
        build_index_2d(mesh, metrics, grid, config)?
    } else {
        build_index_3d(mesh, metrics, grid, config)?
    };
    index.stats.wall_s = start.elapsed().as_secs_f64();
    Ok(index)
}

pub fn build_index_2d(
    mesh: Arc<MeshTopology>,
    metrics: MeshMetrics,
    grid: GridSpec,
    config: &BuildConfig,
) -> Result<LocatorIndex, BuildError> {
    if mesh.dim() != 2 {
        return Err(BuildError::Dimension {
            expected: 2,
            got: mesh.dim(),
        });
    }
    let start = Instant::now();
    let mut b = Builder::new(mesh, metrics, grid, config);
    build2d::run(&mut b)?;
    let mut index = b.finish()?;
    index.stats.wall_s = start.elapsed().as_secs_f64();
    Ok(index)
}

pub fn build_index_3d(
    mesh: Arc<MeshTopology>,
    metrics: MeshMetrics,
    grid: GridSpec,
    config: &BuildConfig,
) -> Result<LocatorIndex, BuildError> {
    if mesh.dim() != 3 {
        return Err(BuildError::Dimension {
            expected: 3,
            got: mesh.dim(),
        });
    }
    let start = Instant::now();
    let mut b = Builder::new(mesh, metrics, grid, config);
    build3d::run(&mut b)?;
    let mut index = b.finish()?;
    index.stats.wall_s = start.elapsed().as_secs_f64();
    Ok(index)
}

pub(crate) mod hit {
    pub const EDGE: u8 = 1;
    pub const FACE: u8 = 2;
    pub const TWO_FACES: u8 = 4;
}

pub(crate) struct Builder {
    pub mesh: Arc<MeshTopology>,
    pub metrics: MeshMetrics,
    pub grid: GridSpec,
    pub table: CellTable,
    pub hits: Vec<u8>,
    pub fans: FanTable,
    pub bases: Vec<[Point; 2]>,
    pub tol: f64,
    pub parallel: bool,
    pub stats: BuildStats,
}

impl Builder {
    fn new(mesh: Arc<MeshTopology>, metrics: MeshMetrics, grid: GridSpec, config: &BuildConfig) -> Self {
        let mut table = CellTable::new(&grid);
        let mut stats = BuildStats {
            n_cells: grid.n_cells(),
            ..Default::default()
        };
        stats.active_visits = mark_active_cells(&mesh, &grid, &mut table);
        Self {
            hits: vec![0; grid.n_cells()],
            tol: config.tol_factor * metrics.h,
            mesh,
            metrics,
            grid,
            table,
            fans: FanTable::default(),
            bases: Vec::new(),
            parallel: config.parallel,
            stats,
        }
    }

    /// Maps `f` over `0..n`, on the rayon pool when enabled; output order is
    /// always by id.
    pub fn map_ids<T: Send>(&self, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        if self.parallel {
            (0..n).into_par_iter().map(f).collect()
        } else {
            (0..n).map(f).collect()
        }
    }

    /// Element pass shared by both dimensions: cells whose corners all lie in
    /// the closed element get it as host shortcut.
    pub fn element_pass(&mut self) {
        let mesh = &self.mesh;
        let grid = &self.grid;
        let per_element = self.map_ids(mesh.n_elements(), |k| {
            let pts: Vec<Point> = mesh.element_points(k).collect();
            let bb = geom::Aabb::from_points(pts.iter());
            let mut cells = Vec::new();
            let mut visits = 0u64;
            for c in grid.cells_in(grid.cell_range(&bb)) {
                visits += 1;
                if grid.cell_corners(c).into_iter().all(|q| mesh.contains(k, q, 0.0)) {
                    cells.push(grid.linear(c) as u32);
                }
            }
            (cells, visits)
        });
        for (k, (cells, visits)) in per_element.into_iter().enumerate() {
            self.stats.element_visits += visits;
            let el = self.mesh.element(k);
            let low_v = *el.iter().min().expect("non-empty element") as u32;
            let low_e = if self.mesh.dim() == 3 {
                *self.mesh.element_edges(k).iter().min().expect("tetrahedron edges") as u32
            } else {
                NONE
            };
            for idx in cells {
                let c = self.table.get_mut(idx as usize);
                c.host = k as u32;
                c.phi = low_v;
                if low_e != NONE {
                    c.psi = low_e;
                }
            }
        }
    }

    /// Gives every active cell still lacking a vertex the nearest vertex of
    /// the element hosting its center (or of the whole mesh).
    pub fn fallback_pass(&mut self) {
        let missing: Vec<usize> = (0..self.table.cells.len())
            .filter(|&i| {
                let c = self.table.get(i);
                c.is_active() && c.phi == NONE
            })
            .collect();
        for idx in missing {
            let center = self.grid.cell_center(self.grid.unlinear(idx));
            let host = (0..self.mesh.n_elements()).find(|&k| self.mesh.contains(k, center, self.tol));
            let candidates: Vec<usize> = match host {
                Some(k) => self.mesh.element(k).to_vec(),
                None => (0..self.mesh.n_vertices()).collect(),
            };
            let best = candidates
                .into_iter()
                .min_by(|&a, &b| {
                    geom::dist(self.mesh.vertex(a), center).total_cmp(&geom::dist(self.mesh.vertex(b), center))
                })
                .expect("mesh has vertices");
            let c = self.table.get_mut(idx);
            c.phi = best as u32;
            c.flags |= flags::NEAR_BOUNDARY;
            self.stats.fallback_cells += 1;
        }
    }

    fn finish(mut self) -> Result<LocatorIndex, BuildError> {
        let dim = self.mesh.dim();
        let mut classes = CellClasses::default();
        for (i, c) in self.table.cells.iter().enumerate() {
            if !c.is_active() {
                continue;
            }
            if c.phi == NONE {
                return Err(BuildError::UnsetPhi(i));
            }
            let h = self.hits[i];
            if dim == 2 {
                if h & hit::EDGE == 0 {
                    classes.interior += 1;
                } else {
                    classes.other += 1;
                }
            } else if h & hit::FACE == 0 {
                classes.interior += 1;
            } else if h & hit::EDGE != 0 {
                classes.edge += 1;
            } else if h & hit::TWO_FACES == 0 {
                classes.face += 1;
            } else {
                classes.other += 1;
            }
            self.stats.n_active += 1;
            self.stats.shortcut_cells += (c.host != NONE) as usize;
            self.stats.psi_cells += (c.psi != NONE) as usize;
            self.stats.near_boundary_cells += c.near_boundary() as usize;
        }
        self.stats.classes = classes;
        for (what, count) in [
            ("elements", self.mesh.n_elements()),
            ("vertices", self.mesh.n_vertices()),
            ("edges", self.mesh.n_edges()),
        ] {
            if count > code::ID as usize {
                return Err(BuildError::TooLarge { what, count });
            }
        }
        let codes = self.table.cells.iter().map(code::pack).collect();
        Ok(LocatorIndex {
            codes,
            inv_s: 1.0 / self.grid.s,
            mesh: self.mesh,
            metrics: self.metrics,
            grid: self.grid,
            table: self.table,
            fans: self.fans,
            bases: self.bases,
            tol: self.tol,
            stats: self.stats,
        })
    }
}

#[cfg(test)]
mod tests;

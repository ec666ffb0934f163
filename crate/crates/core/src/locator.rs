//! Point location against a built [`LocatorIndex`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, Point};
use crate::index::{code, LocatorIndex, EXTERIOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocateOutcome {
    Inside(usize),
    Outside,
}

impl LocateOutcome {
    pub fn element(self) -> Option<usize> {
        match self {
            Self::Inside(k) => Some(k),
            Self::Outside => None,
        }
    }

    /// Element id, or -1 for `Outside`.
    pub fn code(self) -> i64 {
        self.element().map_or(-1, |k| k as i64)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocateError {
    #[error("moved point {moved:?} (from {point:?} via vertex {vertex}) landed in cell {cell} with no edge assigned")]
    NoEdgeAfterMove {
        point: Point,
        moved: Point,
        vertex: usize,
        cell: usize,
    },
    #[error("moved point {moved:?} (from {point:?} via vertex {vertex}) left the active grid")]
    MovedOutOfGrid { point: Point, moved: Point, vertex: usize },
}

/// What a single query did; used by tests and diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Trace {
    pub cell: Option<usize>,
    pub shortcut: bool,
    pub moved: bool,
    pub coincident: bool,
    pub fan_size: usize,
    pub comparisons: u32,
    /// The result was checked against the query point (boundary cells).
    pub verified: bool,
}

impl LocatorIndex {
    #[inline]
    pub fn locate(&self, p: Point) -> Result<LocateOutcome, LocateError> {
        let mut trace = Trace::default();
        self.locate_inner(p, &mut trace)
    }

    pub fn locate_traced(&self, p: Point) -> (Result<LocateOutcome, LocateError>, Trace) {
        let mut trace = Trace::default();
        let r = self.locate_inner(p, &mut trace);
        (r, trace)
    }

    /// Same cells as [`GridSpec::try_cell_index`] up to rounding on cell
    /// faces, where either neighbour is valid.
    ///
    /// [`GridSpec::try_cell_index`]: crate::grid::GridSpec::try_cell_index
    #[inline(always)]
    fn cell_of(&self, p: Point) -> Option<usize> {
        let g = &self.grid;
        let mut idx = 0;
        let mut stride = 1;
        for a in 0..g.dim {
            let t = (p[a] - g.lo[a]) * self.inv_s;
            if !(t >= 0.0 && t <= g.dims[a] as f64) {
                return None;
            }
            idx += (t as usize).min(g.dims[a] - 1) * stride;
            stride *= g.dims[a];
        }
        Some(idx)
    }

    #[inline]
    fn locate_inner(&self, p: Point, tr: &mut Trace) -> Result<LocateOutcome, LocateError> {
        let Some(idx) = self.cell_of(p) else {
            return Ok(LocateOutcome::Outside);
        };
        let word = self.codes[idx];
        tr.cell = Some(idx);
        if word == 0 {
            return Ok(LocateOutcome::Outside);
        }
        let raw = if self.mesh.dim() == 2 {
            Ok(self.resolve_2d(p, word, tr))
        } else {
            self.resolve_3d(p, word, tr)
        };
        if word & code::NEAR == 0 {
            return raw;
        }
        // the cell straddles the domain boundary, so the point may be outside
        tr.verified = true;
        match raw {
            Ok(LocateOutcome::Inside(k)) if self.mesh.contains(k, p, self.tol) => Ok(LocateOutcome::Inside(k)),
            _ => Ok(LocateOutcome::Outside),
        }
    }

    /// Sector search in fan `fan` for the in-plane direction `(x, y)`. An
    /// exterior hit still accepts a neighbouring sector whose element holds
    /// `p` in the closed sense, so points on a boundary ray are not lost.
    #[inline]
    fn search(&self, fan: usize, x: f64, y: f64, p: Point, tr: &mut Trace) -> LocateOutcome {
        let (angles, payload) = self.fans.get(fan);
        let theta = geom::pseudo_angle_unchecked(x, y);
        let (i, n) = geom::sector_search_counted(angles, theta);
        tr.fan_size = angles.len();
        tr.comparisons = n;
        if payload[i] != EXTERIOR {
            return LocateOutcome::Inside(payload[i] as usize);
        }
        let m = payload.len();
        for j in [(i + m - 1) % m, (i + 1) % m] {
            let k = payload[j];
            if k != EXTERIOR && self.mesh.contains(k as usize, p, self.tol) {
                return LocateOutcome::Inside(k as usize);
            }
        }
        LocateOutcome::Outside
    }

    #[inline]
    fn resolve_2d(&self, p: Point, word: u32, tr: &mut Trace) -> LocateOutcome {
        let id = (word & code::ID) as usize;
        if word & code::TAG == code::HOST {
            tr.shortcut = true;
            return LocateOutcome::Inside(id);
        }
        let nu = self.mesh.vertex(id);
        let (dx, dy) = (p[0] - nu[0], p[1] - nu[1]);
        if dx * dx + dy * dy < self.tol * self.tol {
            tr.coincident = true;
            return LocateOutcome::Inside(self.mesh.vertex_elements(id)[0]);
        }
        self.search(id, dx, dy, p, tr)
    }

    fn resolve_3d(&self, p: Point, word: u32, tr: &mut Trace) -> Result<LocateOutcome, LocateError> {
        let id = (word & code::ID) as usize;
        let (edge, q) = match word & code::TAG {
            code::HOST => {
                tr.shortcut = true;
                return Ok(LocateOutcome::Inside(id));
            }
            code::EDGE => (id, p),
            _ => {
                let nu = self.mesh.vertex(id);
                let d = geom::dist(p, nu);
                if d < self.tol {
                    tr.coincident = true;
                    return Ok(LocateOutcome::Inside(self.mesh.vertex_elements(id)[0]));
                }
                let moved = geom::add(nu, geom::scale(geom::sub(p, nu), self.metrics.w_star / d));
                tr.moved = true;
                let Some(idx) = self.cell_of(moved) else {
                    return Err(LocateError::MovedOutOfGrid {
                        point: p,
                        moved,
                        vertex: id,
                    });
                };
                let next = self.codes[idx];
                match next & code::TAG {
                    code::HOST if next != 0 => {
                        tr.shortcut = true;
                        return Ok(LocateOutcome::Inside((next & code::ID) as usize));
                    }
                    code::EDGE => ((next & code::ID) as usize, moved),
                    _ => {
                        return Err(LocateError::NoEdgeAfterMove {
                            point: p,
                            moved,
                            vertex: id,
                            cell: idx,
                        })
                    }
                }
            }
        };
        let [a, _] = self.mesh.edge(edge);
        let d = geom::sub(q, self.mesh.vertex(a));
        let [u, w] = self.bases[edge];
        let (x, y) = (geom::dot(d, u), geom::dot(d, w));
        if x.hypot(y) <= self.tol {
            tr.coincident = true;
            return Ok(LocateOutcome::Inside(self.mesh.edge_elements(edge)[0]));
        }
        Ok(self.search(edge, x, y, p, tr))
    }
}

pub fn locate_2d(p: Point, index: &LocatorIndex) -> Result<LocateOutcome, LocateError> {
    debug_assert_eq!(index.mesh().dim(), 2);
    index.locate(p)
}

pub fn locate_3d(p: Point, index: &LocatorIndex) -> Result<LocateOutcome, LocateError> {
    debug_assert_eq!(index.mesh().dim(), 3);
    index.locate(p)
}

/// Locates every point in order; stops at the first error.
pub fn locate_batch(points: &[Point], index: &LocatorIndex) -> Result<Vec<LocateOutcome>, LocateError> {
    points.iter().map(|&p| index.locate(p)).collect()
}

/// [`locate_batch`] on the rayon pool; output order matches the input.
pub fn locate_batch_par(points: &[Point], index: &LocatorIndex) -> Result<Vec<LocateOutcome>, LocateError> {
    points.par_iter().map(|&p| index.locate(p)).collect()
}

//! Background Cartesian grid with equal spacing on every axis.
//!
//! Cells are addressed by `(i, j, k)` with linear index `i + nx * (j + ny * k)`;
//! 2D grids have `nz = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, Aabb, Point};
use crate::mesh::{MeshMetrics, MeshTopology};

/// Upper limit on grid size; larger requests are treated as configuration errors.
pub const MAX_CELLS: usize = 1 << 30;

/// Safety factor applied to the spacing bound.
pub const SPACING_SAFETY: f64 = 0.999;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("point {0:?} lies outside the background box")]
    OutsideDomain(Point),
    #[error("grid would need {0} cells (limit {MAX_CELLS})")]
    TooLarge(usize),
}

/// Largest admissible 2D spacing for patch radius `w_star` and minimum angle `alpha`.
pub fn spacing_bound_2d(w_star: f64, alpha: f64) -> f64 {
    let sa = alpha.sin();
    w_star * sa / (std::f64::consts::SQRT_2 * (1.0 + sa))
}

/// Largest admissible 3D spacing; `w_star` must also stay below half the
/// shortest edge.
pub fn spacing_bound_3d(w_star: f64, alpha: f64) -> f64 {
    let sa = alpha.sin();
    let sh = (alpha / 2.0).sin();
    2.0 * w_star * sa * sh / (3f64.sqrt() * (1.0 + sa) * (1.0 + sh))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub lo: Point,
    pub s: f64,
    pub dims: [usize; 3],
    pub padding: f64,
}

fn positive(name: &'static str, value: f64) -> Result<f64, GridError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(GridError::NonPositive { name, value })
    }
}

impl GridSpec {
    /// Grid of spacing `s` covering `bbox` grown by `padding` on every side.
    pub fn new(dim: usize, bbox: Aabb, s: f64, padding: f64) -> Result<Self, GridError> {
        positive("spacing", s)?;
        if !(padding >= 0.0 && padding.is_finite()) {
            return Err(GridError::NonPositive {
                name: "padding",
                value: padding,
            });
        }
        let mut lo = [0.0; 3];
        let mut dims = [1usize; 3];
        let mut total: usize = 1;
        for a in 0..dim {
            lo[a] = bbox.lo[a] - padding;
            let top = bbox.hi[a] + padding;
            let n = ((top - lo[a]) / s).ceil().max(1.0);
            if n > MAX_CELLS as f64 {
                return Err(GridError::TooLarge(usize::MAX));
            }
            let mut n = n as usize;
            while lo[a] + n as f64 * s < top {
                n += 1;
            }
            dims[a] = n;
            total = total.saturating_mul(n);
        }
        if total > MAX_CELLS {
            return Err(GridError::TooLarge(total));
        }
        Ok(Self {
            dim,
            lo,
            s,
            dims,
            padding,
        })
    }

    /// Spacing from the dimension-appropriate bound times [`SPACING_SAFETY`].
    /// `padding` defaults to 5% of the largest bounding-box extent.
    pub fn from_metrics(metrics: &MeshMetrics, bbox: Aabb, padding: Option<f64>) -> Result<Self, GridError> {
        positive("alpha", metrics.alpha)?;
        positive("w_star", metrics.w_star)?;
        let bound = if metrics.dim == 3 {
            spacing_bound_3d(metrics.w_star, metrics.alpha)
        } else {
            spacing_bound_2d(metrics.w_star, metrics.alpha)
        };
        let ext = bbox.extent();
        let tau = padding.unwrap_or(0.05 * ext[..metrics.dim].iter().cloned().fold(0.0, f64::max));
        Self::new(metrics.dim, bbox, bound * SPACING_SAFETY, tau)
    }

    pub fn hi(&self) -> Point {
        [0, 1, 2].map(|a| {
            if a < self.dim {
                self.lo[a] + self.dims[a] as f64 * self.s
            } else {
                0.0
            }
        })
    }

    pub fn n_cells(&self) -> usize {
        self.dims.iter().product()
    }

    #[inline]
    pub fn linear(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    #[inline]
    pub fn unlinear(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let r = idx / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    /// Host cell of `p`; points on the max faces resolve to the last cell.
    pub fn cell_of_point(&self, p: Point) -> Result<[usize; 3], GridError> {
        self.try_cell(p).ok_or(GridError::OutsideDomain(p))
    }

    #[inline]
    pub fn try_cell(&self, p: Point) -> Option<[usize; 3]> {
        let mut c = [0usize; 3];
        for a in 0..self.dim {
            let t = (p[a] - self.lo[a]) / self.s;
            // also rejects NaN
            if !(t >= 0.0 && t <= self.dims[a] as f64) {
                return None;
            }
            c[a] = (t as usize).min(self.dims[a] - 1);
        }
        Some(c)
    }

    #[inline]
    pub fn try_cell_index(&self, p: Point) -> Option<usize> {
        self.try_cell(p).map(|c| self.linear(c))
    }

    /// Cell index without a domain check; coordinates are clamped.
    #[inline]
    pub fn clamped_cell(&self, p: Point) -> [usize; 3] {
        let mut c = [0usize; 3];
        for a in 0..self.dim {
            let t = ((p[a] - self.lo[a]) / self.s).floor();
            c[a] = if t <= 0.0 {
                0
            } else {
                (t as usize).min(self.dims[a] - 1)
            };
        }
        c
    }

    pub fn cell_lo(&self, c: [usize; 3]) -> Point {
        [0, 1, 2].map(|a| {
            if a < self.dim {
                self.lo[a] + c[a] as f64 * self.s
            } else {
                0.0
            }
        })
    }

    pub fn cell_hi(&self, c: [usize; 3]) -> Point {
        [0, 1, 2].map(|a| {
            if a < self.dim {
                self.lo[a] + (c[a] + 1) as f64 * self.s
            } else {
                0.0
            }
        })
    }

    pub fn cell_center(&self, c: [usize; 3]) -> Point {
        [0, 1, 2].map(|a| {
            if a < self.dim {
                self.lo[a] + (c[a] as f64 + 0.5) * self.s
            } else {
                0.0
            }
        })
    }

    /// Corners of cell `c`: 4 in 2D, 8 in 3D.
    pub fn cell_corners(&self, c: [usize; 3]) -> Vec<Point> {
        let lo = self.cell_lo(c);
        let hi = self.cell_hi(c);
        let n = 1 << self.dim;
        (0..n)
            .map(|m| {
                [0, 1, 2].map(|a| {
                    if a >= self.dim {
                        0.0
                    } else if m >> a & 1 == 1 {
                        hi[a]
                    } else {
                        lo[a]
                    }
                })
            })
            .collect()
    }

    /// Inclusive cell-index range covering `b`, clamped to the grid.
    pub fn cell_range(&self, b: &Aabb) -> ([usize; 3], [usize; 3]) {
        (self.clamped_cell(b.lo), self.clamped_cell(b.hi))
    }

    /// Inclusive range grown by `r` cells on each side of the active axes.
    pub fn inflate_range(&self, (lo, hi): ([usize; 3], [usize; 3]), r: usize) -> ([usize; 3], [usize; 3]) {
        let mut a = lo;
        let mut b = hi;
        for ax in 0..self.dim {
            a[ax] = lo[ax].saturating_sub(r);
            b[ax] = (hi[ax] + r).min(self.dims[ax] - 1);
        }
        (a, b)
    }

    pub fn cells_in(&self, (lo, hi): ([usize; 3], [usize; 3])) -> impl Iterator<Item = [usize; 3]> {
        (lo[2]..=hi[2]).flat_map(move |k| (lo[1]..=hi[1]).flat_map(move |j| (lo[0]..=hi[0]).map(move |i| [i, j, k])))
    }

    pub fn contains(&self, p: Point) -> bool {
        self.try_cell(p).is_some()
    }
}

pub const NONE: u32 = u32::MAX;

pub mod flags {
    pub const ACTIVE: u32 = 1;
    /// Cell intersects a boundary edge or face, or needed the fallback pass.
    pub const NEAR_BOUNDARY: u32 = 2;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellEntry {
    pub phi: u32,
    pub psi: u32,
    pub host: u32,
    pub flags: u32,
}

impl Default for CellEntry {
    fn default() -> Self {
        Self {
            phi: NONE,
            psi: NONE,
            host: NONE,
            flags: 0,
        }
    }
}

impl CellEntry {
    #[inline]
    pub fn is_active(&self) -> bool {
        self.flags & flags::ACTIVE != 0
    }

    #[inline]
    pub fn near_boundary(&self) -> bool {
        self.flags & flags::NEAR_BOUNDARY != 0
    }

    pub fn phi(&self) -> Option<usize> {
        (self.phi != NONE).then_some(self.phi as usize)
    }

    pub fn psi(&self) -> Option<usize> {
        (self.psi != NONE).then_some(self.psi as usize)
    }

    pub fn host(&self) -> Option<usize> {
        (self.host != NONE).then_some(self.host as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellTable {
    pub cells: Vec<CellEntry>,
}

impl CellTable {
    pub fn new(grid: &GridSpec) -> Self {
        Self {
            cells: vec![CellEntry::default(); grid.n_cells()],
        }
    }

    #[inline]
    pub fn get(&self, idx: usize) -> &CellEntry {
        &self.cells[idx]
    }

    #[inline]
    pub fn get_mut(&mut self, idx: usize) -> &mut CellEntry {
        &mut self.cells[idx]
    }

    pub fn n_active(&self) -> usize {
        self.cells.iter().filter(|c| c.is_active()).count()
    }
}

/// Marks every cell whose closed box meets some element (over-approximation
/// by a small inflation). Returns the number of cell visits.
pub fn mark_active_cells(mesh: &MeshTopology, grid: &GridSpec, table: &mut CellTable) -> u64 {
    let eps = 1e-12 * grid.s;
    let per_element: Vec<(Vec<u32>, u64)> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let pts: Vec<Point> = mesh.element_points(k).collect();
            let bb = Aabb::from_points(pts.iter());
            let ring: Vec<[f64; 2]> = pts.iter().map(|p| geom::xy(*p)).collect();
            let mut cells = Vec::new();
            let mut visits = 0;
            for c in grid.cells_in(grid.cell_range(&bb)) {
                visits += 1;
                let (lo, hi) = (grid.cell_lo(c), grid.cell_hi(c));
                let hit = if mesh.dim() == 3 {
                    geom::tetrahedron_box_intersect([pts[0], pts[1], pts[2], pts[3]], lo, hi, eps)
                } else {
                    geom::polygon_box_intersect(&ring, geom::xy(lo), geom::xy(hi), eps)
                };
                if hit {
                    cells.push(grid.linear(c) as u32);
                }
            }
            (cells, visits)
        })
        .collect();
    let mut visits = 0;
    for (cells, v) in per_element {
        visits += v;
        for idx in cells {
            table.cells[idx as usize].flags |= flags::ACTIVE;
        }
    }
    visits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{compute_metrics, generate_l_shaped_mesh, generate_structured_mesh, WStarPolicy};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    #[test]
    fn spacing_bounds() {
        assert!((spacing_bound_2d(0.0702, FRAC_PI_4) - 0.0205611).abs() < 1e-6);
        assert!((spacing_bound_2d(1.0, FRAC_PI_3) - 0.3281694).abs() < 1e-6);
        assert!((spacing_bound_3d(1.0, FRAC_PI_4) - 0.1323764).abs() < 1e-6);
    }

    fn grid2(s: f64) -> GridSpec {
        GridSpec::new(2, Aabb::new([-1.0, -1.0, 0.0], [1.0, 1.0, 0.0]), s, 0.05).unwrap()
    }

    #[test]
    fn cell_of_point_examples() {
        let g = grid2(0.1);
        assert!((g.lo[0] + 1.05).abs() < 1e-15);
        assert_eq!(g.cell_of_point([0.0, 0.0, 0.0]).unwrap(), [10, 10, 0]);
        assert_eq!(g.cell_of_point(g.lo).unwrap(), [0, 0, 0]);
        let hi = g.hi();
        assert_eq!(g.cell_of_point(hi).unwrap(), [g.dims[0] - 1, g.dims[1] - 1, 0]);
        assert!(matches!(
            g.cell_of_point([2.0, 0.0, 0.0]),
            Err(GridError::OutsideDomain(_))
        ));
        assert!(g.cell_of_point([f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn from_metrics_respects_bound() {
        let m = generate_structured_mesh(3, [0.0; 3], [1.0; 3], 2).unwrap();
        let mm = compute_metrics(&m, WStarPolicy::Default).unwrap();
        let g = GridSpec::from_metrics(&mm, m.bbox(), None).unwrap();
        assert!(g.s <= spacing_bound_3d(mm.w_star, mm.alpha));
        for a in 0..3 {
            assert!(g.lo[a] + g.dims[a] as f64 * g.s >= 1.05);
            assert!((g.lo[a] + 0.05).abs() < 1e-15);
        }
        let mut bad = mm;
        bad.alpha = 0.0;
        assert!(GridSpec::from_metrics(&bad, m.bbox(), None).is_err());
    }

    #[test]
    fn convex_domain_all_active() {
        let m = generate_structured_mesh(2, [0.0; 3], [1.0; 3], 4).unwrap();
        let g = GridSpec::new(2, m.bbox(), 0.1, 0.0).unwrap();
        let mut t = CellTable::new(&g);
        mark_active_cells(&m, &g, &mut t);
        assert_eq!(t.n_active(), g.n_cells());
    }

    #[test]
    fn single_triangle_far_cell_inactive() {
        let m = MeshTopology::new(2, vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![vec![0, 1, 2]]).unwrap();
        let g = GridSpec::new(2, m.bbox(), 0.1, 0.5).unwrap();
        let mut t = CellTable::new(&g);
        mark_active_cells(&m, &g, &mut t);
        let far = g.cell_of_point([1.4, 1.4, 0.0]).unwrap();
        assert!(!t.get(g.linear(far)).is_active());
        let corner = g.cell_of_point([0.9, 0.9, 0.0]).unwrap();
        assert!(!t.get(g.linear(corner)).is_active());
        let inside = g.cell_of_point([0.1, 0.1, 0.0]).unwrap();
        assert!(t.get(g.linear(inside)).is_active());
    }

    #[test]
    fn l_shape_missing_quadrant_inactive() {
        let m = generate_l_shaped_mesh(2, 8).unwrap();
        let g = GridSpec::new(2, m.bbox(), 0.03, 0.0).unwrap();
        let mut t = CellTable::new(&g);
        mark_active_cells(&m, &g, &mut t);
        for c in g.cells_in(([0; 3], [g.dims[0] - 1, g.dims[1] - 1, 0])) {
            let (lo, hi) = (g.cell_lo(c), g.cell_hi(c));
            let brute = (0..m.n_elements()).any(|k| {
                let ring: Vec<[f64; 2]> = m.element_points(k).map(geom::xy).collect();
                geom::polygon_box_intersect(&ring, geom::xy(lo), geom::xy(hi), 0.0)
            });
            if brute {
                assert!(t.get(g.linear(c)).is_active());
            }
            if lo[0] > 0.5 + 1e-9 && lo[1] > 0.5 + 1e-9 {
                assert!(!t.get(g.linear(c)).is_active(), "{c:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn center_maps_to_own_cell(i in 0usize..40, j in 0usize..40, k in 0usize..40, s in 0.01f64..0.2) {
            let g = GridSpec::new(3, Aabb::new([-0.3, 0.1, 2.0], [1.0, 1.4, 2.5]), s, 0.02).unwrap();
            let c = [i % g.dims[0], j % g.dims[1], k % g.dims[2]];
            prop_assert_eq!(g.cell_of_point(g.cell_center(c)).unwrap(), c);
            prop_assert_eq!(g.unlinear(g.linear(c)), c);
        }

        #[test]
        fn box_points_map_to_a_cell(x in 0.0f64..=1.0, y in 0.0f64..=1.0, s in 0.003f64..0.5) {
            let g = GridSpec::new(2, Aabb::new([0.0; 3], [1.0, 1.0, 0.0]), s, 0.0).unwrap();
            let c = g.cell_of_point([x, y, 0.0]).unwrap();
            let (lo, hi) = (g.cell_lo(c), g.cell_hi(c));
            prop_assert!(lo[0] <= x + 1e-12 && x <= hi[0] + 1e-12);
            prop_assert!(lo[1] <= y + 1e-12 && y <= hi[1] + 1e-12);
        }
    }
}

use std::sync::Arc;

use super::{default_tol, FacetPlanes};
use crate::geom::{self, Aabb, Point};
use crate::grid::{GridError, GridSpec};
use crate::locator::LocateOutcome;
use crate::mesh::MeshTopology;

/// Per-cell lists of the elements meeting each cell, in CSR form.
#[derive(Debug, Clone)]
pub struct CandidateListGrid {
    mesh: Arc<MeshTopology>,
    grid: GridSpec,
    offsets: Vec<u32>,
    items: Vec<u32>,
    planes: FacetPlanes,
    tol: f64,
}

impl CandidateListGrid {
    /// `spacing` defaults to the largest element diameter.
    pub fn new(mesh: Arc<MeshTopology>, spacing: Option<f64>) -> Result<Self, GridError> {
        let h = spacing.unwrap_or_else(|| {
            (0..mesh.n_elements())
                .map(|k| crate::mesh::element_quality(&mesh, k).diameter)
                .fold(0.0, f64::max)
        });
        let grid = GridSpec::new(mesh.dim(), mesh.bbox(), h, 0.0)?;
        let eps = 1e-12 * grid.s;
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for k in 0..mesh.n_elements() {
            let pts: Vec<Point> = mesh.element_points(k).collect();
            let ring: Vec<[f64; 2]> = pts.iter().map(|p| geom::xy(*p)).collect();
            let bb = Aabb::from_points(pts.iter());
            for c in grid.cells_in(grid.cell_range(&bb)) {
                let (lo, hi) = (grid.cell_lo(c), grid.cell_hi(c));
                let hit = if mesh.dim() == 3 {
                    geom::tetrahedron_box_intersect([pts[0], pts[1], pts[2], pts[3]], lo, hi, eps)
                } else {
                    geom::polygon_box_intersect(&ring, geom::xy(lo), geom::xy(hi), eps)
                };
                if hit {
                    pairs.push((grid.linear(c) as u32, k as u32));
                }
            }
        }
        pairs.sort_unstable();
        let mut offsets = vec![0u32; grid.n_cells() + 1];
        for &(c, _) in &pairs {
            offsets[c as usize + 1] += 1;
        }
        for i in 0..grid.n_cells() {
            offsets[i + 1] += offsets[i];
        }
        let items = pairs.into_iter().map(|p| p.1).collect();
        let planes = FacetPlanes::new(&mesh);
        let tol = default_tol(&mesh);
        Ok(Self {
            mesh,
            grid,
            offsets,
            items,
            planes,
            tol,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mesh(&self) -> &MeshTopology {
        &self.mesh
    }

    /// Candidate list of cell `idx`, ascending element ids.
    pub fn candidates(&self, idx: usize) -> &[u32] {
        &self.items[self.offsets[idx] as usize..self.offsets[idx + 1] as usize]
    }

    #[inline]
    pub fn locate(&self, p: Point) -> LocateOutcome {
        let Some(idx) = self.grid.try_cell_index(p) else {
            return LocateOutcome::Outside;
        };
        for &k in self.candidates(idx) {
            if self.planes.contains(k as usize, p, self.tol) {
                return LocateOutcome::Inside(k as usize);
            }
        }
        LocateOutcome::Outside
    }

    /// Whether `p` lies in the closed domain.
    pub fn in_domain(&self, p: Point) -> bool {
        self.locate(p) != LocateOutcome::Outside
    }
}

pub fn aux_grid_locate(p: Point, clg: &CandidateListGrid) -> LocateOutcome {
    clg.locate(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::brute_force_locate;
    use crate::mesh::{generate_l_shaped_mesh, generate_structured_mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2, 3] {
            let m = Arc::new(generate_structured_mesh(dim, [0.0; 3], [1.0; 3], 6).unwrap());
            let clg = CandidateListGrid::new(m.clone(), None).unwrap();
            for k in 0..m.n_elements() {
                assert_eq!(clg.locate(m.centroid(k)), LocateOutcome::Inside(k));
            }
            for _ in 0..10_000 / dim / dim {
                let p = [0, 1, 2].map(|a| if a < dim { rng.gen_range(-0.1..1.1) } else { 0.0 });
                assert_eq!(clg.locate(p), brute_force_locate(p, &m));
            }
        }
    }

    #[test]
    fn coverage_and_outside_points() {
        let m = Arc::new(generate_l_shaped_mesh(2, 6).unwrap());
        let clg = CandidateListGrid::new(m.clone(), Some(0.37)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..m.n_elements() {
            for _ in 0..20 {
                let pts: Vec<Point> = m.element_points(k).collect();
                let (a, b): (f64, f64) = (rng.gen(), rng.gen());
                let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
                let p = geom::add(
                    pts[0],
                    geom::add(
                        geom::scale(geom::sub(pts[1], pts[0]), a),
                        geom::scale(geom::sub(pts[2], pts[0]), b),
                    ),
                );
                let idx = clg.grid().try_cell_index(p).unwrap();
                assert!(clg.candidates(idx).contains(&(k as u32)));
            }
        }
        // inside an active cell, outside the domain
        let p = [0.6, 0.6, 0.0];
        let idx = clg.grid().try_cell_index(p).unwrap();
        assert!(!clg.candidates(idx).is_empty());
        assert_eq!(clg.locate(p), LocateOutcome::Outside);
    }
}

use std::sync::Arc;

use thiserror::Error;

use super::{default_tol, FacetPlanes, NO_NEIGHBOUR};
use crate::geom::{self, Point};
use crate::locator::LocateOutcome;
use crate::mesh::MeshTopology;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("walk from element {start} to {end:?} visited more than {cap} elements")]
    Cycle { start: usize, end: Point, cap: usize },
    #[error("walk left element {element} through no facet toward {end:?}")]
    Stuck { element: usize, end: Point },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkResult {
    pub outcome: LocateOutcome,
    pub crossings: usize,
}

/// Facet-crossing walk along straight segments.
#[derive(Debug, Clone)]
pub struct WalkLocator {
    mesh: Arc<MeshTopology>,
    planes: FacetPlanes,
    tol: f64,
}

impl WalkLocator {
    pub fn new(mesh: Arc<MeshTopology>) -> Self {
        let planes = FacetPlanes::new(&mesh);
        let tol = default_tol(&mesh);
        Self { mesh, planes, tol }
    }

    pub fn mesh(&self) -> &MeshTopology {
        &self.mesh
    }

    /// Walks from `start` (which must contain `from`) toward `to`, crossing
    /// the facet where the segment leaves each element.
    pub fn walk(&self, start: usize, from: Point, to: Point) -> Result<WalkResult, WalkError> {
        let d = geom::sub(to, from);
        let cap = self.mesh.n_elements();
        let mut k = start;
        let mut crossings = 0;
        loop {
            if self.planes.contains(k, to, self.tol) {
                return Ok(WalkResult {
                    outcome: LocateOutcome::Inside(k),
                    crossings,
                });
            }
            let mut best: Option<(f64, usize)> = None;
            for i in self.planes.range(k) {
                let nd = geom::dot(self.planes.normal[i], d);
                if nd <= 0.0 {
                    continue;
                }
                let t = (self.planes.offset[i] - geom::dot(self.planes.normal[i], from)) / nd;
                if best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
            let Some((_, facet)) = best else {
                return Err(WalkError::Stuck { element: k, end: to });
            };
            let next = self.planes.neighbour[facet];
            if next == NO_NEIGHBOUR {
                return Ok(WalkResult {
                    outcome: LocateOutcome::Outside,
                    crossings,
                });
            }
            k = next as usize;
            crossings += 1;
            if crossings > cap {
                return Err(WalkError::Cycle { start, end: to, cap });
            }
        }
    }
}

pub fn neighbour_walk_locate(
    start_element: usize,
    p_start: Point,
    p_end: Point,
    walker: &WalkLocator,
) -> Result<WalkResult, WalkError> {
    walker.walk(start_element, p_start, p_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::brute_force_locate;
    use crate::mesh::generate_structured_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn walker(dim: usize, n: usize) -> WalkLocator {
        WalkLocator::new(Arc::new(generate_structured_mesh(dim, [0.0; 3], [1.0; 3], n).unwrap()))
    }

    #[test]
    fn end_in_start_element() {
        let w = walker(2, 4);
        let c = w.mesh().centroid(5);
        let r = w.walk(5, c, geom::add(c, [1e-3, 0.0, 0.0])).unwrap();
        assert_eq!(
            r,
            WalkResult {
                outcome: LocateOutcome::Inside(5),
                crossings: 0
            }
        );
    }

    #[test]
    fn straight_walk_along_a_row() {
        // y = 0.02 from the lower triangle of the first square to the lower
        // triangle of the last: 19 triangles, 9 vertical edges + 9 diagonals
        let w = walker(2, 10);
        let from = [0.05, 0.02, 0.0];
        let to = [0.95, 0.02, 0.0];
        let start = brute_force_locate(from, w.mesh()).element().unwrap();
        let end = brute_force_locate(to, w.mesh()).element().unwrap();
        let r = w.walk(start, from, to).unwrap();
        assert_eq!(r.outcome, LocateOutcome::Inside(end));
        assert_eq!(r.crossings, 18);
    }

    #[test]
    fn walk_out_of_domain() {
        let w = walker(3, 2);
        let from = w.mesh().centroid(0);
        let r = w.walk(0, from, [-0.5, 0.2, 0.2]).unwrap();
        assert_eq!(r.outcome, LocateOutcome::Outside);
    }

    #[test]
    fn random_walks_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 3] {
            let w = walker(dim, 5);
            for _ in 0..500 {
                let k = rng.gen_range(0..w.mesh().n_elements());
                let from = w.mesh().centroid(k);
                let to = [0, 1, 2].map(|a| if a < dim { rng.gen::<f64>() } else { 0.0 });
                let r = w.walk(k, from, to).unwrap();
                let host = r.outcome.element().unwrap();
                assert!(w.mesh().contains(host, to, 1e-12));
            }
        }
    }
}

//! Comparison locators: brute force, neighbour walk and candidate-list grid.

mod auxgrid;
mod walk;

pub use auxgrid::{aux_grid_locate, CandidateListGrid};
pub use walk::{neighbour_walk_locate, WalkError, WalkLocator, WalkResult};

use crate::geom::{self, Point};
use crate::locator::LocateOutcome;
use crate::mesh::{MeshTopology, TET_FACES};

/// Default oracle tolerance for a mesh.
pub fn default_tol(mesh: &MeshTopology) -> f64 {
    1e-12 * mesh.length_scale()
}

/// Lowest-id element whose closure contains `p`.
pub fn brute_force_locate(p: Point, mesh: &MeshTopology) -> LocateOutcome {
    brute_force_locate_tol(p, mesh, default_tol(mesh))
}

pub fn brute_force_locate_tol(p: Point, mesh: &MeshTopology, tol: f64) -> LocateOutcome {
    (0..mesh.n_elements())
        .find(|&k| mesh.contains(k, p, tol))
        .map_or(LocateOutcome::Outside, LocateOutcome::Inside)
}

/// Outward unit normals and offsets of every element facet, with the
/// neighbour across each facet.
#[derive(Debug, Clone)]
pub(crate) struct FacetPlanes {
    start: Vec<u32>,
    normal: Vec<Point>,
    offset: Vec<f64>,
    neighbour: Vec<u32>,
}

pub(crate) const NO_NEIGHBOUR: u32 = u32::MAX;

impl FacetPlanes {
    pub fn new(mesh: &MeshTopology) -> Self {
        let mut s = Self {
            start: vec![0],
            normal: Vec::new(),
            offset: Vec::new(),
            neighbour: Vec::new(),
        };
        for k in 0..mesh.n_elements() {
            let el = mesh.element(k);
            if mesh.dim() == 2 {
                let n = el.len();
                for i in 0..n {
                    let (a, b) = (mesh.vertex(el[i]), mesh.vertex(el[(i + 1) % n]));
                    let d = geom::sub(b, a);
                    let nn = geom::scale([d[1], -d[0], 0.0], 1.0 / geom::norm(d));
                    let e = mesh.element_edges(k)[i];
                    s.push(nn, geom::dot(nn, a), other(mesh.edge_elements(e), k));
                }
            } else {
                for (i, f) in TET_FACES.iter().enumerate() {
                    let [a, b, c] = f.map(|j| mesh.vertex(el[j]));
                    let mut nn = geom::cross(geom::sub(b, a), geom::sub(c, a));
                    if geom::dot(nn, geom::sub(mesh.vertex(el[i]), a)) > 0.0 {
                        nn = geom::scale(nn, -1.0);
                    }
                    let nn = geom::scale(nn, 1.0 / geom::norm(nn));
                    let face = mesh.element_faces(k)[i];
                    s.push(nn, geom::dot(nn, a), other(mesh.face_elements(face), k));
                }
            }
            s.start.push(s.normal.len() as u32);
        }
        s
    }

    fn push(&mut self, n: Point, c: f64, nb: u32) {
        self.normal.push(n);
        self.offset.push(c);
        self.neighbour.push(nb);
    }

    #[inline]
    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.start[k] as usize..self.start[k + 1] as usize
    }

    /// Closed containment with a boundary band of `tol`.
    #[inline]
    pub fn contains(&self, k: usize, p: Point, tol: f64) -> bool {
        self.range(k)
            .all(|i| geom::dot(self.normal[i], p) - self.offset[i] <= tol)
    }
}

fn other(pair: &[usize], k: usize) -> u32 {
    pair.iter().find(|&&x| x != k).map_or(NO_NEIGHBOUR, |&x| x as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_structured_mesh;

    #[test]
    fn brute_force_examples() {
        let m = generate_structured_mesh(2, [0.0; 3], [1.0; 3], 4).unwrap();
        for k in 0..m.n_elements() {
            assert_eq!(brute_force_locate(m.centroid(k), &m), LocateOutcome::Inside(k));
        }
        // midpoint of the diagonal shared by elements 0 and 1
        assert_eq!(brute_force_locate([0.125, 0.125, 0.0], &m), LocateOutcome::Inside(0));
        assert_eq!(brute_force_locate([1.5, 0.5, 0.0], &m), LocateOutcome::Outside);
    }

    #[test]
    fn facet_planes_agree_with_predicates() {
        for dim in [2, 3] {
            let m = generate_structured_mesh(dim, [0.0; 3], [1.0; 3], 2).unwrap();
            let f = FacetPlanes::new(&m);
            let pts = [[0.3, 0.2, 0.1], [0.5, 0.5, 0.5], [0.9, 0.05, 0.7], [1.2, 0.4, 0.4]];
            for p in pts {
                for k in 0..m.n_elements() {
                    assert_eq!(f.contains(k, p, 1e-12), m.contains(k, p, 1e-12), "{dim} {k} {p:?}");
                }
            }
        }
    }
}

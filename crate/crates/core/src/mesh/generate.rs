use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MeshError, MeshTopology};
use crate::geom::Point;

/// Kuhn subdivision of the unit cube: each tetrahedron follows a monotone
/// path from corner 000 to corner 111 along one axis permutation.
const KUHN_PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

struct Lattice {
    n: usize,
    lo: Point,
    step: Point,
}

impl Lattice {
    fn id(&self, i: usize, j: usize, k: usize) -> usize {
        i + (self.n + 1) * (j + (self.n + 1) * k)
    }

    fn vertices(&self, dim: usize) -> Vec<Point> {
        let nk = if dim == 3 { self.n + 1 } else { 1 };
        let mut out = Vec::with_capacity((self.n + 1).pow(dim as u32));
        for k in 0..nk {
            for j in 0..=self.n {
                for i in 0..=self.n {
                    out.push([
                        self.lo[0] + i as f64 * self.step[0],
                        self.lo[1] + j as f64 * self.step[1],
                        if dim == 3 {
                            self.lo[2] + k as f64 * self.step[2]
                        } else {
                            0.0
                        },
                    ]);
                }
            }
        }
        out
    }
}

fn lattice(dim: usize, lo: Point, hi: Point, n: usize) -> Result<Lattice, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidParameter("n must be at least 1".into()));
    }
    if dim != 2 && dim != 3 {
        return Err(MeshError::Dimension(dim));
    }
    for a in 0..dim {
        if !(hi[a] > lo[a]) {
            return Err(MeshError::InvalidParameter(format!("empty domain along axis {a}")));
        }
    }
    let step = [0, 1, 2].map(|a| (hi[a] - lo[a]) / n as f64);
    Ok(Lattice { n, lo, step })
}

fn square_triangles(l: &Lattice, i: usize, j: usize) -> [Vec<usize>; 2] {
    let v00 = l.id(i, j, 0);
    let v10 = l.id(i + 1, j, 0);
    let v11 = l.id(i + 1, j + 1, 0);
    let v01 = l.id(i, j + 1, 0);
    [vec![v00, v10, v11], vec![v00, v11, v01]]
}

fn cube_tets(l: &Lattice, i: usize, j: usize, k: usize, out: &mut Vec<Vec<usize>>) {
    for perm in KUHN_PERMS {
        let mut c = [i, j, k];
        let mut tet = vec![l.id(c[0], c[1], c[2])];
        for axis in perm {
            c[axis] += 1;
            tet.push(l.id(c[0], c[1], c[2]));
        }
        out.push(tet);
    }
}

/// `n` subdivisions per axis of the box `[lo, hi]`; squares split along the
/// (0,0)-(1,1) diagonal, cubes into 6 Kuhn tetrahedra.
pub fn generate_structured_mesh(dim: usize, lo: Point, hi: Point, n: usize) -> Result<MeshTopology, MeshError> {
    let l = lattice(dim, lo, hi, n)?;
    let mut elements = Vec::new();
    if dim == 2 {
        for j in 0..n {
            for i in 0..n {
                elements.extend(square_triangles(&l, i, j));
            }
        }
    } else {
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    cube_tets(&l, i, j, k, &mut elements);
                }
            }
        }
    }
    MeshTopology::new(dim, l.vertices(dim), elements)
}

/// Unit square with jittered interior vertices; every third cell stays a
/// quadrilateral, the rest are split into two triangles.
pub fn generate_mixed_mesh(n: usize, jitter: f64, seed: u64) -> Result<MeshTopology, MeshError> {
    if !(0.0..0.25).contains(&jitter) {
        return Err(MeshError::InvalidParameter(format!(
            "jitter {jitter} must lie in [0, 0.25)"
        )));
    }
    let l = lattice(2, [0.0; 3], [1.0; 3], n)?;
    let mut vertices = l.vertices(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 1..n {
        for i in 1..n {
            let v = &mut vertices[l.id(i, j, 0)];
            v[0] += rng.gen_range(-jitter..=jitter) * l.step[0];
            v[1] += rng.gen_range(-jitter..=jitter) * l.step[1];
        }
    }
    let mut elements = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if (i + j) % 3 == 0 {
                elements.push(vec![
                    l.id(i, j, 0),
                    l.id(i + 1, j, 0),
                    l.id(i + 1, j + 1, 0),
                    l.id(i, j + 1, 0),
                ]);
            } else {
                elements.extend(square_triangles(&l, i, j));
            }
        }
    }
    MeshTopology::new(2, vertices, elements)
}

/// Unit square (or cube) with the quadrant x > 1/2, y > 1/2 removed; `n`
/// must be even.
pub fn generate_l_shaped_mesh(dim: usize, n: usize) -> Result<MeshTopology, MeshError> {
    if n % 2 != 0 {
        return Err(MeshError::InvalidParameter(
            "n must be even for the L-shaped mesh".into(),
        ));
    }
    let l = lattice(dim, [0.0; 3], [1.0; 3], n)?;
    let keep = |i: usize, j: usize| i < n / 2 || j < n / 2;
    let mut elements = Vec::new();
    if dim == 2 {
        for j in 0..n {
            for i in 0..n {
                if keep(i, j) {
                    elements.extend(square_triangles(&l, i, j));
                }
            }
        }
    } else {
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    if keep(i, j) {
                        cube_tets(&l, i, j, k, &mut elements);
                    }
                }
            }
        }
    }
    let (vertices, elements) = compact(l.vertices(dim), elements);
    MeshTopology::new(dim, vertices, elements)
}

fn compact(vertices: Vec<Point>, mut elements: Vec<Vec<usize>>) -> (Vec<Point>, Vec<Vec<usize>>) {
    let mut map = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::new();
    for el in &mut elements {
        for v in el.iter_mut() {
            if map[*v] == usize::MAX {
                map[*v] = kept.len();
                kept.push(vertices[*v]);
            }
            *v = map[*v];
        }
    }
    (kept, elements)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_counts() {
        let m = generate_structured_mesh(2, [0.0; 3], [1.0; 3], 1).unwrap();
        assert_eq!((m.n_elements(), m.n_vertices()), (2, 4));
        let m = generate_structured_mesh(2, [0.0; 3], [1.0; 3], 10).unwrap();
        assert_eq!((m.n_elements(), m.n_vertices()), (200, 121));
        assert!((m.total_measure() - 1.0).abs() < 1e-12);
        let m = generate_structured_mesh(3, [0.0; 3], [1.0; 3], 2).unwrap();
        assert_eq!(m.n_elements(), 48);
        assert!((m.total_measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn structured_3d_is_conforming() {
        let m = generate_structured_mesh(3, [0.0; 3], [2.0, 1.0, 1.0], 3).unwrap();
        let boundary = (0..m.n_faces()).filter(|&f| m.is_boundary_face(f)).count();
        // 2 triangles per boundary square, 6 sides of 3x3 squares
        assert_eq!(boundary, 6 * 9 * 2);
        assert!((m.total_measure() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_mesh_measure() {
        let m = generate_mixed_mesh(12, 0.2, 7).unwrap();
        assert!(m.elements().any(|e| e.len() == 4));
        assert!((m.total_measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l_shape_measure() {
        let m = generate_l_shaped_mesh(2, 8).unwrap();
        assert!((m.total_measure() - 0.75).abs() < 1e-12);
        let m = generate_l_shaped_mesh(3, 4).unwrap();
        assert!((m.total_measure() - 0.75).abs() < 1e-12);
        assert!(generate_l_shaped_mesh(2, 3).is_err());
    }

    #[test]
    fn rejects_zero_subdivisions() {
        assert!(generate_structured_mesh(2, [0.0; 3], [1.0; 3], 0).is_err());
    }
}

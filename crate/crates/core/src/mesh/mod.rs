//! Mesh representation and incidence maps.
//!
//! A [`MeshTopology`] is immutable once built. Elements are stored with a
//! normalized orientation: counterclockwise rings in 2D and positive volume
//! in 3D. Edge and face ids follow the lexicographic order of their sorted
//! vertex tuples, so every build of the same input yields the same ids.

mod generate;
mod io;
mod metrics;

pub use generate::{generate_l_shaped_mesh, generate_mixed_mesh, generate_structured_mesh};
pub use io::{load_mesh, parse_gmsh22, parse_native, parse_node_ele, write_gmsh22, write_native, MeshFormat};
pub use metrics::{
    compute_metrics, element_diameter, element_measure, element_quality, ElementQuality, MeshMetrics, WStarPolicy,
};

use std::collections::HashMap;

use thiserror::Error;

use crate::geom::{self, Aabb, Point};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported element type {kind} at line {line}")]
    UnsupportedElement { line: usize, kind: String },
    #[error("mesh dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("mesh has no elements")]
    Empty,
    #[error("element {element}: {message}")]
    InvalidElement { element: usize, message: String },
    #[error("element {element} is degenerate (measure {measure:e})")]
    Degenerate { element: usize, measure: f64 },
    #[error("non-conforming mesh: {kind} {vertices:?} has {count} incident elements")]
    NonConforming {
        kind: &'static str,
        vertices: Vec<usize>,
        count: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Compressed row storage for incidence lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Csr {
    offsets: Vec<usize>,
    data: Vec<usize>,
}

impl Csr {
    pub fn from_rows<I, R>(rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = usize>,
    {
        let mut offsets = vec![0];
        let mut data = Vec::new();
        for row in rows {
            data.extend(row);
            offsets.push(data.len());
        }
        Self { offsets, data }
    }

    /// Groups `(row, value)` pairs into rows; values within a row end up
    /// sorted ascending.
    fn from_pairs(n_rows: usize, pairs: &[(usize, usize)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, _) in pairs {
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut data = vec![0; pairs.len()];
        for &(r, v) in pairs {
            data[cursor[r]] = v;
            cursor[r] += 1;
        }
        for r in 0..n_rows {
            data[counts[r]..counts[r + 1]].sort_unstable();
        }
        Self { offsets: counts, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[usize] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        (0..self.len()).map(move |i| self.row(i))
    }
}

#[derive(Debug, Clone)]
pub struct MeshTopology {
    dim: usize,
    vertices: Vec<Point>,
    elements: Csr,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    vertex_elements: Csr,
    vertex_edges: Csr,
    edge_elements: Csr,
    face_elements: Csr,
    /// 2D: edge of ring side `i` (from vertex `i` to `i + 1`).
    /// 3D: the six edges in `LOCAL_EDGES` order.
    element_edges: Csr,
    /// 3D only: face opposite local vertex `i`.
    element_faces: Csr,
    vertex_boundary: Vec<bool>,
    edge_boundary: Vec<bool>,
    face_boundary: Vec<bool>,
    bbox: Aabb,
    length_scale: f64,
}

/// Local vertex pairs of the six tetrahedron edges.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local vertex triples of the faces opposite vertices 0..4.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

impl MeshTopology {
    /// Builds the full topology from raw vertex coordinates and element
    /// vertex lists. Element orientation is normalized in place.
    pub fn new(dim: usize, vertices: Vec<Point>, elements: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        if dim != 2 && dim != 3 {
            return Err(MeshError::Dimension(dim));
        }
        if elements.is_empty() {
            return Err(MeshError::Empty);
        }
        let mut vertices = vertices;
        if dim == 2 {
            for v in &mut vertices {
                v[2] = 0.0;
            }
        }
        let mut elements = elements;
        for (k, el) in elements.iter_mut().enumerate() {
            validate_element(dim, k, el, vertices.len())?;
            normalize_orientation(dim, k, el, &vertices)?;
        }

        let bbox = Aabb::from_points(vertices.iter());
        let length_scale = elements
            .iter()
            .map(|el| {
                let mut d: f64 = 0.0;
                for (i, &a) in el.iter().enumerate() {
                    for &b in &el[i + 1..] {
                        d = d.max(geom::dist(vertices[a], vertices[b]));
                    }
                }
                d
            })
            .fold(0.0, f64::max);

        let n_v = vertices.len();
        let n_e = elements.len();

        // edges
        let mut local_edges: Vec<(usize, usize)> = Vec::new();
        for el in &elements {
            if dim == 2 {
                for i in 0..el.len() {
                    local_edges.push(ordered(el[i], el[(i + 1) % el.len()]));
                }
            } else {
                for [a, b] in TET_EDGES {
                    local_edges.push(ordered(el[a], el[b]));
                }
            }
        }
        let mut edge_keys = local_edges.clone();
        edge_keys.sort_unstable();
        edge_keys.dedup();
        let edge_id: HashMap<(usize, usize), usize> = edge_keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let edges: Vec<[usize; 2]> = edge_keys.iter().map(|&(a, b)| [a, b]).collect();

        let per = if dim == 2 { 0 } else { 6 };
        let mut element_edge_rows = Vec::with_capacity(n_e);
        let mut cursor = 0;
        for el in &elements {
            let count = if dim == 2 { el.len() } else { per };
            let row: Vec<usize> = local_edges[cursor..cursor + count].iter().map(|k| edge_id[k]).collect();
            cursor += count;
            element_edge_rows.push(row);
        }

        let mut edge_elem_pairs = Vec::new();
        for (k, row) in element_edge_rows.iter().enumerate() {
            for &e in row {
                edge_elem_pairs.push((e, k));
            }
        }
        let edge_elements = Csr::from_pairs(edges.len(), &edge_elem_pairs);
        let element_edges = Csr::from_rows(element_edge_rows);

        // faces (3D)
        let mut faces = Vec::new();
        let mut face_elements = Csr::from_rows(Vec::<Vec<usize>>::new());
        let mut element_faces = Csr::from_rows(Vec::<Vec<usize>>::new());
        if dim == 3 {
            let mut local_faces = Vec::with_capacity(4 * n_e);
            for el in &elements {
                for f in TET_FACES {
                    local_faces.push(sorted3([el[f[0]], el[f[1]], el[f[2]]]));
                }
            }
            let mut keys = local_faces.clone();
            keys.sort_unstable();
            keys.dedup();
            let face_id: HashMap<[usize; 3], usize> = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
            let ids: Vec<usize> = local_faces.iter().map(|k| face_id[k]).collect();
            let pairs: Vec<(usize, usize)> = ids.iter().enumerate().map(|(i, &f)| (f, i / 4)).collect();
            face_elements = Csr::from_pairs(keys.len(), &pairs);
            element_faces = Csr::from_rows(ids.chunks(4).map(|c| c.to_vec()));
            faces = keys;
            for (f, row) in face_elements.rows().enumerate() {
                if row.len() > 2 {
                    return Err(MeshError::NonConforming {
                        kind: "face",
                        vertices: faces[f].to_vec(),
                        count: row.len(),
                    });
                }
            }
        } else {
            for (e, row) in edge_elements.rows().enumerate() {
                if row.len() > 2 {
                    return Err(MeshError::NonConforming {
                        kind: "edge",
                        vertices: edges[e].to_vec(),
                        count: row.len(),
                    });
                }
            }
        }

        let mut ve_pairs = Vec::new();
        for (k, el) in elements.iter().enumerate() {
            for &v in el {
                ve_pairs.push((v, k));
            }
        }
        let vertex_elements = Csr::from_pairs(n_v, &ve_pairs);
        let mut vedge_pairs = Vec::with_capacity(2 * edges.len());
        for (e, &[a, b]) in edges.iter().enumerate() {
            vedge_pairs.push((a, e));
            vedge_pairs.push((b, e));
        }
        let vertex_edges = Csr::from_pairs(n_v, &vedge_pairs);

        let mut vertex_boundary = vec![false; n_v];
        let mut edge_boundary = vec![false; edges.len()];
        let mut face_boundary = vec![false; faces.len()];
        if dim == 2 {
            for (e, row) in edge_elements.rows().enumerate() {
                if row.len() == 1 {
                    edge_boundary[e] = true;
                    vertex_boundary[edges[e][0]] = true;
                    vertex_boundary[edges[e][1]] = true;
                }
            }
        } else {
            for (f, row) in face_elements.rows().enumerate() {
                if row.len() == 1 {
                    face_boundary[f] = true;
                    let [a, b, c] = faces[f];
                    for v in [a, b, c] {
                        vertex_boundary[v] = true;
                    }
                    for (x, y) in [(a, b), (a, c), (b, c)] {
                        edge_boundary[edge_id[&(x, y)]] = true;
                    }
                }
            }
        }

        Ok(Self {
            dim,
            vertices,
            elements: Csr::from_rows(elements),
            edges,
            faces,
            vertex_elements,
            vertex_edges,
            edge_elements,
            face_elements,
            element_edges,
            element_faces,
            vertex_boundary,
            edge_boundary,
            face_boundary,
            bbox,
            length_scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    #[inline]
    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Vertex ids of element `k` (N_K).
    #[inline]
    pub fn element(&self, k: usize) -> &[usize] {
        self.elements.row(k)
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> {
        self.elements.rows()
    }

    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Elements sharing vertex `v` (T_ν), ascending.
    #[inline]
    pub fn vertex_elements(&self, v: usize) -> &[usize] {
        self.vertex_elements.row(v)
    }

    /// Edges incident to vertex `v` (E_ν), ascending.
    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        self.vertex_edges.row(v)
    }

    /// Elements sharing edge `e` (T_e), ascending.
    #[inline]
    pub fn edge_elements(&self, e: usize) -> &[usize] {
        self.edge_elements.row(e)
    }

    /// Elements sharing face `f` (T_f), ascending.
    pub fn face_elements(&self, f: usize) -> &[usize] {
        self.face_elements.row(f)
    }

    pub fn element_edges(&self, k: usize) -> &[usize] {
        self.element_edges.row(k)
    }

    pub fn element_faces(&self, k: usize) -> &[usize] {
        self.element_faces.row(k)
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_boundary[v]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_boundary[e]
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_boundary[f]
    }

    /// Edge id joining `a` and `b`, if any.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { [a, b] } else { [b, a] };
        self.edges.binary_search(&key).ok()
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    /// Largest vertex-to-vertex distance within one element; used to scale
    /// tolerances before metrics are available.
    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn element_points(&self, k: usize) -> impl Iterator<Item = Point> + '_ {
        self.element(k).iter().map(move |&v| self.vertices[v])
    }

    pub fn centroid(&self, k: usize) -> Point {
        let el = self.element(k);
        let mut c = [0.0; 3];
        for &v in el {
            c = geom::add(c, self.vertices[v]);
        }
        geom::scale(c, 1.0 / el.len() as f64)
    }

    /// Closed point-in-element classification.
    pub fn classify(&self, k: usize, p: Point, tol: f64) -> Result<geom::Containment, geom::GeomError> {
        let el = self.element(k);
        if self.dim == 3 {
            let [a, b, c, d] = [el[0], el[1], el[2], el[3]].map(|v| self.vertices[v]);
            geom::point_in_tetrahedron(p, a, b, c, d, tol)
        } else if el.len() == 3 {
            let [a, b, c] = [el[0], el[1], el[2]].map(|v| geom::xy(self.vertices[v]));
            geom::point_in_triangle(geom::xy(p), a, b, c, tol)
        } else {
            let ring: Vec<[f64; 2]> = el.iter().map(|&v| geom::xy(self.vertices[v])).collect();
            geom::point_in_convex_polygon(geom::xy(p), &ring, tol)
        }
    }

    /// Closed containment test; degenerate elements count as not containing.
    pub fn contains(&self, k: usize, p: Point, tol: f64) -> bool {
        self.classify(k, p, tol).map(|c| c.is_closed_inside()).unwrap_or(false)
    }

    /// Sum of element measures (area or volume).
    pub fn total_measure(&self) -> f64 {
        (0..self.n_elements()).map(|k| signed_measure(self, k)).sum()
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

fn validate_element(dim: usize, k: usize, el: &[usize], n_v: usize) -> Result<(), MeshError> {
    let ok_len = if dim == 2 { el.len() >= 3 } else { el.len() == 4 };
    if !ok_len {
        return Err(MeshError::InvalidElement {
            element: k,
            message: format!("{} vertices not allowed in a {dim}D mesh", el.len()),
        });
    }
    for (i, &v) in el.iter().enumerate() {
        if v >= n_v {
            return Err(MeshError::InvalidElement {
                element: k,
                message: format!("vertex index {v} out of range ({n_v} vertices)"),
            });
        }
        if el[..i].contains(&v) {
            return Err(MeshError::InvalidElement {
                element: k,
                message: format!("repeated vertex {v}"),
            });
        }
    }
    Ok(())
}

fn raw_measure(dim: usize, el: &[usize], v: &[Point]) -> f64 {
    if dim == 2 {
        let n = el.len();
        let mut a = 0.0;
        for i in 0..n {
            let p = v[el[i]];
            let q = v[el[(i + 1) % n]];
            a += p[0] * q[1] - q[0] * p[1];
        }
        0.5 * a
    } else {
        geom::orient3d(v[el[0]], v[el[1]], v[el[2]], v[el[3]]) / 6.0
    }
}

pub(crate) fn signed_measure(mesh: &MeshTopology, k: usize) -> f64 {
    raw_measure(mesh.dim, mesh.element(k), &mesh.vertices)
}

fn normalize_orientation(dim: usize, k: usize, el: &mut [usize], v: &[Point]) -> Result<(), MeshError> {
    let m = raw_measure(dim, el, v);
    if m == 0.0 || !m.is_finite() {
        return Err(MeshError::Degenerate { element: k, measure: m });
    }
    if m < 0.0 {
        if dim == 2 {
            el.reverse();
        } else {
            el.swap(2, 3);
        }
    }
    Ok(())
}

use serde::{Deserialize, Serialize};

use super::{signed_measure, MeshError, MeshTopology, TET_EDGES, TET_FACES};
use crate::geom::{self, Point};

/// How the working patch radius w* is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum WStarPolicy {
    /// 0.99 w in 2D, 0.99 min(w, l_min/2) in 3D.
    #[default]
    Default,
    Absolute(f64),
    /// w* = w - margin.
    Margin(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshMetrics {
    pub dim: usize,
    pub h: f64,
    pub w: f64,
    pub rho: f64,
    pub alpha: f64,
    pub l_min: f64,
    pub w_star: f64,
    /// h / rho; informational only.
    pub quasi_uniformity: f64,
}

impl MeshMetrics {
    /// Distance w* / (1 + sin alpha) separating vertex-patch and edge-patch cells.
    pub fn patch_threshold(&self) -> f64 {
        self.w_star / (1.0 + self.alpha.sin())
    }
}

/// Per-element quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementQuality {
    pub measure: f64,
    pub diameter: f64,
    pub width: f64,
    pub inradius: f64,
    pub min_angle: f64,
}

fn angle_between(u: Point, v: Point) -> f64 {
    let c = geom::dot(u, v) / (geom::norm(u) * geom::norm(v));
    c.clamp(-1.0, 1.0).acos()
}

fn triangle_quality(a: Point, b: Point, c: Point) -> ElementQuality {
    let la = geom::dist(b, c);
    let lb = geom::dist(a, c);
    let lc = geom::dist(a, b);
    let area = 0.5 * geom::norm(geom::cross(geom::sub(b, a), geom::sub(c, a)));
    let min_angle = angle_between(geom::sub(b, a), geom::sub(c, a))
        .min(angle_between(geom::sub(a, b), geom::sub(c, b)))
        .min(angle_between(geom::sub(a, c), geom::sub(b, c)));
    ElementQuality {
        measure: area,
        diameter: la * lb * lc / (2.0 * area),
        width: 2.0 * area / la.max(lb).max(lc),
        inradius: 2.0 * area / (la + lb + lc),
        min_angle,
    }
}

fn circumdiameter_tet(p: [Point; 4]) -> f64 {
    // Solve 2 (p_i - p_0) . c = |p_i|^2 - |p_0|^2 with c relative to p_0.
    let r = [geom::sub(p[1], p[0]), geom::sub(p[2], p[0]), geom::sub(p[3], p[0])];
    let rhs = [
        geom::dot(r[0], r[0]) / 2.0,
        geom::dot(r[1], r[1]) / 2.0,
        geom::dot(r[2], r[2]) / 2.0,
    ];
    let det = geom::dot(r[0], geom::cross(r[1], r[2]));
    // Cramer's rule via the cross-product form of the inverse.
    let c = geom::scale(
        geom::add(
            geom::add(
                geom::scale(geom::cross(r[1], r[2]), rhs[0]),
                geom::scale(geom::cross(r[2], r[0]), rhs[1]),
            ),
            geom::scale(geom::cross(r[0], r[1]), rhs[2]),
        ),
        1.0 / det,
    );
    2.0 * geom::norm(c)
}

fn tet_quality(p: [Point; 4]) -> ElementQuality {
    let vol = geom::orient3d(p[0], p[1], p[2], p[3]).abs() / 6.0;
    let mut face_area = [0.0; 4];
    let mut normals = [[0.0; 3]; 4];
    let mut min_angle = f64::INFINITY;
    for (i, f) in TET_FACES.iter().enumerate() {
        let [a, b, c] = f.map(|j| p[j]);
        let mut n = geom::cross(geom::sub(b, a), geom::sub(c, a));
        if geom::dot(n, geom::sub(p[i], a)) > 0.0 {
            n = geom::scale(n, -1.0);
        }
        face_area[i] = 0.5 * geom::norm(n);
        normals[i] = geom::scale(n, 1.0 / geom::norm(n));
        min_angle = min_angle.min(triangle_quality(a, b, c).min_angle);
    }
    let mut width = f64::INFINITY;
    for &a in &face_area {
        width = width.min(3.0 * vol / a);
    }
    for [i, j] in TET_EDGES {
        // opposite edge is the complementary pair
        let rest: Vec<usize> = (0..4).filter(|&x| x != i && x != j).collect();
        let (k, l) = (rest[0], rest[1]);
        if i < k {
            let cr = geom::norm(geom::cross(geom::sub(p[j], p[i]), geom::sub(p[l], p[k])));
            width = width.min(6.0 * vol / cr);
        }
        // dihedral at edge (i, j) lies between the faces opposite k and l
        let d = std::f64::consts::PI - angle_between(normals[k], normals[l]);
        min_angle = min_angle.min(d);
    }
    ElementQuality {
        measure: vol,
        diameter: circumdiameter_tet(p),
        width,
        inradius: 3.0 * vol / face_area.iter().sum::<f64>(),
        min_angle,
    }
}

fn polygon_quality(pts: &[Point]) -> ElementQuality {
    let mut q = ElementQuality {
        measure: 0.0,
        diameter: 0.0,
        width: f64::INFINITY,
        inradius: f64::INFINITY,
        min_angle: f64::INFINITY,
    };
    for i in 1..pts.len() - 1 {
        let t = triangle_quality(pts[0], pts[i], pts[i + 1]);
        q.measure += t.measure;
        q.width = q.width.min(t.width);
        q.inradius = q.inradius.min(t.inradius);
        q.min_angle = q.min_angle.min(t.min_angle);
    }
    for (i, &a) in pts.iter().enumerate() {
        for &b in &pts[i + 1..] {
            q.diameter = q.diameter.max(geom::dist(a, b));
        }
    }
    q
}

/// Geometric quality of element `k`, without degeneracy checks.
pub fn element_quality(mesh: &MeshTopology, k: usize) -> ElementQuality {
    let pts: Vec<Point> = mesh.element_points(k).collect();
    match (mesh.dim(), pts.len()) {
        (3, _) => tet_quality([pts[0], pts[1], pts[2], pts[3]]),
        (_, 3) => triangle_quality(pts[0], pts[1], pts[2]),
        _ => polygon_quality(&pts),
    }
}

fn check_measure(mesh: &MeshTopology, k: usize) -> Result<f64, MeshError> {
    let m = signed_measure(mesh, k);
    let scale = mesh.length_scale().powi(mesh.dim() as i32);
    if !(m >= 1e-14 * scale) {
        return Err(MeshError::Degenerate { element: k, measure: m });
    }
    Ok(m)
}

/// Area (2D) or volume (3D) of element `k`.
pub fn element_measure(mesh: &MeshTopology, k: usize) -> Result<f64, MeshError> {
    check_measure(mesh, k)
}

/// Circumdiameter h_K (max vertex distance for polygons with more than 3 vertices).
pub fn element_diameter(mesh: &MeshTopology, k: usize) -> Result<f64, MeshError> {
    check_measure(mesh, k)?;
    Ok(element_quality(mesh, k).diameter)
}

pub fn compute_metrics(mesh: &MeshTopology, policy: WStarPolicy) -> Result<MeshMetrics, MeshError> {
    let mut h: f64 = 0.0;
    let mut w = f64::INFINITY;
    let mut rho = f64::INFINITY;
    let mut alpha = f64::INFINITY;
    let mut qualities = Vec::with_capacity(mesh.n_elements());
    for k in 0..mesh.n_elements() {
        let q = element_quality(mesh, k);
        h = h.max(q.diameter);
        w = w.min(q.width);
        rho = rho.min(q.inradius);
        alpha = alpha.min(q.min_angle);
        qualities.push(q);
    }
    let floor = 1e-14 * h.powi(mesh.dim() as i32);
    for (k, q) in qualities.iter().enumerate() {
        if !(q.measure >= floor) {
            return Err(MeshError::Degenerate {
                element: k,
                measure: q.measure,
            });
        }
    }
    let l_min = mesh
        .edges()
        .iter()
        .map(|&[a, b]| geom::dist(mesh.vertex(a), mesh.vertex(b)))
        .fold(f64::INFINITY, f64::min);
    let cap = if mesh.dim() == 3 { w.min(l_min / 2.0) } else { w };
    let w_star = match policy {
        WStarPolicy::Default => 0.99 * cap,
        WStarPolicy::Absolute(v) => v,
        WStarPolicy::Margin(m) => w - m,
    };
    if !(w_star > 0.0 && w_star < cap) {
        return Err(MeshError::InvalidParameter(format!(
            "w* = {w_star} must lie in (0, {cap}) for this mesh"
        )));
    }
    Ok(MeshMetrics {
        dim: mesh.dim(),
        h,
        w,
        rho,
        alpha,
        l_min,
        w_star,
        quasi_uniformity: h / rho,
    })
}

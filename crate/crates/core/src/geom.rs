//! Geometric kernels shared by the index builder, the locator and the
//! baselines.
//!
//! Everything here works in plain `f64`. Intersection predicates treat
//! their operands as closed sets and accept a tolerance so that the
//! initialization passes over-approximate rather than miss cells.

use thiserror::Error;

/// A point or vector. Two-dimensional data keeps `z = 0`.
pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeomError {
    #[error("pseudo-angle of the zero vector is undefined")]
    ZeroVector,
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("degenerate tetrahedron")]
    DegenerateTetrahedron,
    #[error("polygon ring is not convex and counterclockwise")]
    NonConvexPolygon,
    #[error("degenerate edge")]
    DegenerateEdge,
    #[error("vector is parallel to the edge direction; its projection vanishes")]
    ParallelToEdge,
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Point, k: f64) -> Point {
    [a[0] * k, a[1] * k, a[2] * k]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// z-component of the cross product of two planar vectors.
#[inline]
pub fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Twice the signed area of `(a, b, c)`, positive when counterclockwise.
#[inline]
pub fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Six times the signed volume of `(a, b, c, d)`.
#[inline]
pub fn orient3d(a: Point, b: Point, c: Point, d: Point) -> f64 {
    dot(sub(b, a), cross(sub(c, a), sub(d, a)))
}

#[inline]
pub fn xy(p: Point) -> [f64; 2] {
    [p[0], p[1]]
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Aabb {
    pub lo: Point,
    pub hi: Point,
}

impl Aabb {
    pub fn new(lo: Point, hi: Point) -> Self {
        Self { lo, hi }
    }

    pub fn empty() -> Self {
        Self {
            lo: [f64::INFINITY; 3],
            hi: [f64::NEG_INFINITY; 3],
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.expand(*p);
        }
        b
    }

    pub fn expand(&mut self, p: Point) {
        for i in 0..3 {
            self.lo[i] = self.lo[i].min(p[i]);
            self.hi[i] = self.hi[i].max(p[i]);
        }
    }

    pub fn extent(&self) -> Point {
        sub(self.hi, self.lo)
    }

    pub fn contains(&self, p: Point, dim: usize) -> bool {
        (0..dim).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi[i])
    }
}

/// Monotone surrogate for the clockwise angle measured from `(0, 1)`.
///
/// Values lie in `[-2, 2)`; `(0, 1)` maps to `-2` and the value grows
/// strictly as the direction turns clockwise.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PseudoAngle(f64);

impl PseudoAngle {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[inline]
fn sign(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Pseudo-angle without the zero-vector check. The caller guarantees
/// `(x, y) != (0, 0)`.
#[inline]
pub fn pseudo_angle_unchecked(x: f64, y: f64) -> f64 {
    let sx = sign(x);
    let sy = sign(y);
    sx * x / (sy * x + sx * y) - sx * (sy + 1.0)
}

pub fn pseudo_angle(x: f64, y: f64) -> Result<PseudoAngle, GeomError> {
    if x == 0.0 && y == 0.0 {
        return Err(GeomError::ZeroVector);
    }
    Ok(PseudoAngle(pseudo_angle_unchecked(x, y)))
}

/// Returns `i` with `angles[i] <= query < angles[i + 1]`, wrapping to the
/// last sector when the query is below `angles[0]` or at/after the last
/// ray. `angles` must be strictly ascending and non-empty.
#[inline]
pub fn sector_search(angles: &[f64], query: f64) -> usize {
    sector_search_counted(angles, query).0
}

/// [`sector_search`] that also reports the number of comparisons made.
#[inline]
pub fn sector_search_counted(angles: &[f64], query: f64) -> (usize, u32) {
    debug_assert!(!angles.is_empty());
    let n = angles.len();
    let (mut base, mut size) = (0usize, n);
    let mut comparisons = 1;
    while size > 1 {
        let half = size / 2;
        let mid = base + half;
        comparisons += 1;
        base = if angles[mid] <= query { mid } else { base };
        size -= half;
    }
    let sector = if angles[base] <= query { base } else { n - 1 };
    (sector, comparisons)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Boundary,
    Outside,
}

impl Containment {
    pub fn is_closed_inside(self) -> bool {
        self != Containment::Outside
    }

    fn from_min_distance(min: f64, tol: f64) -> Self {
        if min < -tol {
            Containment::Outside
        } else if min <= tol {
            Containment::Boundary
        } else {
            Containment::Inside
        }
    }
}

/// Classifies `p` against triangle `abc` using signed distances to the
/// three edge lines; `tol` is the half-width of the boundary band.
pub fn point_in_triangle(
    p: [f64; 2],
    a: [f64; 2],
    b: [f64; 2],
    c: [f64; 2],
    tol: f64,
) -> Result<Containment, GeomError> {
    let area2 = orient2d(a, b, c);
    let scale = [sub2(b, a), sub2(c, b), sub2(a, c)]
        .iter()
        .map(|e| e[0].hypot(e[1]))
        .fold(0.0, f64::max);
    if area2.abs() <= 1e-14 * scale * scale {
        return Err(GeomError::DegenerateTriangle);
    }
    let s = area2.signum();
    let mut min = f64::INFINITY;
    for (u, v) in [(a, b), (b, c), (c, a)] {
        let len = (v[0] - u[0]).hypot(v[1] - u[1]);
        min = min.min(s * orient2d(u, v, p) / len);
    }
    Ok(Containment::from_min_distance(min, tol))
}

/// Classifies `p` against tetrahedron `abcd` using signed distances to
/// its four face planes.
pub fn point_in_tetrahedron(
    p: Point,
    a: Point,
    b: Point,
    c: Point,
    d: Point,
    tol: f64,
) -> Result<Containment, GeomError> {
    let vol6 = orient3d(a, b, c, d);
    let l = [dist(a, b), dist(a, c), dist(a, d), dist(b, c), dist(b, d), dist(c, d)]
        .into_iter()
        .fold(0.0, f64::max);
    if vol6.abs() <= 1e-14 * l * l * l {
        return Err(GeomError::DegenerateTetrahedron);
    }
    let faces = [(b, c, d, a), (a, c, d, b), (a, b, d, c), (a, b, c, d)];
    let mut min = f64::INFINITY;
    for (u, v, w, opposite) in faces {
        let n = cross(sub(v, u), sub(w, u));
        let side = dot(n, sub(opposite, u)).signum();
        min = min.min(side * dot(n, sub(p, u)) / norm(n));
    }
    Ok(Containment::from_min_distance(min, tol))
}

#[inline]
fn sub2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Classifies `p` against a convex, counterclockwise polygon ring.
pub fn point_in_convex_polygon(p: [f64; 2], ring: &[[f64; 2]], tol: f64) -> Result<Containment, GeomError> {
    let n = ring.len();
    if n < 3 {
        return Err(GeomError::NonConvexPolygon);
    }
    let mut min = f64::INFINITY;
    for i in 0..n {
        let u = ring[i];
        let v = ring[(i + 1) % n];
        let w = ring[(i + 2) % n];
        let e = sub2(v, u);
        let len = e[0].hypot(e[1]);
        if len == 0.0 || cross2(e, sub2(w, v)) < -1e-14 * len * len {
            return Err(GeomError::NonConvexPolygon);
        }
        min = min.min(orient2d(u, v, p) / len);
    }
    Ok(Containment::from_min_distance(min, tol))
}

/// Clips segment `a -> b` against the closed box `[lo, hi]`, returning the
/// parameter interval `[t_in, t_out] ⊆ [0, 1]` that lies in the box.
pub fn segment_box_clip<const N: usize>(a: [f64; N], b: [f64; N], lo: [f64; N], hi: [f64; N]) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for i in 0..N {
        let d = b[i] - a[i];
        if d == 0.0 {
            if a[i] < lo[i] || a[i] > hi[i] {
                return None;
            }
            continue;
        }
        let (mut ta, mut tb) = ((lo[i] - a[i]) / d, (hi[i] - a[i]) / d);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

/// First parameter `t ∈ [0, 1]` at which `a + t (b - a)` lies in the box.
pub fn segment_box_intersection<const N: usize>(a: [f64; N], b: [f64; N], lo: [f64; N], hi: [f64; N]) -> Option<f64> {
    segment_box_clip(a, b, lo, hi).map(|(t0, _)| t0)
}

/// Parameter interval, clipped to `[0, 1]`, where segment `a -> b` meets the
/// closed ball of the given center and radius.
pub fn segment_ball_intersection(a: Point, b: Point, center: Point, radius: f64) -> Option<(f64, f64)> {
    let d = sub(b, a);
    let f = sub(a, center);
    let dd = dot(d, d);
    let r2 = radius * radius;
    if dd == 0.0 {
        return (dot(f, f) <= r2).then_some((0.0, 1.0));
    }
    let half_b = dot(f, d);
    let c = dot(f, f) - r2;
    let disc = half_b * half_b - dd * c;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let t1 = (-half_b - root) / dd;
    let t2 = (-half_b + root) / dd;
    let lo = t1.max(0.0);
    let hi = t2.min(1.0);
    (lo <= hi).then_some((lo, hi))
}

/// Separating-axis overlap test between a closed triangle and a closed box,
/// with the box inflated by `eps`.
pub fn triangle_box_intersect(tri: [Point; 3], lo: Point, hi: Point, eps: f64) -> bool {
    let c = scale(add(lo, hi), 0.5);
    let h = scale(sub(hi, lo), 0.5);
    let v = [sub(tri[0], c), sub(tri[1], c), sub(tri[2], c)];
    let e = [sub(v[1], v[0]), sub(v[2], v[1]), sub(v[0], v[2])];

    let separated = |axis: Point| -> bool {
        let r = h[0] * axis[0].abs() + h[1] * axis[1].abs() + h[2] * axis[2].abs();
        let p0 = dot(v[0], axis);
        let p1 = dot(v[1], axis);
        let p2 = dot(v[2], axis);
        let min = p0.min(p1).min(p2);
        let max = p0.max(p1).max(p2);
        let slack = eps * norm(axis);
        min > r + slack || max < -r - slack
    };

    for i in 0..3 {
        let mut axis = [0.0; 3];
        axis[i] = 1.0;
        if separated(axis) {
            return false;
        }
    }
    let n = cross(e[0], e[1]);
    if n != [0.0; 3] && separated(n) {
        return false;
    }
    for edge in e {
        for i in 0..3 {
            let mut unit = [0.0; 3];
            unit[i] = 1.0;
            let axis = cross(edge, unit);
            if axis != [0.0; 3] && separated(axis) {
                return false;
            }
        }
    }
    true
}

/// Separating-axis overlap test between a closed convex polygon and a
/// closed rectangle inflated by `eps`.
pub fn polygon_box_intersect(ring: &[[f64; 2]], lo: [f64; 2], hi: [f64; 2], eps: f64) -> bool {
    for i in 0..2 {
        let min = ring.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
        let max = ring.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
        if min > hi[i] + eps || max < lo[i] - eps {
            return false;
        }
    }
    let corners = [lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
    let n = ring.len();
    for i in 0..n {
        let u = ring[i];
        let v = ring[(i + 1) % n];
        let normal = [v[1] - u[1], u[0] - v[0]];
        let len = normal[0].hypot(normal[1]);
        if len == 0.0 {
            continue;
        }
        let off = normal[0] * u[0] + normal[1] * u[1];
        let min_box = corners
            .iter()
            .map(|c| normal[0] * c[0] + normal[1] * c[1])
            .fold(f64::INFINITY, f64::min);
        // ring is counterclockwise so `normal` points outward
        if min_box - off > eps * len {
            return false;
        }
    }
    true
}

/// Separating-axis overlap test between a closed tetrahedron and a closed
/// box inflated by `eps`.
pub fn tetrahedron_box_intersect(tet: [Point; 4], lo: Point, hi: Point, eps: f64) -> bool {
    let c = scale(add(lo, hi), 0.5);
    let h = scale(sub(hi, lo), 0.5);
    let v = [sub(tet[0], c), sub(tet[1], c), sub(tet[2], c), sub(tet[3], c)];
    let separated = |axis: Point| -> bool {
        let r = h[0] * axis[0].abs() + h[1] * axis[1].abs() + h[2] * axis[2].abs();
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for p in &v {
            let d = dot(*p, axis);
            min = min.min(d);
            max = max.max(d);
        }
        let slack = eps * norm(axis);
        min > r + slack || max < -r - slack
    };
    for i in 0..3 {
        let mut axis = [0.0; 3];
        axis[i] = 1.0;
        if separated(axis) {
            return false;
        }
    }
    const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];
    for f in FACES {
        let n = cross(sub(v[f[1]], v[f[0]]), sub(v[f[2]], v[f[0]]));
        if n != [0.0; 3] && separated(n) {
            return false;
        }
    }
    const EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];
    for [a, b] in EDGES {
        let edge = sub(v[b], v[a]);
        for i in 0..3 {
            let mut unit = [0.0; 3];
            unit[i] = 1.0;
            let axis = cross(edge, unit);
            if axis != [0.0; 3] && separated(axis) {
                return false;
            }
        }
    }
    true
}

/// Orthogonal projection of `center` onto the line through `a` and `b`.
pub fn chi_point(a: Point, b: Point, center: Point) -> Result<Point, GeomError> {
    let d = sub(b, a);
    let len = norm(d);
    if len == 0.0 {
        return Err(GeomError::DegenerateEdge);
    }
    let u = scale(d, 1.0 / len);
    Ok(add(a, scale(u, dot(sub(center, a), u))))
}

/// Orthogonal projection of `p` onto the plane through `origin` with unit
/// normal `n`.
pub fn project_onto_plane(p: Point, origin: Point, n: Point) -> Point {
    let v = sub(p, origin);
    sub(p, scale(n, dot(v, n)))
}

/// Orthonormal frame of the plane through an edge's anchor vertex,
/// perpendicular to the edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneBasis {
    pub origin: Point,
    pub u: Point,
    pub v: Point,
    pub normal: Point,
}

impl PlaneBasis {
    pub fn new(origin: Point, direction: Point) -> Result<Self, GeomError> {
        let len = norm(direction);
        if len == 0.0 {
            return Err(GeomError::DegenerateEdge);
        }
        let normal = scale(direction, 1.0 / len);
        // seed with the coordinate axis least aligned with the normal
        let mut k = 0;
        for i in 1..3 {
            if normal[i].abs() < normal[k].abs() {
                k = i;
            }
        }
        let mut axis = [0.0; 3];
        axis[k] = 1.0;
        let u = sub(axis, scale(normal, dot(axis, normal)));
        let u = scale(u, 1.0 / norm(u));
        let v = cross(normal, u);
        Ok(Self { origin, u, v, normal })
    }

    /// In-plane coordinates of `v` (a direction, not a point), without
    /// normalization. Ordering by pseudo-angle is scale invariant, so the
    /// query path uses this directly.
    #[inline]
    pub fn coords(&self, v: Point) -> [f64; 2] {
        [dot(v, self.u), dot(v, self.v)]
    }

    /// Unit in-plane direction of `v` after removing its normal component.
    pub fn project(&self, v: Point) -> Result<[f64; 2], GeomError> {
        let c = self.coords(v);
        let len = c[0].hypot(c[1]);
        if len <= 1e-12 * norm(v) || len == 0.0 {
            return Err(GeomError::ParallelToEdge);
        }
        Ok([c[0] / len, c[1] / len])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn clockwise_from_up(x: f64, y: f64) -> f64 {
        let a = x.atan2(y);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    }

    #[test]
    fn pseudo_angle_reference_values() {
        assert_eq!(pseudo_angle(0.0, 1.0).unwrap().value(), -2.0);
        assert_eq!(pseudo_angle(1.0, 1.0).unwrap().value(), -1.5);
        assert_eq!(pseudo_angle(-1.0, 0.0).unwrap().value(), 1.0);
        assert_eq!(pseudo_angle(0.0, 0.0), Err(GeomError::ZeroVector));
    }

    #[test]
    fn sector_search_conventions() {
        let a = [-2.0, -1.0, 0.0, 1.0];
        assert_eq!(sector_search(&a, -1.5), 0);
        assert_eq!(sector_search(&a, 1.7), 3);
        assert_eq!(sector_search(&a, -1.0), 1);
        assert_eq!(sector_search(&[-1.0, 0.5], -1.5), 1);
        let (_, c) = sector_search_counted(&[0.0; 1], 0.0);
        assert_eq!(c, 1);
    }

    #[test]
    fn triangle_classification() {
        let (a, b, c) = ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        let t = 1e-12;
        assert_eq!(
            point_in_triangle([1.0 / 3.0, 1.0 / 3.0], a, b, c, t),
            Ok(Containment::Inside)
        );
        assert_eq!(point_in_triangle([0.5, 0.0], a, b, c, t), Ok(Containment::Boundary));
        assert_eq!(point_in_triangle([2.0, 2.0], a, b, c, t), Ok(Containment::Outside));
        assert_eq!(
            point_in_triangle([0.1, 0.1], a, b, [2.0, 0.0], t),
            Err(GeomError::DegenerateTriangle)
        );
    }

    #[test]
    fn tetrahedron_classification() {
        let o = [0.0, 0.0, 0.0];
        let (x, y, z) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
        let t = 1e-12;
        assert_eq!(point_in_tetrahedron([0.25; 3], o, x, y, z, t), Ok(Containment::Inside));
        let fc = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        assert_eq!(point_in_tetrahedron(fc, o, x, y, z, t), Ok(Containment::Boundary));
        assert_eq!(point_in_tetrahedron([1.0; 3], o, x, y, z, t), Ok(Containment::Outside));
        assert_eq!(
            point_in_tetrahedron([0.1; 3], o, x, y, [1.0, 1.0, 0.0], t),
            Err(GeomError::DegenerateTetrahedron)
        );
    }

    #[test]
    fn polygon_classification() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let t = 1e-12;
        assert_eq!(point_in_convex_polygon([0.5, 0.5], &sq, t), Ok(Containment::Inside));
        assert_eq!(point_in_convex_polygon([1.0, 0.5], &sq, t), Ok(Containment::Boundary));
        assert_eq!(point_in_convex_polygon([1.5, 0.5], &sq, t), Ok(Containment::Outside));
        let dart = [[0.0, 0.0], [1.0, 0.0], [0.2, 0.2], [0.0, 1.0]];
        assert_eq!(
            point_in_convex_polygon([0.1, 0.1], &dart, t),
            Err(GeomError::NonConvexPolygon)
        );
    }

    #[test]
    fn segment_box_cases() {
        let t = segment_box_intersection([-1.0, 0.5], [2.0, 0.5], [0.0, 0.0], [1.0, 1.0]).unwrap();
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            segment_box_intersection([0.2, 0.2], [0.8, 0.7], [0.0, 0.0], [1.0, 1.0]),
            Some(0.0)
        );
        assert_eq!(
            segment_box_intersection([2.0, 2.0], [3.0, 3.0], [0.0, 0.0], [1.0, 1.0]),
            None
        );
    }

    #[test]
    fn segment_ball_cases() {
        let o = [0.0; 3];
        assert_eq!(
            segment_ball_intersection([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0], o, 1.0),
            Some((0.0, 1.0))
        );
        let (t1, t2) = segment_ball_intersection([-1.0, 1.0, 0.0], [1.0, 1.0, 0.0], o, 1.0).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(
            segment_ball_intersection([-1.0, 2.0, 0.0], [1.0, 2.0, 0.0], o, 1.0),
            None
        );
    }

    #[test]
    fn triangle_box_cases() {
        let (lo, hi) = ([0.0; 3], [1.0; 3]);
        let spanning = [[-1.0, -1.0, 0.5], [3.0, -1.0, 0.5], [-1.0, 3.0, 0.5]];
        assert!(triangle_box_intersect(spanning, lo, hi, 0.0));
        let on_face = [[0.2, 0.2, 1.0], [0.8, 0.2, 1.0], [0.2, 0.8, 1.0]];
        assert!(triangle_box_intersect(on_face, lo, hi, 0.0));
        let far = [[5.0, 5.0, 5.0], [6.0, 5.0, 5.0], [5.0, 6.0, 5.0]];
        assert!(!triangle_box_intersect(far, lo, hi, 0.0));
    }

    #[test]
    fn chi_point_cases() {
        let (a, b) = ([0.0, 0.0, 0.0], [2.0, 0.0, 0.0]);
        assert_eq!(chi_point(a, b, [1.0, 3.0, -2.0]).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(chi_point(a, b, a).unwrap(), a);
        assert_eq!(chi_point(a, b, [0.5, 1.0, 1.0]).unwrap(), [0.5, 0.0, 0.0]);
        assert_eq!(chi_point(a, a, b), Err(GeomError::DegenerateEdge));
    }

    #[test]
    fn plane_basis_cases() {
        let basis = PlaneBasis::new([0.0; 3], [0.0, 0.0, 2.0]).unwrap();
        let w = basis.project([1.0, 0.0, 0.7]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15 && w[1].abs() < 1e-15);
        let w = basis.project(basis.u).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15 && w[1].abs() < 1e-15);
        assert_eq!(basis.project([0.0, 0.0, 1.0]), Err(GeomError::ParallelToEdge));
    }

    proptest! {
        #[test]
        fn pseudo_angle_orders_like_clockwise_angle(
            a in 0.0..(2.0 * PI), b in 0.0..(2.0 * PI), ra in 1e-3..1e3f64, rb in 1e-3..1e3f64
        ) {
            let (ax, ay) = (ra * a.sin(), ra * a.cos());
            let (bx, by) = (rb * b.sin(), rb * b.cos());
            let pa = pseudo_angle(ax, ay).unwrap().value();
            let pb = pseudo_angle(bx, by).unwrap().value();
            prop_assert!((-2.0..2.0).contains(&pa));
            let (ta, tb) = (clockwise_from_up(ax, ay), clockwise_from_up(bx, by));
            if (ta - tb).abs() > 1e-12 {
                prop_assert_eq!(pa < pb, ta < tb);
            }
        }

        #[test]
        fn plane_basis_is_orthonormal(d in prop::array::uniform3(-1.0..1.0f64)) {
            prop_assume!(norm(d) > 1e-3);
            let b = PlaneBasis::new([0.0; 3], d).unwrap();
            prop_assert!(dot(b.u, b.v).abs() < 1e-12);
            prop_assert!((norm(b.u) - 1.0).abs() < 1e-12 && (norm(b.v) - 1.0).abs() < 1e-12);
            prop_assert!(dot(b.u, b.normal).abs() < 1e-12 && dot(b.v, b.normal).abs() < 1e-12);
        }

        #[test]
        fn segment_ball_agrees_with_sampling(
            a in prop::array::uniform3(-2.0..2.0f64),
            b in prop::array::uniform3(-2.0..2.0f64),
            c in prop::array::uniform3(-1.0..1.0f64),
            r in 0.1..1.5f64,
        ) {
            let hit = segment_ball_intersection(a, b, c, r).is_some();
            let mut sampled_hit = false;
            let mut min_gap = f64::INFINITY;
            for i in 0..=1000 {
                let t = i as f64 / 1000.0;
                let p = add(a, scale(sub(b, a), t));
                let d = dist(p, c);
                min_gap = min_gap.min((d - r).abs());
                sampled_hit |= d <= r;
            }
            // sampling can miss grazing contacts; only compare clear cases
            if min_gap > 1e-2 * norm(sub(b, a)).max(1e-3) {
                prop_assert_eq!(hit, sampled_hit);
            }
        }

        #[test]
        fn triangle_box_agrees_with_barycentric_sampling(
            p0 in prop::array::uniform3(-1.0..2.0f64),
            p1 in prop::array::uniform3(-1.0..2.0f64),
            p2 in prop::array::uniform3(-1.0..2.0f64),
        ) {
            let tri = [p0, p1, p2];
            prop_assume!(norm(cross(sub(p1, p0), sub(p2, p0))) > 1e-2);
            let (lo, hi) = ([0.0; 3], [1.0; 3]);
            let exact = triangle_box_intersect(tri, lo, hi, 0.0);
            let n = 60;
            let mut inside = false;
            let mut outside_margin = f64::INFINITY;
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let (t1, t2) = (i as f64 / n as f64, j as f64 / n as f64);
                    let q = add(p2, add(scale(sub(p0, p2), t1), scale(sub(p1, p2), t2)));
                    let d = (0..3)
                        .map(|k| (lo[k] - q[k]).max(q[k] - hi[k]).max(0.0))
                        .fold(0.0, f64::max);
                    inside |= d == 0.0;
                    outside_margin = outside_margin.min(d);
                }
            }
            if inside {
                prop_assert!(exact);
            } else if outside_margin > 0.1 {
                prop_assert!(!exact);
            }
        }

        #[test]
        fn triangle_classification_is_permutation_invariant(
            a in prop::array::uniform2(-1.0..1.0f64),
            b in prop::array::uniform2(-1.0..1.0f64),
            c in prop::array::uniform2(-1.0..1.0f64),
            p in prop::array::uniform2(-1.5..1.5f64),
        ) {
            prop_assume!(orient2d(a, b, c).abs() > 1e-3);
            let r = point_in_triangle(p, a, b, c, 1e-12).unwrap();
            prop_assert_eq!(r, point_in_triangle(p, b, c, a, 1e-12).unwrap());
            prop_assert_eq!(r, point_in_triangle(p, c, b, a, 1e-12).unwrap());
        }

        #[test]
        fn tetrahedron_classification_is_permutation_invariant(
            a in prop::array::uniform3(-1.0..1.0f64),
            b in prop::array::uniform3(-1.0..1.0f64),
            c in prop::array::uniform3(-1.0..1.0f64),
            d in prop::array::uniform3(-1.0..1.0f64),
            p in prop::array::uniform3(-1.0..1.0f64),
        ) {
            prop_assume!(orient3d(a, b, c, d).abs() > 1e-2);
            let r = point_in_tetrahedron(p, a, b, c, d, 1e-12).unwrap();
            prop_assert_eq!(r, point_in_tetrahedron(p, b, a, c, d, 1e-12).unwrap());
            prop_assert_eq!(r, point_in_tetrahedron(p, d, c, b, a, 1e-12).unwrap());
        }
    }
}

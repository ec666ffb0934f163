use super::{build_edge_fan, hit, BuildError, Builder};
use crate::geom::{self, Aabb, Point};
use crate::grid::{flags, NONE};

pub(super) fn run(b: &mut Builder) -> Result<(), BuildError> {
    edge_pass(b);
    face_pass(b)?;
    b.element_pass();
    b.fallback_pass();
    for e in 0..b.mesh.n_edges() {
        let fan = build_edge_fan(&b.mesh, e)?;
        b.fans.push(&fan.angles, &fan.payload);
        b.bases.push([fan.basis.u, fan.basis.v]);
    }
    Ok(())
}

fn threshold(b: &Builder) -> f64 {
    b.metrics.patch_threshold()
}

/// The nearer endpoint of `(v1, v2)` to `q`, plus the edge itself when `q`
/// is farther than `thr` from both endpoints.
fn classify_on_edge(b: &Builder, e: usize, q: Point, thr: f64) -> (u32, u32) {
    let [v1, v2] = b.mesh.edge(e);
    let d1 = geom::dist(q, b.mesh.vertex(v1));
    let d2 = geom::dist(q, b.mesh.vertex(v2));
    let phi = if d1 < d2 { v1 } else { v2 };
    let psi = if d1 > thr && d2 > thr { e as u32 } else { NONE };
    (phi as u32, psi)
}

fn edge_pass(b: &mut Builder) {
    let thr = threshold(b);
    let r = 3f64.sqrt() * b.grid.s / 2.0;
    let this = &*b;
    let per_edge = this.map_ids(this.mesh.n_edges(), |e| {
        let [v1, v2] = this.mesh.edge(e);
        let (p1, p2) = (this.mesh.vertex(v1), this.mesh.vertex(v2));
        let grid = &this.grid;
        let range = grid.inflate_range(grid.cell_range(&Aabb::from_points([p1, p2].iter())), 1);
        let mut out = Vec::new();
        let mut visits = 0u64;
        for cell in grid.cells_in(range) {
            visits += 1;
            let omega = grid.cell_center(cell);
            if let Some((t1, t2)) = geom::segment_ball_intersection(p1, p2, omega, r + this.tol) {
                let t = 0.5 * (t1 + t2);
                let q = geom::add(p1, geom::scale(geom::sub(p2, p1), t));
                let (phi, psi) = classify_on_edge(this, e, q, thr);
                out.push((grid.linear(cell) as u32, phi, psi));
            }
        }
        (out, visits)
    });
    for (cells, visits) in per_edge {
        b.stats.edge_visits += visits;
        for (idx, phi, psi) in cells {
            let c = b.table.get_mut(idx as usize);
            c.phi = phi;
            if psi != NONE {
                c.psi = psi;
            }
            b.hits[idx as usize] |= hit::EDGE;
        }
    }
}

fn face_pass(b: &mut Builder) -> Result<(), BuildError> {
    let thr = threshold(b);
    let this = &*b;
    let per_face = this.map_ids(this.mesh.n_faces(), |f| {
        let tri = this.mesh.face(f).map(|v| this.mesh.vertex(v));
        let grid = &this.grid;
        let range = grid.inflate_range(grid.cell_range(&Aabb::from_points(tri.iter())), 1);
        let mut out = Vec::new();
        let mut visits = 0u64;
        for cell in grid.cells_in(range) {
            visits += 1;
            if geom::triangle_box_intersect(tri, grid.cell_lo(cell), grid.cell_hi(cell), this.tol) {
                out.push(grid.linear(cell) as u32);
            }
        }
        (out, visits)
    });
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for (f, (cells, visits)) in per_face.into_iter().enumerate() {
        b.stats.face_visits += visits;
        pairs.extend(cells.into_iter().map(|c| (c, f as u32)));
    }
    pairs.sort_unstable();

    let mut start = 0;
    while start < pairs.len() {
        let idx = pairs[start].0 as usize;
        let mut end = start;
        while end < pairs.len() && pairs[end].0 as usize == idx {
            end += 1;
        }
        let faces: Vec<usize> = pairs[start..end].iter().map(|p| p.1 as usize).collect();
        start = end;

        b.hits[idx] |= hit::FACE;
        if faces.iter().any(|&f| b.mesh.is_boundary_face(f)) {
            b.table.get_mut(idx).flags |= flags::NEAR_BOUNDARY;
        }
        let entry = *b.table.get(idx);
        if entry.phi != NONE && entry.psi != NONE {
            continue;
        }
        if faces.len() == 1 {
            let [x, y, z] = b.mesh.face(faces[0]);
            let e = [(x, y), (x, z), (y, z)]
                .iter()
                .map(|&(p, q)| b.mesh.find_edge(p, q).expect("face edges exist"))
                .min()
                .expect("three edges");
            let c = b.table.get_mut(idx);
            c.phi = x.min(y).min(z) as u32;
            c.psi = e as u32;
            continue;
        }
        // an element owning two of the faces; first by (element, face) order
        let mut owned: Vec<(usize, usize)> = faces
            .iter()
            .flat_map(|&f| b.mesh.face_elements(f).iter().map(move |&k| (k, f)))
            .collect();
        owned.sort_unstable();
        let pair = owned.windows(2).find(|w| w[0].0 == w[1].0).map(|w| (w[0].1, w[1].1));
        if pair.is_some() {
            b.hits[idx] |= hit::TWO_FACES;
        }
        if entry.phi != NONE {
            continue;
        }
        let Some((f1, f2)) = pair else {
            return Err(BuildError::NoSharedEdge {
                cell: idx,
                faces: faces.len(),
            });
        };
        let n1 = b.mesh.face(f1);
        let n2 = b.mesh.face(f2);
        let shared: Vec<usize> = n1.iter().copied().filter(|v| n2.contains(v)).collect();
        let e = b.mesh.find_edge(shared[0], shared[1]).expect("shared edge exists");
        let omega = b.grid.cell_center(b.grid.unlinear(idx));
        let [a, bb, c] = n1.map(|v| b.mesh.vertex(v));
        let normal = geom::cross(geom::sub(bb, a), geom::sub(c, a));
        let normal = geom::scale(normal, 1.0 / geom::norm(normal));
        let c1 = geom::project_onto_plane(omega, a, normal);
        let [ea, eb] = b.mesh.edge(e);
        let chi = geom::chi_point(b.mesh.vertex(ea), b.mesh.vertex(eb), c1)?;
        let (phi, psi) = classify_on_edge(b, e, chi, thr);
        let cell = b.table.get_mut(idx);
        cell.phi = phi;
        if psi != NONE {
            cell.psi = psi;
        }
    }
    Ok(())
}

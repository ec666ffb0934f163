use super::{build_vertex_fan, hit, BuildError, Builder};
use crate::geom::{self, Aabb};
use crate::grid::flags;

pub(super) fn run(b: &mut Builder) -> Result<(), BuildError> {
    edge_pass(b);
    b.element_pass();
    b.fallback_pass();
    for v in 0..b.mesh.n_vertices() {
        let fan = build_vertex_fan(&b.mesh, v)?;
        b.fans.push(&fan.angles, &fan.payload);
    }
    Ok(())
}

/// Each cell crossed by an edge takes the edge endpoint nearer to the
/// midpoint of the crossing.
fn edge_pass(b: &mut Builder) {
    let mesh = &b.mesh;
    let grid = &b.grid;
    let eps = b.tol;
    let per_edge = b.map_ids(mesh.n_edges(), |e| {
        let [v1, v2] = mesh.edge(e);
        let (p1, p2) = (mesh.vertex(v1), mesh.vertex(v2));
        let (a, c) = (geom::xy(p1), geom::xy(p2));
        let range = grid.inflate_range(grid.cell_range(&Aabb::from_points([p1, p2].iter())), 1);
        let mut out = Vec::new();
        let mut visits = 0u64;
        for cell in grid.cells_in(range) {
            visits += 1;
            let lo = geom::xy(grid.cell_lo(cell)).map(|x| x - eps);
            let hi = geom::xy(grid.cell_hi(cell)).map(|x| x + eps);
            if let Some((t0, t1)) = geom::segment_box_clip(a, c, lo, hi) {
                let t = 0.5 * (t0 + t1);
                let q = geom::add(p1, geom::scale(geom::sub(p2, p1), t));
                let phi = if geom::dist(q, p1) < geom::dist(q, p2) { v1 } else { v2 };
                out.push((grid.linear(cell) as u32, phi as u32));
            }
        }
        (out, visits)
    });
    for (e, (cells, visits)) in per_edge.into_iter().enumerate() {
        b.stats.edge_visits += visits;
        let boundary = b.mesh.is_boundary_edge(e);
        for (idx, phi) in cells {
            let c = b.table.get_mut(idx as usize);
            c.phi = phi;
            if boundary {
                c.flags |= flags::NEAR_BOUNDARY;
            }
            b.hits[idx as usize] |= hit::EDGE;
        }
    }
}

use serde::Serialize;

use super::BuildError;
use crate::geom::{self, PlaneBasis};
use crate::grid::NONE;
use crate::mesh::MeshTopology;

/// Sector payload for the exterior of a boundary vertex or edge.
pub const EXTERIOR: u32 = NONE;

/// Ascending pseudo-angles of the fan rays; sector `i` lies between ray `i`
/// and ray `i + 1` (the last sector wraps around).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexFan {
    pub vertex: usize,
    pub angles: Vec<f64>,
    pub payload: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeFan {
    pub edge: usize,
    pub anchor: usize,
    #[serde(skip)]
    pub basis: PlaneBasis,
    pub angles: Vec<f64>,
    pub payload: Vec<u32>,
}

/// Sorts rays by pseudo-angle and assigns sectors. `wedges` holds
/// `(element, first ray, second ray)` where the element spans clockwise
/// from the first ray to the second.
fn assemble(
    rays: Vec<(f64, usize)>,
    wedges: &[(usize, usize, usize)],
    what: &str,
    id: usize,
) -> Result<(Vec<f64>, Vec<u32>), BuildError> {
    let mut rays = rays;
    rays.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in rays.windows(2) {
        if w[0].0 >= w[1].0 {
            return Err(BuildError::Fan {
                what: what.to_string(),
                id,
                message: format!("rays to vertices {} and {} share a direction", w[0].1, w[1].1),
            });
        }
    }
    let n = rays.len();
    let slot = |v: usize| rays.iter().position(|r| r.1 == v);
    let mut payload = vec![EXTERIOR; n];
    for &(k, first, second) in wedges {
        let (Some(i), Some(j)) = (slot(first), slot(second)) else {
            return Err(BuildError::Fan {
                what: what.to_string(),
                id,
                message: format!("element {k} references a ray that is not in the fan"),
            });
        };
        if (i + 1) % n != j || payload[i] != EXTERIOR {
            return Err(BuildError::Fan {
                what: what.to_string(),
                id,
                message: format!("element {k} does not occupy a single free sector"),
            });
        }
        payload[i] = k as u32;
    }
    Ok((rays.into_iter().map(|r| r.0).collect(), payload))
}

pub fn build_vertex_fan(mesh: &MeshTopology, v: usize) -> Result<VertexFan, BuildError> {
    let origin = geom::xy(mesh.vertex(v));
    let mut rays = Vec::new();
    for &e in mesh.vertex_edges(v) {
        let [a, b] = mesh.edge(e);
        let other = if a == v { b } else { a };
        let d = geom::xy(mesh.vertex(other));
        let theta = geom::pseudo_angle(d[0] - origin[0], d[1] - origin[1]).map_err(|_| BuildError::Fan {
            what: "vertex".into(),
            id: v,
            message: format!("zero-length edge {e}"),
        })?;
        rays.push((theta.value(), other));
    }
    let mut wedges = Vec::new();
    for &k in mesh.vertex_elements(v) {
        let el = mesh.element(k);
        let n = el.len();
        let i = el.iter().position(|&x| x == v).expect("incidence");
        // counterclockwise ring: the interior sweeps clockwise from prev to next
        wedges.push((k, el[(i + n - 1) % n], el[(i + 1) % n]));
    }
    let (angles, payload) = assemble(rays, &wedges, "vertex", v)?;
    Ok(VertexFan {
        vertex: v,
        angles,
        payload,
    })
}

pub fn build_edge_fan(mesh: &MeshTopology, e: usize) -> Result<EdgeFan, BuildError> {
    let [a, b] = mesh.edge(e);
    let origin = mesh.vertex(a);
    let basis = PlaneBasis::new(origin, geom::sub(mesh.vertex(b), origin)).map_err(|_| BuildError::Fan {
        what: "edge".into(),
        id: e,
        message: "zero-length edge".into(),
    })?;
    let mut rays: Vec<(f64, usize)> = Vec::new();
    let mut wedges = Vec::new();
    for &k in mesh.edge_elements(e) {
        let others: Vec<usize> = mesh.element(k).iter().copied().filter(|&x| x != a && x != b).collect();
        let mut c = [[0.0; 2]; 2];
        for (slot, &x) in others.iter().enumerate() {
            c[slot] = basis.coords(geom::sub(mesh.vertex(x), origin));
            if !rays.iter().any(|r| r.1 == x) {
                let t = geom::pseudo_angle(c[slot][0], c[slot][1]).map_err(|_| BuildError::Fan {
                    what: "edge".into(),
                    id: e,
                    message: format!("vertex {x} projects onto the edge line"),
                })?;
                rays.push((t.value(), x));
            }
        }
        if geom::cross2(c[0], c[1]) < 0.0 {
            wedges.push((k, others[0], others[1]));
        } else {
            wedges.push((k, others[1], others[0]));
        }
    }
    let (angles, payload) = assemble(rays, &wedges, "edge", e)?;
    Ok(EdgeFan {
        edge: e,
        anchor: a,
        basis,
        angles,
        payload,
    })
}

/// Flat storage for all fans of one index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FanTable {
    offsets: Vec<u32>,
    angles: Vec<f64>,
    payload: Vec<u32>,
}

impl FanTable {
    pub fn push(&mut self, angles: &[f64], payload: &[u32]) {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        self.angles.extend_from_slice(angles);
        self.payload.extend_from_slice(payload);
        self.offsets.push(self.angles.len() as u32);
    }

    #[inline]
    pub fn get(&self, i: usize) -> (&[f64], &[u32]) {
        let (a, b) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
        (&self.angles[a..b], &self.payload[a..b])
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_size(&self) -> usize {
        self.offsets
            .windows(2)
            .map(|w| (w[1] - w[0]) as usize)
            .max()
            .unwrap_or(0)
    }
}

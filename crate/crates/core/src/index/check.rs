//! Soundness sweeps over a built index: every in-domain sample of a cell must
//! lie in the patch its vertex (or edge) claims.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::LocatorIndex;
use crate::baselines::CandidateListGrid;
use crate::geom::Point;
use crate::grid::NONE;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SoundnessReport {
    pub cells: usize,
    pub samples: usize,
    /// Samples outside every patch element that the oracle placed outside the domain.
    pub outside_domain: usize,
    pub failures: Vec<(usize, Point)>,
}

impl SoundnessReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Cell corners pulled toward the center by `inset`, plus the center, plus
/// `extra` uniform samples.
pub fn cell_samples(index: &LocatorIndex, idx: usize, inset: f64, extra: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let g = index.grid();
    let c = g.unlinear(idx);
    let center = g.cell_center(c);
    let mut out: Vec<Point> = g
        .cell_corners(c)
        .into_iter()
        .map(|q| {
            let mut p = q;
            for a in 0..g.dim {
                p[a] += if q[a] < center[a] { inset } else { -inset };
            }
            p
        })
        .collect();
    out.push(center);
    let lo = g.cell_lo(c);
    for _ in 0..extra {
        let mut p = [0.0; 3];
        for a in 0..g.dim {
            p[a] = lo[a] + rng.gen::<f64>() * g.s;
        }
        out.push(p);
    }
    out
}

#[derive(Clone, Copy)]
enum Target {
    Vertex,
    Edge,
}

fn sweep(index: &LocatorIndex, oracle: &CandidateListGrid, extra: usize, seed: u64, target: Target) -> SoundnessReport {
    let mesh = index.mesh();
    let tol = index.tol();
    let cells: Vec<usize> = (0..index.table().cells.len())
        .filter(|&i| {
            let c = index.table().get(i);
            c.is_active()
                && match target {
                    Target::Vertex => true,
                    Target::Edge => c.psi != NONE,
                }
        })
        .collect();
    let per_cell: Vec<(usize, usize, Vec<(usize, Point)>)> = cells
        .par_iter()
        .map(|&idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let entry = index.table().get(idx);
            let patch = match target {
                Target::Vertex => mesh.vertex_elements(entry.phi as usize),
                Target::Edge => mesh.edge_elements(entry.psi as usize),
            };
            let samples = cell_samples(index, idx, tol, extra, &mut rng);
            let mut outside = 0;
            let mut failures = Vec::new();
            for &q in &samples {
                if patch.iter().any(|&k| mesh.contains(k, q, tol)) {
                    continue;
                }
                if oracle.in_domain(q) {
                    failures.push((idx, q));
                } else {
                    outside += 1;
                }
            }
            (samples.len(), outside, failures)
        })
        .collect();
    let mut report = SoundnessReport {
        cells: cells.len(),
        ..Default::default()
    };
    for (n, o, f) in per_cell {
        report.samples += n;
        report.outside_domain += o;
        report.failures.extend(f);
    }
    report
}

/// Every in-domain sample of every active cell lies in the patch of its vertex.
pub fn check_phi(index: &LocatorIndex, oracle: &CandidateListGrid, extra: usize, seed: u64) -> SoundnessReport {
    sweep(index, oracle, extra, seed, Target::Vertex)
}

/// Every in-domain sample of every cell with an edge lies in that edge's patch.
pub fn check_psi(index: &LocatorIndex, oracle: &CandidateListGrid, extra: usize, seed: u64) -> SoundnessReport {
    sweep(index, oracle, extra, seed, Target::Edge)
}

/// Cells whose host shortcut does not contain all of their corners.
pub fn check_shortcuts(index: &LocatorIndex) -> Vec<usize> {
    let g = index.grid();
    (0..index.table().cells.len())
        .into_par_iter()
        .filter(|&i| {
            let c = index.table().get(i);
            c.host != NONE
                && !g
                    .cell_corners(g.unlinear(i))
                    .into_iter()
                    .all(|q| index.mesh().contains(c.host as usize, q, index.tol()))
        })
        .collect()
}

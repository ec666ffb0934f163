use std::sync::Arc;

use super::check::{check_phi, check_psi, check_shortcuts};
use super::*;
use crate::baselines::CandidateListGrid;
use crate::mesh::{generate_l_shaped_mesh, generate_mixed_mesh, generate_structured_mesh};

fn build(mesh: MeshTopology) -> LocatorIndex {
    build_index(Arc::new(mesh), &BuildConfig::default()).unwrap()
}

fn assert_sound(index: &LocatorIndex) {
    let oracle = CandidateListGrid::new(index.mesh_arc().clone(), None).unwrap();
    let phi = check_phi(index, &oracle, 4, 1);
    assert!(
        phi.passed(),
        "phi failures: {:?}",
        &phi.failures[..phi.failures.len().min(5)]
    );
    if index.mesh().dim() == 3 {
        let psi = check_psi(index, &oracle, 4, 1);
        assert!(
            psi.passed(),
            "psi failures: {:?}",
            &psi.failures[..psi.failures.len().min(5)]
        );
    }
    assert!(check_shortcuts(index).is_empty());
}

fn regular_tet() -> MeshTopology {
    let v = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
    MeshTopology::new(3, v.to_vec(), vec![vec![0, 1, 2, 3]]).unwrap()
}

#[test]
fn two_triangle_square() {
    let v = vec![[0.0; 3], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
    let index = build(MeshTopology::new(2, v, vec![vec![0, 1, 2], vec![0, 2, 3]]).unwrap());
    let g = index.grid();
    for (i, c) in index.table().cells.iter().enumerate() {
        if c.is_active() {
            assert_ne!(c.phi, NONE);
        }
        let cell = g.unlinear(i);
        let corners = g.cell_corners(cell);
        for k in 0..2 {
            if corners
                .iter()
                .all(|&q| index.mesh().classify(k, q, 0.0).unwrap() == geom::Containment::Inside)
            {
                assert_eq!(c.host, k as u32, "cell {cell:?}");
            }
        }
    }
    assert!(index.stats().shortcut_cells > 0);
    assert_sound(&index);
}

#[test]
fn single_regular_tetrahedron() {
    let index = build(regular_tet());
    assert_eq!(index.stats().n_active, index.table().n_active());
    assert!(index.stats().psi_cells > 0);
    assert_sound(&index);
}

#[test]
fn structured_2d_and_3d_are_sound() {
    assert_sound(&build(generate_structured_mesh(2, [0.0; 3], [1.0; 3], 5).unwrap()));
    assert_sound(&build(generate_structured_mesh(3, [0.0; 3], [1.0; 3], 2).unwrap()));
}

#[test]
fn non_convex_and_polygonal_are_sound() {
    assert_sound(&build(generate_l_shaped_mesh(2, 6).unwrap()));
    assert_sound(&build(generate_l_shaped_mesh(3, 2).unwrap()));
    assert_sound(&build(generate_mixed_mesh(8, 0.2, 4).unwrap()));
}

#[test]
fn fans_partition_patches() {
    let meshes = [
        generate_structured_mesh(2, [0.0; 3], [1.0; 3], 4).unwrap(),
        generate_mixed_mesh(6, 0.2, 9).unwrap(),
        generate_l_shaped_mesh(2, 4).unwrap(),
    ];
    for m in &meshes {
        let index = build(m.clone());
        for v in 0..m.n_vertices() {
            let (angles, payload) = index.fan(v);
            assert!(angles.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(angles.len(), m.vertex_edges(v).len());
            let mut p: Vec<usize> = payload
                .iter()
                .filter(|&&x| x != EXTERIOR)
                .map(|&x| x as usize)
                .collect();
            p.sort_unstable();
            assert_eq!(p, m.vertex_elements(v));
            let ext = payload.len() - p.len();
            assert_eq!(ext, m.is_boundary_vertex(v) as usize);
        }
    }
    let m = generate_l_shaped_mesh(3, 2).unwrap();
    let index = build(m.clone());
    for e in 0..m.n_edges() {
        let (angles, payload) = index.fan(e);
        assert!(angles.windows(2).all(|w| w[0] < w[1]));
        let mut p: Vec<usize> = payload
            .iter()
            .filter(|&&x| x != EXTERIOR)
            .map(|&x| x as usize)
            .collect();
        p.sort_unstable();
        assert_eq!(p, m.edge_elements(e));
    }
}

#[test]
fn builds_are_deterministic() {
    for m in [
        generate_mixed_mesh(6, 0.2, 1).unwrap(),
        generate_structured_mesh(3, [0.0; 3], [1.0; 3], 2).unwrap(),
    ] {
        let m = Arc::new(m);
        let a = build_index(m.clone(), &BuildConfig::default()).unwrap();
        let b = build_index(
            m.clone(),
            &BuildConfig {
                parallel: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a.table(), b.table());
        assert_eq!(a.fans, b.fans);
        let mut da = Vec::new();
        let mut db = Vec::new();
        a.write_dump(&mut da).unwrap();
        b.write_dump(&mut db).unwrap();
        assert_eq!(da, db);
    }
}

#[test]
fn grid_spacing_satisfies_bound() {
    let index = build(generate_structured_mesh(3, [0.0; 3], [1.0; 3], 2).unwrap());
    let m = index.metrics();
    assert!(index.grid().s <= crate::grid::spacing_bound_3d(m.w_star, m.alpha));
    assert!(m.w_star < m.l_min / 2.0);
}

#[test]
fn wrong_dimension_is_rejected() {
    let m = Arc::new(generate_structured_mesh(2, [0.0; 3], [1.0; 3], 2).unwrap());
    let metrics = compute_metrics(&m, WStarPolicy::Default).unwrap();
    let grid = GridSpec::from_metrics(&metrics, m.bbox(), None).unwrap();
    assert!(matches!(
        build_index_3d(m, metrics, grid, &BuildConfig::default()),
        Err(BuildError::Dimension { expected: 3, got: 2 })
    ));
}

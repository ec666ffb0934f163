use std::fs;
use std::path::Path;
use std::process::Command;

use patchloc::mesh::{load_mesh, MeshFormat};

fn patchloc(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_patchloc"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_mesh_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["m.mesh", "m.msh"] {
        let path = dir.path().join(name);
        patchloc(&["gen-mesh", "--dim", "2", "--n", "10", "--out", s(&path)]);
        let mesh = load_mesh(&path, MeshFormat::from_path(&path)).unwrap();
        assert_eq!(mesh.n_elements(), 200);
    }
}

#[test]
fn locate_centroids_and_outside() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("m.msh");
    patchloc(&["gen-mesh", "--dim", "3", "--n", "3", "--out", s(&mesh_path)]);
    let mesh = load_mesh(&mesh_path, MeshFormat::Gmsh22).unwrap();
    let mut text = String::new();
    for k in 0..mesh.n_elements() {
        let c = mesh.centroid(k);
        text += &format!("{} {}\t{}\n", c[0], c[1], c[2]);
    }
    text += "2.0 0.5 0.5\n";
    let pts = dir.path().join("pts.txt");
    fs::write(&pts, text).unwrap();
    for method in ["patch", "auxgrid", "brute"] {
        let out = dir.path().join(format!("{method}.txt"));
        patchloc(&[
            "locate",
            "--mesh",
            s(&mesh_path),
            "--points",
            s(&pts),
            "--method",
            method,
            "--out",
            s(&out),
        ]);
        let ids: Vec<i64> = fs::read_to_string(&out)
            .unwrap()
            .lines()
            .map(|l| l.parse().unwrap())
            .collect();
        let mut want: Vec<i64> = (0..mesh.n_elements() as i64).collect();
        want.push(-1);
        assert_eq!(ids, want, "{method}");
    }
}

#[test]
fn build_reports_stats_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("m.mesh");
    let dump = dir.path().join("dump.txt");
    patchloc(&[
        "gen-mesh",
        "--dim",
        "2",
        "--n",
        "6",
        "--kind",
        "mixed",
        "--out",
        s(&mesh_path),
    ]);
    let out = patchloc(&["build", "--mesh", s(&mesh_path), "--tau", "0.1", "--dump", s(&dump)]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["grid"]["padding"].as_f64(), Some(0.1));
    let active = v["stats"]["n_active"].as_u64().unwrap();
    assert_eq!(
        fs::read_to_string(&dump)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .count() as u64,
        active
    );
    let table = patchloc(&[
        "build",
        "--mesh",
        s(&mesh_path),
        "--format",
        "table",
        "--w-star",
        "0.01",
    ]);
    assert!(String::from_utf8(table.stdout).unwrap().contains("active cells"));
}

#[test]
fn bench_outcomes_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let out = dir.path().join(format!("{tag}.txt"));
        let report = patchloc(&[
            "bench",
            "--dim",
            "2",
            "--n",
            "8",
            "--particles",
            "300",
            "--steps",
            "3",
            "--delta",
            "0.1,5",
            "--seed",
            "11",
            "--method",
            "patch,walk,auxgrid",
            "--reps",
            "1",
            "--format",
            "csv",
            "--outcomes",
            s(&out),
        ]);
        (String::from_utf8(report.stdout).unwrap(), fs::read(&out).unwrap())
    };
    let (csv, a) = run("a");
    let (_, b) = run("b");
    assert_eq!(a, b);
    assert_eq!(
        csv.lines().next().unwrap(),
        "method,delta,init_s,locate_s,n_e,h,s,checks_passed"
    );
    assert_eq!(csv.lines().count(), 1 + 6);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 3 * 2 * 3 * 300);
}

#[test]
fn bad_input_fails() {
    let out = Command::new(env!("CARGO_BIN_EXE_patchloc"))
        .args(["bench", "--particles", "0", "--n", "4"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_patchloc"))
        .args(["locate", "--mesh", "/nonexistent.msh", "--points", "/nonexistent"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
